#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "ialpha/error.hpp"
#include "ialpha/mask_report.hpp"

namespace ialpha {
namespace {

const std::vector<std::string> kNames = {"a", "b", "c", "d", "e"};

InferenceModel ModelWithMask(const std::function<void(const nn::ParameterList&)>& edit, std::uint64_t seed = 1) {
  const InvariantModel model(fixture::TinyConfig(), seed);
  edit(model.mask().Parameters());
  return InferenceModel(fixture::TinyConfig(), true, model.InferenceTensors());
}

WindowBatch ConstantBatch(const std::string& date, double value, std::size_t n = 3) {
  std::mt19937_64 rng(0);
  WindowBatch b = fixture::RandomBatch(rng, fixture::TinyConfig(), n, date);
  b.x.setConstant(value);
  return b;
}

TEST(MeanMask, SaturatedOnesAverageToOne) {
  const InferenceModel model = ModelWithMask([](const nn::ParameterList& p) {
    p.items()[2].node->value.setZero();
    p.items()[3].node->value.setConstant(40.0);
  });
  std::mt19937_64 rng(2);
  const std::vector<WindowBatch> data = {fixture::RandomBatch(rng, fixture::TinyConfig(), 4),
                                         fixture::RandomBatch(rng, fixture::TinyConfig(), 2)};
  const MaskSummary s = MeanMask(model, data, kNames);
  EXPECT_EQ(s.sample_count, 6u);
  EXPECT_EQ(s.mean_mask.rows(), 4);
  EXPECT_EQ(s.mean_mask.cols(), 5);
  EXPECT_TRUE(s.mean_mask.isOnes());
}

TEST(MeanMask, OnesAndZerosAverageToHalf) {
  // Positive inputs saturate every logit high and negative inputs low.
  const InferenceModel model = ModelWithMask([](const nn::ParameterList& p) {
    p.items()[0].node->value.setOnes();
    p.items()[1].node->value.setZero();
    p.items()[2].node->value.setConstant(10.0);
    p.items()[3].node->value.setZero();
  });
  const std::vector<WindowBatch> data = {ConstantBatch("2020-01-02", 1.0, 1), ConstantBatch("2020-01-03", -1.0, 1)};
  EXPECT_TRUE(model.Infer(data[0]).mask.isOnes());
  EXPECT_TRUE(model.Infer(data[1]).mask.isZero(0.0));
  const MaskSummary s = MeanMask(model, data, kNames);
  EXPECT_TRUE(s.mean_mask.isApproxToConstant(0.5, 0.0));
}

TEST(MeanMask, MatchesBruteForceAverage) {
  const InferenceModel model = ModelWithMask([](const nn::ParameterList&) {}, 5);
  std::mt19937_64 rng(6);
  std::vector<WindowBatch> data;
  for (std::size_t i = 0; i < 7; ++i) data.push_back(fixture::RandomBatch(rng, fixture::TinyConfig(), 3 + i));
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 5);
  double count = 0;
  for (const auto& b : data) {
    const Eigen::MatrixXd m = model.Infer(b).mask;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index t = 0; t < 4; ++t) {
        for (Eigen::Index d = 0; d < 5; ++d) sum(t, d) += m(r, t * 5 + d);
      }
      count += 1;
    }
  }
  const MaskSummary s = MeanMask(model, data, kNames);
  EXPECT_LE((s.mean_mask - sum / count).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE((s.mean_mask.array() >= 0.0 && s.mean_mask.array() <= 1.0).all());
}

TEST(MeanMask, EmptySplitIsError) {
  const InferenceModel model = ModelWithMask([](const nn::ParameterList&) {});
  try {
    MeanMask(model, {}, kNames);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

LedgerRecord Fill(const std::string& date, const std::string& stock, double qty, double price) {
  LedgerRecord r;
  r.date = date;
  r.stock = stock;
  r.quantity = qty;
  r.price = price;
  r.notional = qty * price;
  return r;
}

// Round trips returning +0.1, −0.05 and +0.3, plus one still open.
TradeLedger ScriptedLedger() {
  TradeLedger l;
  l.records = {Fill("2020-01-02", "S0", 1.0, 10.0), Fill("2020-01-02", "S1", 2.0, 20.0),
               Fill("2020-01-03", "S0", -1.0, 11.0), Fill("2020-01-03", "S1", -2.0, 19.0),
               Fill("2020-01-03", "S2", 1.0, 10.0),  Fill("2020-01-06", "S2", -1.0, 13.0),
               Fill("2020-01-06", "S0", 3.0, 5.0)};
  return l;
}

TEST(RoundTrips, ExtractedFromFills) {
  const auto trips = ExtractRoundTrips(ScriptedLedger());
  ASSERT_EQ(trips.size(), 3u);
  EXPECT_NEAR(trips[0].realized_return, 0.1, 1e-12);
  EXPECT_NEAR(trips[1].realized_return, -0.05, 1e-12);
  EXPECT_NEAR(trips[2].realized_return, 0.3, 1e-12);
  EXPECT_EQ(trips[2].entry_date, "2020-01-03");
  TradeLedger shorts;
  shorts.records = {Fill("d1", "X", -2.0, 10.0), Fill("d2", "X", 2.0, 8.0)};
  const auto s = ExtractRoundTrips(shorts);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_FALSE(s[0].is_long);
  EXPECT_NEAR(s[0].realized_return, 0.2, 1e-12);
}

TEST(TopTradeMasks, PicksMostProfitable) {
  const InferenceModel model = ModelWithMask([](const nn::ParameterList&) {}, 7);
  std::mt19937_64 rng(8);
  std::vector<WindowBatch> data = {fixture::RandomBatch(rng, fixture::TinyConfig(), 3, "2020-01-02"),
                                   fixture::RandomBatch(rng, fixture::TinyConfig(), 3, "2020-01-03")};
  const TopTrades top = TopTradeMasks(model, ScriptedLedger(), data, 1);
  ASSERT_EQ(top.trades.size(), 1u);
  EXPECT_EQ(top.trades[0].trip.stock, "S2");
  EXPECT_NEAR(top.trades[0].trip.realized_return, 0.3, 1e-12);
  const Eigen::MatrixXd expected = WindowMask(model.Infer(data[1]).mask, 2, 4, 5);
  EXPECT_EQ(top.trades[0].mask, expected);
  EXPECT_TRUE((expected.array() == 0.0 || expected.array() == 1.0).all());
  EXPECT_TRUE(top.note.empty());

  EXPECT_TRUE(TopTradeMasks(model, ScriptedLedger(), data, 0).trades.empty());
  const TopTrades all = TopTradeMasks(model, ScriptedLedger(), data, 10);
  EXPECT_EQ(all.trades.size(), 3u);
  EXPECT_FALSE(all.note.empty());
  EXPECT_NE(all.ToJson(kNames).find("\"note\""), std::string::npos);
}

}  // namespace
}  // namespace ialpha
