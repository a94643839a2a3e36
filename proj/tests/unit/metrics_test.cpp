#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "ialpha/metrics.hpp"
#include "oracles.hpp"

namespace ialpha {
namespace {

TEST(InformationCoefficient, Examples) {
  const std::vector<double> y{0.3, -0.1, 0.8, 0.05};
  std::vector<double> affine, neg;
  for (double v : y) {
    affine.push_back(2 * v + 3);
    neg.push_back(-v);
  }
  EXPECT_NEAR(*InformationCoefficient(y, affine), 1.0, 1e-15);
  EXPECT_NEAR(*InformationCoefficient(y, neg), -1.0, 1e-15);
  EXPECT_NEAR(*InformationCoefficient(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-15);
}

TEST(InformationCoefficient, DegenerateIsUndefined) {
  EXPECT_FALSE(InformationCoefficient(std::vector<double>{1, 2}, std::vector<double>{5, 5}));
  EXPECT_FALSE(InformationCoefficient(std::vector<double>{1}, std::vector<double>{5}));
  EXPECT_FALSE(RankInformationCoefficient(std::vector<double>{3, 3, 3}, std::vector<double>{1, 2, 3}));
}

TEST(RankInformationCoefficient, Examples) {
  const std::vector<double> y{0.3, -0.1, 0.8, 0.05, 0.2};
  std::vector<double> mono, rev;
  for (double v : y) {
    mono.push_back(std::exp(5 * v) + v * v * v);
    rev.push_back(-v * 10);
  }
  EXPECT_NEAR(*RankInformationCoefficient(y, mono), 1.0, 1e-15);
  EXPECT_NEAR(*RankInformationCoefficient(y, rev), -1.0, 1e-15);
  const std::vector<double> a{1, 2, 3}, b{2, 2, 3};
  EXPECT_NEAR(*RankInformationCoefficient(a, b), oracle::Spearman(a, b), 1e-15);
}

TEST(Aggregate, Examples) {
  const RatioSummary flat = Aggregate(std::vector<double>{0.05, 0.05});
  EXPECT_EQ(flat.flag, RatioFlag::kInfinite);
  EXPECT_TRUE(std::isinf(flat.ratio));
  EXPECT_GT(flat.ratio, 0);

  const RatioSummary zero = Aggregate(std::vector<double>{0.1, -0.1});
  EXPECT_EQ(zero.mean, 0.0);
  EXPECT_EQ(zero.ratio, 0.0);

  const RatioSummary r = Aggregate(std::vector<double>{0.02, 0.04, 0.06});
  EXPECT_NEAR(r.mean, 0.04, 1e-15);
  EXPECT_NEAR(r.ratio, 0.04 / std::sqrt(0.0008 / 3.0), 1e-12);
  EXPECT_NEAR(r.ratio, 2.449, 1e-3);

  EXPECT_EQ(Aggregate(std::vector<double>{0.3}).flag, RatioFlag::kUndefined);
}

TEST(EvaluateCrossSections, ExcludesDegenerateDates) {
  std::vector<CrossSection> s{{"d1", {1, 2, 3}, {1, 3, 2}}, {"d2", {1, 2}, {4, 4}}, {"d3", {1}, {1}},
                              {"d4", {1, 2, 3}, {3, 2, 1}}};
  const MetricReport r = EvaluateCrossSections(s);
  EXPECT_EQ(r.num_dates, 2u);
  EXPECT_EQ(r.excluded_dates, (std::vector<std::string>{"d2", "d3"}));
  for (double v : r.per_date_ic) EXPECT_FALSE(std::isnan(v));
  EXPECT_NEAR(r.ic, (0.5 - 1.0) / 2.0, 1e-15);
}

TEST(Properties, RankIcInvariantUnderIncreasingTransforms) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    auto y = fixture::Normals(rng, 25), p = fixture::Normals(rng, 25);
    p[2] = p[5];
    std::vector<double> ty(y), tp(p);
    for (auto& v : ty) v = std::exp(v);
    for (auto& v : tp) v = 3 * v * v * v + 1;
    EXPECT_NEAR(*RankInformationCoefficient(y, p), *RankInformationCoefficient(ty, tp), 1e-12);
    const double ic = *InformationCoefficient(y, p);
    EXPECT_LE(std::abs(ic), 1.0);
  }
}

TEST(Properties, AgreesWithBruteForceOnRandomCrossSections) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> size(2, 40);
  std::uniform_int_distribution<int> level(0, 4);
  std::vector<CrossSection> sections;
  std::vector<double> ic_oracle, ric_oracle;
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(size(rng));
    CrossSection s;
    s.date = std::to_string(t);
    s.y = fixture::Normals(rng, n);
    s.prediction = fixture::Normals(rng, n);
    if (t % 3 == 0) {
      for (auto& v : s.prediction) v = level(rng);  // heavy ties
    }
    const double ic = oracle::Pearson(s.y, s.prediction);
    const double ric = oracle::Spearman(s.y, s.prediction);
    const auto lic = InformationCoefficient(s.y, s.prediction);
    const auto lric = RankInformationCoefficient(s.y, s.prediction);
    ASSERT_EQ(std::isnan(ic), !lic.has_value());
    if (lic) {
      EXPECT_NEAR(*lic, ic, 1e-10);
      EXPECT_NEAR(*lric, ric, 1e-10);
      ic_oracle.push_back(ic);
      ric_oracle.push_back(ric);
    }
    sections.push_back(std::move(s));
  }
  const MetricReport r = EvaluateCrossSections(sections);
  ASSERT_EQ(r.num_dates, ic_oracle.size());
  EXPECT_NEAR(r.ic, oracle::Mean(ic_oracle), 1e-10);
  EXPECT_NEAR(r.icir, oracle::Mean(ic_oracle) / oracle::PopStd(ic_oracle), 1e-10);
  EXPECT_NEAR(r.rankic, oracle::Mean(ric_oracle), 1e-10);
  EXPECT_NEAR(r.rankicir, oracle::Mean(ric_oracle) / oracle::PopStd(ric_oracle), 1e-10);
}

TEST(MetricReport, JsonCarriesSchemaFields) {
  const MetricReport r = EvaluateCrossSections(std::vector<CrossSection>{{"a", {1, 2, 3}, {1, 2, 3}},
                                                                          {"b", {1, 2, 3}, {1, 3, 2}}});
  const std::string json = r.ToJson();
  for (const char* key : {"\"ic\"", "\"icir\"", "\"rankic\"", "\"rankicir\"", "\"per_date_ic\"", "\"per_date_rankic\"",
                          "\"num_dates\"", "\"excluded_date_count\""}) {
    EXPECT_NE(json.find(key), std::string::npos) << key;
  }
}

}  // namespace
}  // namespace ialpha
