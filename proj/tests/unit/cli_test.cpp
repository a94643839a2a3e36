#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "ialpha/error.hpp"
#include "ialpha/panel.hpp"
#include "ialpha/workflow.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Running position after every fill, in ledger order.
std::vector<std::pair<std::string, double>> FillPositions(const fs::path& ledger_path) {
  std::istringstream ledger(Slurp(ledger_path));
  std::string line;
  std::getline(ledger, line);
  std::map<std::string, double> position;
  std::vector<std::pair<std::string, double>> history;
  while (std::getline(ledger, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (cells.size() < 5 || cells[2] != "fill") continue;
    position[cells[1]] += std::stod(cells[4]);
    history.emplace_back(cells[1], position[cells[1]]);
  }
  return history;
}

struct Result {
  int code;
  std::string output;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("ialpha_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!HasFailure()) fs::remove_all(dir_);
  }

  Result Run(const std::string& args) const {
    const fs::path log = dir_ / "cli_output.txt";
    const std::string cmd = std::string(IALPHA_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, Slurp(log)};
  }

  fs::path Config(const std::string& name, const nlohmann::json& j) const {
    const fs::path p = dir_ / name;
    Spit(p, j.dump(1));
    return p;
  }

  static nlohmann::json SynthConfig() {
    return nlohmann::json::parse(R"({
      "market": "synthetic",
      "data": "panel.csv",
      "splits": {"train": ["2000-01-03", "2000-02-11"], "valid": ["2000-02-14", "2000-02-25"],
                 "test": ["2000-02-28", "2000-03-24"]},
      "environment": {"kind": "regime", "period": 20},
      "synth": {"num_stocks": 15, "num_dates": 60, "env_period": 20, "d_invariant": 2, "d_spurious": 2,
                "d_noise": 1},
      "model": {"T": 3, "H": 4, "K": 2, "head_hidden": 4, "mask_hidden": 4, "recon_hidden": 6},
      "train": {"epochs": 3},
      "seed": 7
    })");
  }

  // Random-walk prices for `stocks` names over `days` weekdays.
  void WritePricePanel(const fs::path& path, ialpha::Market market, int stocks, int days, int prefix_300 = 0) const {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> step(0.0, 0.02);
    std::ostringstream out;
    const auto& names = market == ialpha::Market::kChina ? ialpha::ChinaFeatureNames() : ialpha::UsFeatureNames();
    out << "stock_id,date";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    std::vector<double> close(static_cast<std::size_t>(stocks), 10.0);
    for (int d = 0; d < days; ++d) {
      const int month = 1 + d / 20;
      const int day = 1 + d % 20;
      char date[16];
      std::snprintf(date, sizeof(date), "2019-%02d-%02d", month, day);
      for (int s = 0; s < stocks; ++s) {
        const double open = close[s] * (1.0 + step(rng) * 0.5);
        close[s] = open * (1.0 + step(rng));
        const std::string id = (s < prefix_300 ? "300" : "600") + std::to_string(100 + s);
        out << id << ',' << date;
        for (const auto& n : names) {
          double v = 1.0 + step(rng);
          if (n == "open") v = open;
          if (n == "close") v = close[s];
          out << ',' << v;
        }
        out << '\n';
      }
    }
    Spit(path, out.str());
  }

  nlohmann::json PriceConfig(const std::string& market) const {
    auto j = nlohmann::json::parse(R"({
      "data": "prices.csv",
      "splits": {"train": ["2019-01-01", "2019-02-20"], "valid": ["2019-03-01", "2019-03-10"],
                 "test": ["2019-03-11", "2019-04-20"]},
      "model": {"T": 3, "H": 4, "K": 2, "head_hidden": 4, "mask_hidden": 4, "recon_hidden": 6},
      "train": {"epochs": 3},
      "backtest": {"k": 3},
      "seed": 3
    })");
    j["market"] = market;
    return j;
  }

  fs::path dir_;
};

TEST_F(CliTest, SynthWritesReingestableFilesDeterministically) {
  auto cfg = SynthConfig();
  cfg["output_dir"] = "a";
  const fs::path path = Config("synth.json", cfg);
  ASSERT_EQ(Run("synth -c " + path.string()).code, 0);
  ASSERT_EQ(Run("synth -c " + path.string() + " -o " + (dir_ / "b").string()).code, 0);
  EXPECT_EQ(Slurp(dir_ / "a/panel.csv"), Slurp(dir_ / "b/panel.csv"));
  EXPECT_EQ(Slurp(dir_ / "a/truth.json"), Slurp(dir_ / "b/truth.json"));
  EXPECT_EQ(Slurp(dir_ / "a/config.json"), Slurp(path));
  std::ifstream in(dir_ / "a/panel.csv");
  const ialpha::PanelDataset p = ialpha::IngestCsv(in, ialpha::Market::kSynthetic);
  EXPECT_EQ(p.num_dates(), 60u);
  EXPECT_EQ(p.num_stocks(), 15u);
  ASSERT_EQ(Run("synth -c " + path.string() + " --seed 8 -o " + (dir_ / "c").string()).code, 0);
  EXPECT_NE(Slurp(dir_ / "a/panel.csv"), Slurp(dir_ / "c/panel.csv"));
}

TEST_F(CliTest, SynthWithoutFeaturesFails) {
  auto cfg = SynthConfig();
  cfg["synth"]["d_invariant"] = 0;
  cfg["synth"]["d_spurious"] = 0;
  cfg["synth"]["d_noise"] = 0;
  const Result r = Run("synth -c " + Config("zero.json", cfg).string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("D = 0"), std::string::npos) << r.output;
}

TEST_F(CliTest, ConfigAndDataErrorsMapToExitCodes) {
  auto cfg = SynthConfig();
  cfg["mystery"] = 1;
  EXPECT_EQ(Run("synth -c " + Config("bad.json", cfg).string()).code, 2);
  auto missing = SynthConfig();
  missing["data"] = "nowhere.csv";
  const Result r = Run("train -c " + Config("missing.json", missing).string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("nowhere.csv"), std::string::npos) << r.output;
}

TEST_F(CliTest, TrainIsReproducibleAndEvaluates) {
  const fs::path path = Config("run.json", SynthConfig());
  ASSERT_EQ(Run("synth -c " + path.string() + " -o " + dir_.string()).code, 0);
  const Result first = Run("train -c " + path.string() + " -o " + (dir_ / "r1").string());
  ASSERT_EQ(first.code, 0) << first.output;
  ASSERT_EQ(Run("train -c " + path.string() + " -o " + (dir_ / "r2").string()).code, 0);
  const std::string log = Slurp(dir_ / "r1/train_log.csv");
  EXPECT_EQ(log, Slurp(dir_ / "r2/train_log.csv"));
  EXPECT_EQ(Slurp(dir_ / "r1/checkpoint.json"), Slurp(dir_ / "r2/checkpoint.json"));
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 4);
  EXPECT_EQ(log.rfind("epoch,phase,L_pred,L_rank,L_KL,L_recon,total,valid_rankic\n", 0), 0u);

  const std::string ckpt = (dir_ / "r1/checkpoint.json").string();
  ASSERT_EQ(Run("evaluate -c " + path.string() + " --checkpoint " + ckpt + " -o " + (dir_ / "r1").string()).code, 0);
  const auto metrics = nlohmann::json::parse(Slurp(dir_ / "r1/metrics.json"));
  for (const char* key : {"ic", "icir", "rankic", "rankicir", "num_dates"}) EXPECT_TRUE(metrics.contains(key)) << key;

  ASSERT_EQ(Run("evaluate -c " + path.string() + " --checkpoint " + ckpt + " --oracle-predictions -o " +
                (dir_ / "oracle").string())
                .code,
            0);
  const auto oracle = nlohmann::json::parse(Slurp(dir_ / "oracle/metrics.json"));
  EXPECT_DOUBLE_EQ(oracle["ic"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(oracle["rankic"].get<double>(), 1.0);

  ASSERT_EQ(Run("mask-report -c " + path.string() + " --checkpoint " + ckpt + " -o " + (dir_ / "r1").string()).code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "r1/mean_mask.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "r1/top_trades.json"));

  // A checkpoint trained with a different look-back is rejected.
  ASSERT_EQ(Run("train -c " + path.string() + " --lookback 2 -o " + (dir_ / "t2").string()).code, 0);
  auto other = SynthConfig();
  other["synth"]["d_noise"] = 2;
  other["data"] = "other/panel.csv";
  const fs::path other_path = Config("other.json", other);
  ASSERT_EQ(Run("synth -c " + other_path.string() + " -o " + (dir_ / "other").string()).code, 0);
  EXPECT_EQ(Run("evaluate -c " + other_path.string() + " --checkpoint " + ckpt + " -o " + (dir_ / "x").string()).code, 3);
}

TEST_F(CliTest, WeightedModeRecordedInCheckpoint) {
  const fs::path path = Config("run.json", SynthConfig());
  ASSERT_EQ(Run("synth -c " + path.string() + " -o " + dir_.string()).code, 0);
  ASSERT_EQ(Run("train -c " + path.string() + " --binarize-mode weighted -o " + (dir_ / "w").string()).code, 0);
  const auto ckpt = nlohmann::json::parse(Slurp(dir_ / "w/checkpoint.json"));
  EXPECT_EQ(ckpt["hyperparameters"]["binarize_mode"], "weighted");
  EXPECT_NE(Run("train -c " + path.string() + " --binarize-mode fuzzy -o " + (dir_ / "f").string()).code, 0);
}

TEST_F(CliTest, UsKSweepEmitsOneReportPerK) {
  WritePricePanel(dir_ / "prices.csv", ialpha::Market::kUS, 12, 80);
  const fs::path path = Config("us.json", PriceConfig("us"));
  ASSERT_EQ(Run("train -c " + path.string() + " -o " + dir_.string()).code, 0);
  const std::string ckpt = (dir_ / "checkpoint.json").string();
  const Result r = Run("backtest -c " + path.string() + " --checkpoint " + ckpt + " --k-sweep 1,10,100");
  ASSERT_EQ(r.code, 0) << r.output;
  const fs::path out = dir_ / "out";
  for (const char* k : {"1", "10", "100"}) {
    EXPECT_TRUE(fs::exists(out / ("report_k" + std::string(k) + ".json"))) << k;
    EXPECT_TRUE(fs::exists(out / ("ledger_k" + std::string(k) + ".csv"))) << k;
  }
  const auto report = nlohmann::json::parse(Slurp(out / "report_k1.json"));
  for (const char* key : {"arr", "mdd", "sr", "cumulative_returns", "turnover"}) EXPECT_TRUE(report.contains(key));
  // The US book goes short.
  double most_negative = 0.0;
  for (const auto& [stock, qty] : FillPositions(out / "ledger_k1.csv")) most_negative = std::min(most_negative, qty);
  EXPECT_LT(most_negative, 0.0);
}

TEST_F(CliTest, ChinaIsLongOnly) {
  WritePricePanel(dir_ / "prices.csv", ialpha::Market::kChina, 10, 80, 3);
  const fs::path path = Config("cn.json", PriceConfig("china"));
  ASSERT_EQ(Run("train -c " + path.string() + " -o " + dir_.string()).code, 0);
  const Result r = Run("backtest -c " + path.string() + " --checkpoint " + (dir_ / "checkpoint.json").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto history = FillPositions(dir_ / "out/ledger.csv");
  EXPECT_FALSE(history.empty());
  for (const auto& [stock, qty] : history) EXPECT_GE(qty, -1e-9) << stock;
}

TEST_F(CliTest, DatasetBenchmarkMatchesEqualWeightReturns) {
  WritePricePanel(dir_ / "prices.csv", ialpha::Market::kUS, 8, 80);
  const fs::path path = Config("us.json", PriceConfig("us"));
  ASSERT_EQ(Run("train -c " + path.string() + " -o " + dir_.string()).code, 0);
  ASSERT_EQ(Run("backtest -c " + path.string() + " --checkpoint " + (dir_ / "checkpoint.json").string() +
                " --dataset-benchmark")
                .code,
            0);
  // Independent recomputation from the raw CSV: mean close-to-close ratio.
  std::ifstream in(dir_ / "prices.csv");
  const ialpha::PanelDataset p = ialpha::IngestCsv(in, ialpha::Market::kUS);
  std::istringstream equity(Slurp(dir_ / "out/equity.csv"));
  std::string line;
  std::getline(equity, line);
  std::vector<std::pair<std::string, double>> curve;
  while (std::getline(equity, line)) {
    const auto comma = line.find(',');
    const auto second = line.find(',', comma + 1);
    curve.emplace_back(line.substr(0, comma), std::stod(line.substr(comma + 1, second - comma - 1)));
  }
  ASSERT_GE(curve.size(), 2u);
  double expected = 1.0;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const std::size_t t = *p.DateIndex(curve[i].first);
    double sum = 0.0;
    for (std::size_t s = 0; s < p.num_stocks(); ++s) sum += p.Feature(t + 1, s, 3) / p.Feature(t, s, 3) - 1.0;
    expected *= 1.0 + sum / static_cast<double>(p.num_stocks());
    EXPECT_NEAR(curve[i + 1].second / curve.front().second, expected, 1e-10) << curve[i + 1].first;
  }
}

TEST(SplitHygiene, EvaluationOutsideTestRangeIsContractViolation) {
  ialpha::WindowBatch inside, outside;
  inside.date = "2020-05-04";
  outside.date = "2020-03-02";
  const ialpha::DateRange test{"2020-05-01", "2020-06-30"};
  ialpha::ModelConfig c;
  c.env_dim = 1;
  c.lookback = 1;
  c.num_features = 1;
  c.hidden = c.latent = c.head_hidden = c.mask_hidden = c.recon_hidden = 2;
  ialpha::InvariantModel model(c, 0);
  const ialpha::InferenceModel inference(c, true, model.InferenceTensors());
  const std::vector<ialpha::WindowBatch> batches = {inside, outside};
  try {
    ialpha::EvaluateBatches(inference, batches, test, true);
    FAIL();
  } catch (const ialpha::Error& e) {
    EXPECT_EQ(e.kind(), ialpha::ErrorKind::kContract);
  }
}

}  // namespace
