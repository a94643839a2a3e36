#include "ialpha/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "ialpha/error.hpp"
#include "json.hpp"

namespace ialpha {

namespace {

// Howard Hinnant's civil-date conversions.
long DaysFromCivil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

CalendarDate CivilFromDays(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

// 0 = Monday.
int Weekday(long days) { return static_cast<int>(((days % 7) + 7 + 3) % 7); }

}  // namespace

std::vector<std::string> WeekdayCalendar(const std::string& start, std::size_t count) {
  const CalendarDate cd = ParseIsoDate(start);
  long day = DaysFromCivil(cd.year, static_cast<unsigned>(cd.month), static_cast<unsigned>(cd.day));
  std::vector<std::string> dates;
  dates.reserve(count);
  while (dates.size() < count) {
    if (Weekday(day) < 5) {
      const CalendarDate c = CivilFromDays(day);
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
      dates.emplace_back(buf);
    }
    ++day;
  }
  return dates;
}

SynthData GenerateSynthetic(const SynthSpec& spec) {
  const std::size_t dim = spec.num_features();
  if (dim == 0) throw ConfigError("synthetic spec has D = 0 (d_invariant + d_spurious + d_noise must be >= 1)");
  if (spec.env_period == 0) throw ConfigError("synthetic spec env_period must be >= 1");
  if (spec.num_stocks == 0 || spec.num_dates == 0) {
    throw ConfigError("synthetic spec needs num_stocks >= 1 and num_dates >= 1");
  }
  if (!(spec.noise_std >= 0.0)) throw ConfigError("synthetic spec noise_std must be >= 0");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Planted roles are scattered over the feature axis by a seeded permutation.
  std::vector<std::size_t> perm(dim);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  SynthData out;
  SynthTruth& truth = out.truth;
  truth.env_period = spec.env_period;
  truth.invariant_indices.assign(perm.begin(), perm.begin() + static_cast<long>(spec.d_invariant));
  truth.spurious_indices.assign(perm.begin() + static_cast<long>(spec.d_invariant),
                                perm.begin() + static_cast<long>(spec.d_invariant + spec.d_spurious));
  truth.noise_indices.assign(perm.begin() + static_cast<long>(spec.d_invariant + spec.d_spurious), perm.end());
  std::sort(truth.invariant_indices.begin(), truth.invariant_indices.end());
  std::sort(truth.spurious_indices.begin(), truth.spurious_indices.end());
  std::sort(truth.noise_indices.begin(), truth.noise_indices.end());

  truth.invariant_coefficients.resize(static_cast<Eigen::Index>(spec.d_invariant));
  for (Eigen::Index j = 0; j < truth.invariant_coefficients.size(); ++j) {
    truth.invariant_coefficients(j) = normal(rng);
  }
  // Per-regime magnitudes are fresh draws; the sign alternates between
  // consecutive regimes around a per-feature base sign.
  const std::size_t regimes = spec.num_regimes();
  truth.spurious_coefficients.resize(static_cast<Eigen::Index>(regimes),
                                     static_cast<Eigen::Index>(spec.d_spurious));
  std::vector<double> base_sign(spec.d_spurious);
  for (auto& s : base_sign) s = normal(rng) >= 0.0 ? 1.0 : -1.0;
  for (std::size_t r = 0; r < regimes; ++r) {
    for (std::size_t j = 0; j < spec.d_spurious; ++j) {
      const double flip = (r % 2 == 0) ? 1.0 : -1.0;
      truth.spurious_coefficients(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          flip * base_sign[j] * std::abs(normal(rng));
    }
  }

  PanelDataset& panel = out.panel;
  panel.market = Market::kSynthetic;
  panel.dates = WeekdayCalendar(spec.start_date, spec.num_dates);
  for (std::size_t s = 0; s < spec.num_stocks; ++s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "S%05zu", s);
    panel.stocks.emplace_back(buf);
  }
  for (std::size_t f = 0; f < dim; ++f) panel.feature_names.push_back("f" + std::to_string(f));
  panel.features.resize(spec.num_dates * spec.num_stocks * dim);
  panel.valid.assign(spec.num_dates * spec.num_stocks, 1);
  panel.target_column.resize(spec.num_dates * spec.num_stocks);

  for (std::size_t d = 0; d < spec.num_dates; ++d) {
    const auto regime = static_cast<Eigen::Index>(d / spec.env_period);
    for (std::size_t s = 0; s < spec.num_stocks; ++s) {
      for (std::size_t f = 0; f < dim; ++f) panel.Feature(d, s, f) = normal(rng);
      double y = 0.0;
      for (std::size_t j = 0; j < spec.d_invariant; ++j) {
        y += truth.invariant_coefficients(static_cast<Eigen::Index>(j)) *
             panel.Feature(d, s, truth.invariant_indices[j]);
      }
      for (std::size_t j = 0; j < spec.d_spurious; ++j) {
        y += truth.spurious_coefficients(regime, static_cast<Eigen::Index>(j)) *
             panel.Feature(d, s, truth.spurious_indices[j]);
      }
      y += spec.noise_std * normal(rng);
      panel.target_column[d * spec.num_stocks + s] = y;
    }
  }
  return out;
}

void WriteTruthJson(const SynthTruth& truth, std::ostream& out) {
  nlohmann::json j;
  j["invariant_indices"] = truth.invariant_indices;
  j["spurious_indices"] = truth.spurious_indices;
  j["noise_indices"] = truth.noise_indices;
  j["env_period"] = truth.env_period;
  j["invariant_coefficients"] = std::vector<double>(
      truth.invariant_coefficients.data(),
      truth.invariant_coefficients.data() + truth.invariant_coefficients.size());
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < truth.spurious_coefficients.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(truth.spurious_coefficients.cols()));
    for (Eigen::Index c = 0; c < truth.spurious_coefficients.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = truth.spurious_coefficients(r, c);
    }
    rows.push_back(row);
  }
  j["spurious_coefficients"] = rows;
  out << j.dump(2) << '\n';
}

SynthTruth ReadTruthJson(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
    SynthTruth truth;
    truth.invariant_indices = j.at("invariant_indices").get<std::vector<std::size_t>>();
    truth.spurious_indices = j.at("spurious_indices").get<std::vector<std::size_t>>();
    truth.noise_indices = j.at("noise_indices").get<std::vector<std::size_t>>();
    truth.env_period = j.at("env_period").get<std::size_t>();
    const auto inv = j.at("invariant_coefficients").get<std::vector<double>>();
    truth.invariant_coefficients = Eigen::Map<const Eigen::VectorXd>(inv.data(), static_cast<Eigen::Index>(inv.size()));
    const auto rows = j.at("spurious_coefficients").get<std::vector<std::vector<double>>>();
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    truth.spurious_coefficients.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        truth.spurious_coefficients(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r].at(c);
      }
    }
    return truth;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed truth.json: ") + e.what());
  }
}

}  // namespace ialpha
