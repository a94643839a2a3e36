#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ialpha/panel.hpp"

namespace ialpha {

// Synthetic multi-regime panel with planted invariant and spurious features.
struct SynthSpec {
  std::size_t num_stocks = 200;
  std::size_t num_dates = 600;
  std::size_t d_invariant = 4;
  std::size_t d_spurious = 4;
  std::size_t d_noise = 4;
  std::size_t env_period = 150;
  std::uint64_t seed = 0;
  double noise_std = 1.0;
  std::string start_date = "2000-01-03";

  std::size_t num_features() const { return d_invariant + d_spurious + d_noise; }
  std::size_t num_regimes() const { return env_period == 0 ? 0 : (num_dates + env_period - 1) / env_period; }
};

struct SynthTruth {
  std::vector<std::size_t> invariant_indices;
  std::vector<std::size_t> spurious_indices;
  std::vector<std::size_t> noise_indices;
  Eigen::VectorXd invariant_coefficients;   // [d_invariant]
  Eigen::MatrixXd spurious_coefficients;    // [num_regimes × d_spurious]
  std::size_t env_period = 1;
};

struct SynthData {
  PanelDataset panel;
  SynthTruth truth;
};

// y[t,s] = inv·x_inv + coeffs[regime(t)]·x_spur + ε with every feature i.i.d.
// N(0,1) at each date and ε ~ N(0, noise_std²). Deterministic in `spec.seed`.
SynthData GenerateSynthetic(const SynthSpec& spec);

void WriteTruthJson(const SynthTruth& truth, std::ostream& out);
SynthTruth ReadTruthJson(std::istream& in);

// Consecutive weekdays starting at `start` (which must itself be a weekday).
std::vector<std::string> WeekdayCalendar(const std::string& start, std::size_t count);

}  // namespace ialpha
