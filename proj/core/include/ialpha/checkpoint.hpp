#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ialpha/models.hpp"
#include "ialpha/panel.hpp"

namespace ialpha {

// Inference footprint of a trained model: the mask model and the
// environment-agnostic prediction module, plus enough metadata to rebuild them.
//
// On disk this is a JSON document:
//   {"format": "ialpha-checkpoint", "version": 1,
//    "hyperparameters": {"T", "D", "H", "K", "head_hidden", "mask_hidden",
//                        "recon_hidden", "binarize_mode", "mask_enabled"},
//    "schema": {"market", "feature_names", "fingerprint"},
//    "tensors": {"<name>": {"shape": [rows, cols], "data": [column-major values]}}}
// Doubles are written in shortest round-trip form, so reloads are bit-exact.
struct Checkpoint {
  ModelConfig config;
  bool mask_enabled = true;
  Market market = Market::kUS;
  std::vector<std::string> feature_names;
  std::string fingerprint;
  std::map<std::string, Eigen::MatrixXd> tensors;

  std::string ToJson() const;
  static Checkpoint FromJson(const std::string& text);

  // Atomic: writes `<path>.tmp` then renames over `path`.
  void Save(const std::filesystem::path& path) const;
  static Checkpoint Load(const std::filesystem::path& path);
};

// Stable 64-bit FNV-1a digest of (T, feature names) rendered as hex.
std::string SchemaFingerprint(std::size_t lookback, const std::vector<std::string>& feature_names);

}  // namespace ialpha
