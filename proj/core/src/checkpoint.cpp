#include "ialpha/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ialpha/error.hpp"
#include "json.hpp"

namespace ialpha {

std::string SchemaFingerprint(std::size_t lookback, const std::vector<std::string>& feature_names) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  mix(std::to_string(lookback));
  for (const auto& name : feature_names) mix(name);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string Checkpoint::ToJson() const {
  nlohmann::ordered_json j;
  j["format"] = "ialpha-checkpoint";
  j["version"] = 1;
  auto& hp = j["hyperparameters"];
  hp["T"] = config.lookback;
  hp["D"] = config.num_features;
  hp["H"] = config.hidden;
  hp["K"] = config.latent;
  hp["head_hidden"] = config.head_hidden;
  hp["mask_hidden"] = config.mask_hidden;
  hp["recon_hidden"] = config.recon_hidden;
  hp["binarize_mode"] = std::string(BinarizeModeName(config.binarize_mode));
  hp["mask_enabled"] = mask_enabled;
  auto& schema = j["schema"];
  schema["market"] = std::string(MarketName(market));
  schema["feature_names"] = feature_names;
  schema["fingerprint"] = fingerprint;
  auto& tensors_json = j["tensors"];
  tensors_json = nlohmann::ordered_json::object();
  for (const auto& [name, m] : tensors) {
    nlohmann::ordered_json t;
    t["shape"] = {m.rows(), m.cols()};
    t["data"] = std::vector<double>(m.data(), m.data() + m.size());
    tensors_json[name] = std::move(t);
  }
  return j.dump(1) + "\n";
}

Checkpoint Checkpoint::FromJson(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "ialpha-checkpoint" || j.at("version").get<int>() != 1) {
      throw Error(ErrorKind::kIncompatibleCheckpoint, "unsupported checkpoint format/version");
    }
    Checkpoint ckpt;
    const auto& hp = j.at("hyperparameters");
    ckpt.config.lookback = hp.at("T").get<std::size_t>();
    ckpt.config.num_features = hp.at("D").get<std::size_t>();
    ckpt.config.hidden = hp.at("H").get<std::size_t>();
    ckpt.config.latent = hp.at("K").get<std::size_t>();
    ckpt.config.head_hidden = hp.at("head_hidden").get<std::size_t>();
    ckpt.config.mask_hidden = hp.at("mask_hidden").get<std::size_t>();
    ckpt.config.recon_hidden = hp.at("recon_hidden").get<std::size_t>();
    ckpt.config.binarize_mode = ParseBinarizeMode(hp.at("binarize_mode").get<std::string>());
    ckpt.mask_enabled = hp.at("mask_enabled").get<bool>();
    const auto& schema = j.at("schema");
    ckpt.market = ParseMarket(schema.at("market").get<std::string>());
    ckpt.feature_names = schema.at("feature_names").get<std::vector<std::string>>();
    ckpt.fingerprint = schema.at("fingerprint").get<std::string>();
    for (const auto& [name, t] : j.at("tensors").items()) {
      const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
      const auto data = t.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || static_cast<std::size_t>(shape[0] * shape[1]) != data.size()) {
        throw Error(ErrorKind::kIncompatibleCheckpoint, "tensor '" + name + "' has inconsistent shape");
      }
      ckpt.tensors.emplace(name, Eigen::Map<const Eigen::MatrixXd>(data.data(), shape[0], shape[1]));
    }
    if (ckpt.fingerprint != SchemaFingerprint(ckpt.config.lookback, ckpt.feature_names)) {
      throw Error(ErrorKind::kIncompatibleCheckpoint, "checkpoint fingerprint does not match its schema");
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kIncompatibleCheckpoint, std::string("malformed checkpoint: ") + e.what());
  }
}

void Checkpoint::Save(const std::filesystem::path& path) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    out << ToJson();
    if (!out.good()) throw DataError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str());
}

}  // namespace ialpha
