#include <fstream>
#include <stdexcept>
#include <string>

#include "graphhist/model.hpp"
#include "json.hpp"

namespace graphhist {

namespace {

constexpr const char* kMagic = "GRAPHHIST-CKPT-1";

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return {
      {"bins", cfg.bins},
      {"max_power", cfg.max_power},
      {"embed_width", cfg.embed_width},
      {"dropout", cfg.dropout},
      {"classes", cfg.classes},
      {"in_features", cfg.in_features},
      {"alpha", cfg.alpha},
      {"normalize_hist", cfg.normalize_hist},
  };
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.bins = j.at("bins").get<std::int64_t>();
  cfg.max_power = j.at("max_power").get<std::int64_t>();
  cfg.embed_width = j.at("embed_width").get<std::int64_t>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.classes = j.at("classes").get<std::int64_t>();
  cfg.in_features = j.at("in_features").get<std::int64_t>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.normalize_hist = j.at("normalize_hist").get<bool>();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params) {
  nlohmann::json header;
  header["config"] = config_to_json(cfg);
  header["tensors"] = nlohmann::json::array();
  params.for_each([&header](const std::string& name, const Tensor& t) {
    header["tensors"].push_back({{"name", name}, {"shape", t.shape}});
  });

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << kMagic << "\n" << header.dump() << "\n";
  params.for_each([&out](const std::string&, const Tensor& t) {
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  });
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string magic, header_line;
  if (!std::getline(in, magic) || magic != kMagic) {
    throw std::runtime_error(path + ": not a checkpoint file");
  }
  if (!std::getline(in, header_line)) {
    throw std::runtime_error(path + ": missing checkpoint header");
  }
  nlohmann::json header = nlohmann::json::parse(header_line);

  Checkpoint ckpt;
  ckpt.config = config_from_json(header.at("config"));
  ckpt.params = zero_params(ckpt.config);

  std::size_t manifest_index = 0;
  const auto& manifest = header.at("tensors");
  ckpt.params.for_each([&](const std::string& name, Tensor& t) {
    if (manifest_index >= manifest.size()) {
      throw std::runtime_error(path + ": tensor manifest shorter than model");
    }
    const auto& entry = manifest[manifest_index++];
    if (entry.at("name").get<std::string>() != name ||
        entry.at("shape").get<std::vector<std::int64_t>>() != t.shape) {
      throw std::runtime_error(path + ": checkpoint does not match its own config at tensor '" +
                               name + "'");
    }
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated tensor data for '" + name + "'");
  });
  if (manifest_index != manifest.size()) {
    throw std::runtime_error(path + ": tensor manifest longer than model");
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expect) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!(ckpt.config == expect)) {
    throw std::runtime_error(path + ": checkpoint config does not match the requested config");
  }
  return ckpt;
}

}  // namespace graphhist
