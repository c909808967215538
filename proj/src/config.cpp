#include "aliknet/config.hpp"

#include <fstream>
#include <initializer_list>

#include "aliknet/errors.hpp"

namespace aliknet {

namespace {

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    throw ConfigError(where + " must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key '" + where + "." + key + "'");
    }
  }
}

template <typename T>
void pull(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

}  // namespace

json network_config_to_json(const NetworkConfig& cfg) {
  return json{
      {"dims", {{"t", cfg.T}, {"x", cfg.X}, {"y", cfg.Y}, {"c", cfg.C}}},
      {"network",
       {{"iterations", cfg.iterations},
        {"filters", cfg.filters},
        {"knet_filters", cfg.knet_filters},
        {"patches", {cfg.patches.nt, cfg.patches.nx, cfg.patches.ny}},
        {"spatial_kernel", cfg.spatial_kernel},
        {"temporal_kernel", cfg.temporal_kernel},
        {"kspace_kernel", cfg.kspace_kernel},
        {"attention_ratio", cfg.attention_ratio},
        {"knet_residual", cfg.knet_residual},
        {"image_net", cfg.image_net},
        {"lowrank", cfg.lowrank},
        {"kspace_branch", cfg.kspace_branch},
        {"attention", cfg.attention},
        {"isl", cfg.isl}}}};
}

NetworkConfig network_config_from_json(const json& doc) {
  NetworkConfig cfg;
  check_keys(doc, "config", {"dims", "network"});
  if (doc.contains("dims")) {
    const json& d = doc.at("dims");
    check_keys(d, "dims", {"t", "x", "y", "c"});
    pull(d, "t", cfg.T);
    pull(d, "x", cfg.X);
    pull(d, "y", cfg.Y);
    pull(d, "c", cfg.C);
  }
  if (doc.contains("network")) {
    const json& n = doc.at("network");
    check_keys(n, "network",
               {"iterations", "filters", "knet_filters", "patches",
                "spatial_kernel", "temporal_kernel", "kspace_kernel",
                "attention_ratio", "knet_residual", "preset", "image_net",
                "lowrank", "kspace_branch", "attention", "isl"});
    // preset first, explicit toggles override
    if (n.contains("preset")) {
      std::string preset;
      pull(n, "preset", preset);
      cfg.apply_preset(preset);
    }
    pull(n, "iterations", cfg.iterations);
    pull(n, "filters", cfg.filters);
    pull(n, "knet_filters", cfg.knet_filters);
    if (n.contains("patches")) {
      std::vector<std::size_t> p;
      pull(n, "patches", p);
      if (p.size() != 3) {
        throw ConfigError("network.patches must be [frame groups, x, y]");
      }
      cfg.patches = PatchSpec{p[0], p[1], p[2]};
    }
    pull(n, "spatial_kernel", cfg.spatial_kernel);
    pull(n, "temporal_kernel", cfg.temporal_kernel);
    pull(n, "kspace_kernel", cfg.kspace_kernel);
    pull(n, "attention_ratio", cfg.attention_ratio);
    pull(n, "knet_residual", cfg.knet_residual);
    pull(n, "image_net", cfg.image_net);
    pull(n, "lowrank", cfg.lowrank);
    pull(n, "kspace_branch", cfg.kspace_branch);
    pull(n, "attention", cfg.attention);
    pull(n, "isl", cfg.isl);
  }
  return cfg;
}

RunConfig RunConfig::from_json(const json& doc) {
  RunConfig rc;
  check_keys(doc, "config", {"dims", "network", "training", "paths", "validation"});
  json net_part = json::object();
  if (doc.contains("dims")) net_part["dims"] = doc.at("dims");
  if (doc.contains("network")) net_part["network"] = doc.at("network");
  rc.net = network_config_from_json(net_part);

  if (doc.contains("training")) {
    const json& t = doc.at("training");
    check_keys(t, "training",
               {"lr", "steps", "seed", "r_min", "r_max", "center_lines",
                "shared_loss_norm", "checkpoint_every"});
    pull(t, "lr", rc.train.lr);
    pull(t, "steps", rc.train.steps);
    pull(t, "seed", rc.train.seed);
    pull(t, "r_min", rc.train.r_min);
    pull(t, "r_max", rc.train.r_max);
    pull(t, "center_lines", rc.train.center_lines);
    pull(t, "shared_loss_norm", rc.train.shared_loss_norm);
    pull(t, "checkpoint_every", rc.train.checkpoint_every);
  }
  if (doc.contains("paths")) {
    const json& p = doc.at("paths");
    check_keys(p, "paths", {"dataset", "output"});
    pull(p, "dataset", rc.dataset_dir);
    pull(p, "output", rc.output_dir);
  }
  if (doc.contains("validation")) {
    const json& v = doc.at("validation");
    check_keys(v, "validation", {"dataset", "count"});
    pull(v, "dataset", rc.validation_dir);
    pull(v, "count", rc.validation_count);
  }
  return rc;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

json RunConfig::echo() const {
  json doc = network_config_to_json(net);
  doc["training"] = {{"lr", train.lr},
                     {"steps", train.steps},
                     {"seed", train.seed},
                     {"r_min", train.r_min},
                     {"r_max", train.r_max},
                     {"center_lines", train.center_lines},
                     {"shared_loss_norm", train.shared_loss_norm},
                     {"checkpoint_every", train.checkpoint_every}};
  doc["paths"] = {{"dataset", dataset_dir}, {"output", output_dir}};
  doc["validation"] = {{"dataset", validation_dir}, {"count", validation_count}};
  return doc;
}

}  // namespace aliknet
