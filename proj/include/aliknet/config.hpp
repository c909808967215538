#pragma once

#include <string>

#include <json.hpp>

#include "aliknet/network.hpp"
#include "aliknet/training.hpp"

namespace aliknet {

using json = nlohmann::json;

// Run description for the train command. Parsed from a JSON document with
// four sections (dims, network, training, paths) plus an optional
// validation section; unknown keys are rejected, every key has a default,
// and echo() renders the fully-populated document for provenance.
struct RunConfig {
  NetworkConfig net;
  TrainConfig train;
  std::string dataset_dir;
  std::string output_dir = "run";
  std::string validation_dir;        // empty = skip validation
  std::size_t validation_count = 0;  // 0 = all samples found

  static RunConfig from_json(const json& doc);
  static RunConfig from_file(const std::string& path);
  json echo() const;
};

json network_config_to_json(const NetworkConfig& cfg);
NetworkConfig network_config_from_json(const json& doc);

}  // namespace aliknet
