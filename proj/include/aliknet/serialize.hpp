#pragma once

#include <cstdint>
#include <string>

#include "aliknet/config.hpp"
#include "aliknet/mri.hpp"
#include "aliknet/network.hpp"
#include "aliknet/training.hpp"

namespace aliknet {

// Binary tensor container: magic "CTNS", format version byte, dtype byte
// (0 = complex float64, 1 = complex float32), rank byte, extents as
// little-endian u64, then row-major (re, im) pairs, little-endian IEEE-754.
// Violations raise a format error naming the byte offset.

enum class TensorDType : std::uint8_t { kComplexF64 = 0, kComplexF32 = 1 };

void write_tensor(const std::string& path, const Tensor& t,
                  TensorDType dtype = TensorDType::kComplexF64);
Tensor read_tensor(const std::string& path);

// One sample on disk: a directory holding the five tensors plus a small
// JSON with the acceleration.
void save_sample(const std::string& dir, const CineSample& sample);
CineSample load_sample(const std::string& dir);

// Checkpoint: a directory with manifest.json (network config, step count,
// optimizer hyperparameters, named entry table) plus one tensor file per
// parameter and per optimizer moment.
struct Checkpoint {
  NetworkConfig cfg;
  NetworkParams params;
  OptimState opt;
  std::size_t step = 0;
  json run_config;  // provenance echo, may be null
};

void save_checkpoint(const std::string& dir, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& dir);

// Architecture compatibility between a checkpoint and a target config;
// throws a config error naming the first mismatched field.
void check_compatible(const NetworkConfig& a, const NetworkConfig& b);

}  // namespace aliknet
