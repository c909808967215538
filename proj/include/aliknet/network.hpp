#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aliknet/consistency.hpp"
#include "aliknet/mri.hpp"
#include "aliknet/subnet.hpp"
#include "aliknet/tensor.hpp"

namespace aliknet {

// Unrolled reconstruction network. Each iteration runs the k-space branch
// (k-space subnet + k-space DC), the image branch (image subnet and/or
// patch low-rank + image DC), and the information sharing layer, each
// toggleable for the ablation variants. Weights are not shared across
// iterations.

struct NetworkConfig {
  // data dims
  std::size_t T = 8, X = 32, Y = 32, C = 4;
  // architecture
  std::size_t iterations = 2;
  std::size_t filters = 4;       // image subnet base filters
  std::size_t knet_filters = 4;  // k-space subnet filters
  PatchSpec patches{2, 2, 2};
  std::size_t spatial_kernel = 5, temporal_kernel = 3, kspace_kernel = 3;
  std::size_t attention_ratio = 2;
  bool knet_residual = true;
  // ablation toggles
  bool image_net = true;
  bool lowrank = true;
  bool kspace_branch = true;
  bool attention = true;
  bool isl = true;

  static NetworkConfig desk() { return {}; }
  static NetworkConfig full_scale();

  // Ablation presets: a-inet, a-knet, a-linet, a-iknet, liknet, a-liknet.
  void apply_preset(const std::string& name);
  bool image_branch() const { return image_net || lowrank; }
  void validate() const;
};

// All real-valued scalars (thresholds, step sizes, mixing weights) live in
// 1-element tensors so the optimizer and checkpoints treat every parameter
// uniformly; their imaginary parts stay zero. Raw values are unconstrained:
// mu goes through softplus, a and b through sigmoid, alpha through clamp.
struct IterationParams {
  UNetParams unet;
  Tensor tau;  // one threshold per low-rank patch
  KNetParams knet;
  Tensor eta, alpha;
  Tensor mu_raw;
  Tensor a_raw, b_raw;
};

struct NetworkParams {
  std::vector<IterationParams> iters;
};

NetworkParams init_params(const NetworkConfig& cfg, Rng& rng);
NetworkParams zero_like(const NetworkParams& p);

// Visits every trainable tensor in a stable order as
// f(name, tensor, complex_valued). Components disabled by the config are
// skipped, as is alpha when the low-rank branch is off (it blends q into p
// and is frozen when q = p).
using ParamVisitor = std::function<void(const std::string&, Tensor&, bool)>;
void for_each_param(NetworkParams& p, const NetworkConfig& cfg,
                    const ParamVisitor& f);
void for_each_param(
    const NetworkParams& p, const NetworkConfig& cfg,
    const std::function<void(const std::string&, const Tensor&, bool)>& f);

struct ParamCount {
  std::size_t total = 0;
  std::vector<std::pair<std::string, std::size_t>> by_component;
};
// Real scalar degrees of freedom; a complex weight counts as two.
ParamCount count_params(const NetworkParams& p, const NetworkConfig& cfg);

struct NetworkState {
  Tensor x;  // (T, X, Y)
  Tensor y;  // (T, C, X, Y)
};

// x0 = Ah y_u (zero-filled), y0 = y_u.
NetworkState init_state(const EncodingOperator& op, const Tensor& y_u);

struct IterationTrace {
  KNetTrace knet;
  Tensor r;
  UNetTrace unet;
  Tensor p, q;
  LowRankContext lowrank;
  ImageDCTrace idc;
  IslTrace isl;
};

struct ForwardTrace {
  std::vector<IterationTrace> iters;
};

// svt_surrogate selects the smoothed threshold inside the low-rank branch
// (gradient checking); training and inference use the hard threshold.
// ops, when given, collects one tag per executed component op so tests can
// assert what an ablation config does and does not run.
NetworkState network_forward(const NetworkState& init, const NetworkParams& params,
                             const NetworkConfig& cfg, const EncodingOperator& op,
                             const Tensor& y_u, ForwardTrace& trace,
                             bool svt_surrogate = false,
                             std::vector<std::string>* ops = nullptr);

// Accumulates parameter cotangents into grads (+=) and returns the cotangent
// of the initial state.
NetworkState network_backward(const NetworkParams& params, const NetworkConfig& cfg,
                              const EncodingOperator& op, const Tensor& y_u,
                              const ForwardTrace& trace, const Tensor& g_x,
                              const Tensor& g_y, NetworkParams& grads);

}  // namespace aliknet
