#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aliknet/network.hpp"
#include "aliknet/tensor.hpp"

namespace aliknet {

// ---------------------------------------------------------------------------
// Loss: mean complex-modulus error in both domains, L = L_I + L_K.
// By default each term is averaged over its own element count so the two
// domains weigh comparably; shared_norm divides both sums by the image
// element count instead.
// ---------------------------------------------------------------------------

struct LossReport {
  double l_image = 0.0, l_kspace = 0.0, l_total = 0.0;
};

LossReport loss(const Tensor& x_hat, const Tensor& y_hat, const Tensor& ref_x,
                const Tensor& ref_y, bool shared_norm = false);
// Cotangents of the two predictions; |d| gets subgradient 0 at d = 0.
void loss_backward(const Tensor& x_hat, const Tensor& y_hat, const Tensor& ref_x,
                   const Tensor& ref_y, bool shared_norm, Tensor& g_x,
                   Tensor& g_y);

// ---------------------------------------------------------------------------
// Adam, bias-corrected, applied componentwise to real and imaginary parts.
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct OptimState {
  AdamConfig cfg;
  std::size_t step = 0;
  std::vector<std::string> names;  // parameter order, fixed at init
  std::vector<Tensor> m, v;        // first/second moments per parameter
};

OptimState init_optimizer(const NetworkParams& params, const NetworkConfig& cfg,
                          const AdamConfig& acfg);
void adam_step(NetworkParams& params, const NetworkParams& grads,
               const NetworkConfig& cfg, OptimState& opt);

// ---------------------------------------------------------------------------
// Gradient checking: every parameter group of the configured network against
// central finite differences of a fixed random probe loss. The low-rank
// thresholds are compared under the smoothed-threshold forward; everything
// else under the hard forward.
// ---------------------------------------------------------------------------

struct GradCheckEntry {
  std::string name;
  double rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst = 0.0;
};

GradCheckReport grad_check_network(const NetworkConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Training loop. Each step takes the next sample (cycling), draws a fresh
// acceleration from [r_min, r_max] and a fresh mask from a per-step rng
// stream, then runs forward, loss, backward, and one optimizer step.
// Aborts with a numeric error naming the step and the parameter norm if the
// loss stops being finite.
// ---------------------------------------------------------------------------

struct TrainConfig {
  std::size_t steps = 1000;
  double lr = 1e-4;
  double r_min = 2.0, r_max = 8.0;
  std::size_t center_lines = 4;
  std::uint64_t seed = 0;
  bool shared_loss_norm = false;
  std::size_t checkpoint_every = 0;  // 0 = final checkpoint only
};

struct StepLog {
  std::size_t step = 0;  // 1-based
  double l_image = 0.0, l_kspace = 0.0, l_total = 0.0;
  double accel = 0.0;
};

struct TrainResult {
  NetworkParams params;
  OptimState opt;
  std::vector<StepLog> log;
};

using StepCallback = std::function<void(const StepLog&, const NetworkParams&,
                                        const OptimState&)>;

TrainResult train(const std::vector<CineSample>& dataset,
                  const NetworkConfig& net_cfg, const TrainConfig& tcfg,
                  const StepCallback& on_step = nullptr);

// Mean of l_total over the window of steps ending at `upto` (1-based,
// clipped to the available prefix).
double moving_average(const std::vector<StepLog>& log, std::size_t upto,
                      std::size_t window);

}  // namespace aliknet
