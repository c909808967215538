#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aliknet/training.hpp"
#include "fd.hpp"
#include "testutil.hpp"

using namespace aliknet;
using namespace aliknet::testing;

namespace {

NetworkConfig tiny_config() {
  NetworkConfig cfg;
  cfg.T = 4;
  cfg.X = cfg.Y = 8;
  cfg.C = 2;
  cfg.iterations = 1;
  cfg.filters = 2;
  cfg.knet_filters = 2;
  cfg.patches = PatchSpec{2, 2, 2};
  cfg.spatial_kernel = 3;
  cfg.temporal_kernel = 3;
  cfg.kspace_kernel = 3;
  return cfg;
}

}  // namespace

TEST_CASE("loss values") {
  Tensor rx = random_tensor({2, 4, 4}, 1);
  Tensor ry = random_tensor({2, 2, 4, 4}, 2);

  SUBCASE("perfect predictions cost nothing") {
    const LossReport r = loss(rx, ry, rx, ry);
    CHECK(r.l_image == 0.0);
    CHECK(r.l_kspace == 0.0);
    CHECK(r.l_total == 0.0);
  }
  SUBCASE("constant offset has its modulus as mean") {
    Tensor xh = rx;
    for (std::size_t i = 0; i < xh.size(); ++i) xh[i] += cplx(3.0, 4.0);
    const LossReport r = loss(xh, ry, rx, ry);
    CHECK(r.l_image == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(r.l_kspace == 0.0);
    CHECK(r.l_total == r.l_image + r.l_kspace);
  }
  SUBCASE("matches a scalar-loop oracle") {
    Tensor xh = random_tensor({2, 4, 4}, 3);
    Tensor yh = random_tensor({2, 2, 4, 4}, 4);
    double si = 0.0, sk = 0.0;
    for (std::size_t i = 0; i < xh.size(); ++i) si += std::abs(xh[i] - rx[i]);
    for (std::size_t i = 0; i < yh.size(); ++i) sk += std::abs(yh[i] - ry[i]);
    const LossReport r = loss(xh, yh, rx, ry);
    CHECK(std::abs(r.l_image - si / 32.0) < 1e-12);
    CHECK(std::abs(r.l_kspace - sk / 64.0) < 1e-12);
    const LossReport shared = loss(xh, yh, rx, ry, true);
    CHECK(std::abs(shared.l_kspace - sk / 32.0) < 1e-12);
  }
}

TEST_CASE("loss backward matches finite differences") {
  Tensor rx = random_tensor({2, 4, 4}, 5);
  Tensor ry = random_tensor({2, 2, 4, 4}, 6);
  Tensor xh = random_tensor({2, 4, 4}, 7);
  Tensor yh = random_tensor({2, 2, 4, 4}, 8);

  for (bool shared : {false, true}) {
    Tensor g_x, g_y;
    loss_backward(xh, yh, rx, ry, shared, g_x, g_y);
    const Tensor fdx = fd_gradient(xh, [&](const Tensor& v) {
      return loss(v, yh, rx, ry, shared).l_total;
    });
    const Tensor fdy = fd_gradient(yh, [&](const Tensor& v) {
      return loss(xh, v, rx, ry, shared).l_total;
    });
    CHECK(rel_error(g_x, fdx) < 1e-7);
    CHECK(rel_error(g_y, fdy) < 1e-7);
  }

  SUBCASE("exact hit gets subgradient zero") {
    Tensor g_x, g_y;
    loss_backward(rx, yh, rx, ry, false, g_x, g_y);
    CHECK(max_abs(g_x) == 0.0);
  }
}

TEST_CASE("adam") {
  NetworkConfig cfg = tiny_config();
  Rng rng(9);
  NetworkParams params = init_params(cfg, rng);

  SUBCASE("zero gradient leaves parameters unchanged") {
    NetworkParams before = params;
    OptimState opt = init_optimizer(params, cfg, AdamConfig{});
    adam_step(params, zero_like(params), cfg, opt);
    double diff = 0.0;
    for_each_param(params, cfg, [&](const std::string& name, Tensor& t, bool) {
      const Tensor* b = nullptr;
      for_each_param(before, cfg, [&](const std::string& n2, Tensor& t2, bool) {
        if (n2 == name) b = &t2;
      });
      REQUIRE(b != nullptr);
      diff = std::max(diff, max_abs(t - *b));
    });
    CHECK(diff == 0.0);
  }

  SUBCASE("first step moves by about the learning rate") {
    OptimState opt = init_optimizer(params, cfg, AdamConfig{});
    NetworkParams grads = zero_like(params);
    const double before = params.iters[0].eta[0].real();
    grads.iters[0].eta[0] = cplx(1.0, 0.0);
    adam_step(params, grads, cfg, opt);
    const double delta = params.iters[0].eta[0].real() - before;
    CHECK(std::abs(delta + 1e-4) < 1e-8);
  }

  SUBCASE("drives a scalar quadratic toward its minimum") {
    // f(w) = |w - 3|^2 on the eta slot; gradient 2(w - 3)
    OptimState opt = init_optimizer(params, cfg, AdamConfig{0.05, 0.9, 0.999, 1e-8});
    params.iters[0].eta[0] = cplx(0.0, 0.0);
    double prev = 3.0;
    bool monotone = true;
    for (int i = 0; i < 100; ++i) {
      NetworkParams grads = zero_like(params);
      grads.iters[0].eta[0] = cplx(2.0 * (params.iters[0].eta[0].real() - 3.0), 0.0);
      adam_step(params, grads, cfg, opt);
      const double dist = std::abs(params.iters[0].eta[0].real() - 3.0);
      if (dist >= prev) monotone = false;
      prev = dist;
    }
    CHECK(monotone);
    CHECK(prev < 0.5);
  }
}

TEST_CASE("network gradient check harness") {
  NetworkConfig cfg = tiny_config();
  const GradCheckReport r1 = grad_check_network(cfg, 42);
  CHECK(!r1.entries.empty());
  CHECK(r1.worst < 1e-5);

  const GradCheckReport r2 = grad_check_network(cfg, 42);
  REQUIRE(r1.entries.size() == r2.entries.size());
  for (std::size_t i = 0; i < r1.entries.size(); ++i) {
    CHECK(r1.entries[i].name == r2.entries[i].name);
    CHECK(r1.entries[i].rel_err == r2.entries[i].rel_err);
  }
}

TEST_CASE("training loop") {
  NetworkConfig cfg = tiny_config();
  const std::vector<CineSample> data =
      make_dataset(2, cfg.T, cfg.X, cfg.Y, cfg.C, 2.0, 4.0, 2, 77);
  TrainConfig tcfg;
  tcfg.steps = 4;
  tcfg.r_min = 2.0;
  tcfg.r_max = 4.0;
  tcfg.center_lines = 2;
  tcfg.seed = 5;

  SUBCASE("zero learning rate keeps parameters bit-identical") {
    TrainConfig frozen = tcfg;
    frozen.lr = 0.0;
    const TrainResult r = train(data, cfg, frozen);
    Rng rng(5);
    Rng init_rng = rng.fork(0);
    NetworkParams fresh = init_params(cfg, init_rng);
    double diff = 0.0;
    for_each_param(fresh, cfg, [&](const std::string& name, Tensor& t, bool) {
      for_each_param(const_cast<NetworkParams&>(r.params), cfg,
                     [&](const std::string& n2, Tensor& t2, bool) {
                       if (n2 == name) diff = std::max(diff, max_abs(t - t2));
                     });
    });
    CHECK(diff == 0.0);
  }

  SUBCASE("same seed, same log") {
    const TrainResult a = train(data, cfg, tcfg);
    const TrainResult b = train(data, cfg, tcfg);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      CHECK(a.log[i].l_total == b.log[i].l_total);
      CHECK(a.log[i].accel == b.log[i].accel);
    }
  }

  SUBCASE("per-step masks differ and accelerations stay in range") {
    const TrainResult r = train(data, cfg, tcfg);
    REQUIRE(r.log.size() == 4);
    for (const StepLog& e : r.log) {
      CHECK(e.accel >= 2.0);
      CHECK(e.accel <= 4.0);
      CHECK(std::isfinite(e.l_total));
    }
    CHECK(r.log[0].accel != r.log[1].accel);
  }

  SUBCASE("empty dataset is rejected") {
    CHECK_THROWS_AS(train({}, cfg, tcfg), ConfigError);
  }
}

TEST_CASE("moving average") {
  std::vector<StepLog> log;
  for (std::size_t i = 1; i <= 10; ++i) {
    log.push_back(StepLog{i, 0.0, 0.0, static_cast<double>(i), 0.0});
  }
  CHECK(moving_average(log, 10, 4) == doctest::Approx((7 + 8 + 9 + 10) / 4.0));
  CHECK(moving_average(log, 3, 100) == doctest::Approx(2.0));
  CHECK(moving_average(log, 100, 5) == doctest::Approx(8.0));
}
