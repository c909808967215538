#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aliknet/layers.hpp"
#include "fd.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace aliknet;
using namespace aliknet::testing;

TEST_CASE("conv2d_xy identity kernel reproduces the input") {
  Tensor x = random_tensor({2, 2, 4, 5}, 1);
  Tensor w = Tensor::zeros({2, 2, 3, 3});
  w[w.idx(0, 0, 1, 1)] = cplx(1.0, 0.0);
  w[w.idx(1, 1, 1, 1)] = cplx(1.0, 0.0);
  const Tensor y = conv2d_xy(x, w, Tensor());
  CHECK(rel_error(y, x) == 0.0);
}

TEST_CASE("conv2d_xy is linear") {
  Tensor x1 = random_tensor({2, 2, 5, 5}, 2);
  Tensor x2 = random_tensor({2, 2, 5, 5}, 3);
  Tensor w = random_tensor({3, 2, 3, 3}, 4);
  const cplx a(0.3, -1.1);
  const Tensor lhs = conv2d_xy(scale(x1, a) + x2, w, Tensor());
  Tensor rhs = conv2d_xy(x2, w, Tensor());
  axpy(a, conv2d_xy(x1, w, Tensor()), rhs);
  CHECK(rel_error(lhs, rhs) < 1e-12);
}

TEST_CASE("convolutions match the direct-sum oracles") {
  SUBCASE("2-d spatial, single channel 3x3x3 input") {
    Tensor x = random_tensor({3, 1, 3, 3}, 5);
    Tensor w = random_tensor({1, 1, 3, 3}, 6);
    CHECK(rel_error(conv2d_xy(x, w, Tensor()), naive_conv2d_xy(x, w, Tensor())) < 1e-12);
  }
  SUBCASE("2-d spatial, multichannel with bias") {
    Tensor x = random_tensor({2, 3, 6, 5}, 7);
    Tensor w = random_tensor({4, 3, 5, 3}, 8);
    Tensor b = random_tensor({4}, 9);
    CHECK(rel_error(conv2d_xy(x, w, b), naive_conv2d_xy(x, w, b)) < 1e-12);
  }
  SUBCASE("1-d temporal") {
    Tensor x = random_tensor({5, 2, 4, 3}, 10);
    Tensor w = random_tensor({3, 2, 3}, 11);
    Tensor b = random_tensor({3}, 12);
    CHECK(rel_error(conv1d_t(x, w, b), naive_conv1d_t(x, w, b)) < 1e-12);
  }
  SUBCASE("3-d over coil and space") {
    Tensor x = random_tensor({2, 2, 3, 4, 4}, 13);
    Tensor w = random_tensor({2, 2, 3, 3, 3}, 14);
    CHECK(rel_error(conv3d_cxy(x, w, Tensor()), naive_conv3d_cxy(x, w, Tensor())) < 1e-12);
  }
}

TEST_CASE("conv2dt equals the composed single-axis oracles") {
  Tensor x = random_tensor({4, 2, 5, 5}, 15);
  Tensor ws = random_tensor({3, 2, 3, 3}, 16);
  Tensor bs = random_tensor({3}, 17);
  Tensor wt = random_tensor({2, 3, 3}, 18);
  Tensor bt = random_tensor({2}, 19);
  const Tensor got = conv2dt(x, ws, bs, wt, bt);
  const Tensor ref = naive_conv1d_t(naive_conv2d_xy(x, ws, bs), wt, bt);
  CHECK(rel_error(got, ref) < 1e-12);
}

TEST_CASE("convolution shape errors") {
  Tensor x = random_tensor({2, 2, 4, 4}, 20);
  CHECK_THROWS_AS(conv2d_xy(x, random_tensor({2, 3, 3, 3}, 21), Tensor()), ShapeError);
  CHECK_THROWS_AS(conv2d_xy(x, random_tensor({2, 2, 4, 3}, 22), Tensor()), ShapeError);
}

TEST_CASE("convolution backward passes match finite differences") {
  SUBCASE("conv2d_xy") {
    Tensor x = random_tensor({2, 2, 4, 4}, 23);
    Tensor w = random_tensor({3, 2, 3, 3}, 24);
    Tensor b = random_tensor({3}, 25);
    Tensor probe = random_tensor({2, 3, 4, 4}, 26);
    Tensor g_w = Tensor::zeros(w.dims()), g_b = Tensor::zeros(b.dims());
    const Tensor g_x = conv2d_xy_backward(x, w, probe, g_w, g_b);
    CHECK(rel_error(g_x, fd_gradient(x, [&](const Tensor& v) {
            return probe_loss(probe, conv2d_xy(v, w, b));
          })) < 1e-6);
    CHECK(rel_error(g_w, fd_gradient(w, [&](const Tensor& v) {
            return probe_loss(probe, conv2d_xy(x, v, b));
          })) < 1e-6);
    CHECK(rel_error(g_b, fd_gradient(b, [&](const Tensor& v) {
            return probe_loss(probe, conv2d_xy(x, w, v));
          })) < 1e-6);
  }
  SUBCASE("conv1d_t") {
    Tensor x = random_tensor({4, 2, 3, 3}, 27);
    Tensor w = random_tensor({2, 2, 3}, 28);
    Tensor b = random_tensor({2}, 29);
    Tensor probe = random_tensor({4, 2, 3, 3}, 30);
    Tensor g_w = Tensor::zeros(w.dims()), g_b = Tensor::zeros(b.dims());
    const Tensor g_x = conv1d_t_backward(x, w, probe, g_w, g_b);
    CHECK(rel_error(g_x, fd_gradient(x, [&](const Tensor& v) {
            return probe_loss(probe, conv1d_t(v, w, b));
          })) < 1e-6);
    CHECK(rel_error(g_w, fd_gradient(w, [&](const Tensor& v) {
            return probe_loss(probe, conv1d_t(x, v, b));
          })) < 1e-6);
    CHECK(rel_error(g_b, fd_gradient(b, [&](const Tensor& v) {
            return probe_loss(probe, conv1d_t(x, w, v));
          })) < 1e-6);
  }
  SUBCASE("conv3d_cxy without bias") {
    Tensor x = random_tensor({2, 2, 2, 3, 3}, 31);
    Tensor w = random_tensor({2, 2, 3, 3, 3}, 32);
    Tensor probe = random_tensor({2, 2, 2, 3, 3}, 33);
    Tensor g_w = Tensor::zeros(w.dims());
    Tensor g_b;
    const Tensor g_x = conv3d_cxy_backward(x, w, probe, g_w, g_b);
    CHECK(rel_error(g_x, fd_gradient(x, [&](const Tensor& v) {
            return probe_loss(probe, conv3d_cxy(v, w, Tensor()));
          })) < 1e-6);
    CHECK(rel_error(g_w, fd_gradient(w, [&](const Tensor& v) {
            return probe_loss(probe, conv3d_cxy(x, v, Tensor()));
          })) < 1e-6);
  }
}

TEST_CASE("modrelu point values") {
  Tensor x({1, 1, 1, 3});
  x[0] = cplx(0.6, -0.8);
  x[1] = cplx(3.0, 4.0);
  x[2] = cplx(3.0, 4.0);

  Tensor b0 = Tensor::zeros({1});
  const Tensor y0 = modrelu(x, b0);
  CHECK(y0[0] == x[0]);

  Tensor bm = Tensor::full({1}, cplx(-5.0, 0.0));
  const Tensor ym = modrelu(x, bm);
  CHECK(ym[1] == cplx(0.0, 0.0));

  Tensor bp = Tensor::full({1}, cplx(5.0, 0.0));
  const Tensor yp = modrelu(x, bp);
  CHECK(std::abs(yp[2] - cplx(6.0, 8.0)) < 1e-12);

  // f(0) = 0 even with positive bias
  Tensor z = Tensor::zeros({1, 1, 1, 1});
  CHECK(modrelu(z, bp)[0] == cplx(0.0, 0.0));
}

TEST_CASE("modrelu backward matches finite differences") {
  Tensor x = random_tensor({2, 3, 3, 3}, 34);
  for (std::size_t i = 0; i < x.size(); ++i) {
    // keep magnitudes away from the activation boundary
    const double m = std::abs(x[i]);
    if (m < 0.5) x[i] *= (0.5 + m) / std::max(m, 1e-9);
  }
  Tensor bias({3});
  bias[0] = cplx(0.2, 0.0);
  bias[1] = cplx(-0.3, 0.0);
  bias[2] = cplx(0.0, 0.0);
  Tensor probe = random_tensor({2, 3, 3, 3}, 35);
  Tensor g_bias = Tensor::zeros({3});
  const Tensor g_x = modrelu_backward(x, bias, probe, g_bias);
  CHECK(rel_error(g_x, fd_gradient(x, [&](const Tensor& v) {
          return probe_loss(probe, modrelu(v, bias));
        })) < 1e-6);
  CHECK(rel_error(g_bias, fd_gradient(bias, [&](const Tensor& v) {
          return probe_loss(probe, modrelu(x, v));
        })) < 1e-6);
}

TEST_CASE("maxpool3d picks the largest magnitude and keeps the value") {
  SUBCASE("constant input returns the constant") {
    Tensor x = Tensor::full({2, 1, 2, 2}, cplx(0.5, -0.5));
    PoolContext ctx;
    const Tensor y = maxpool3d(x, ctx);
    REQUIRE(y.size() == 1);
    CHECK(y[0] == cplx(0.5, -0.5));
  }
  SUBCASE("documented cell") {
    Tensor x = Tensor::zeros({2, 1, 2, 2});
    x[0] = cplx(1.0, 0.0);
    x[7] = cplx(0.0, -3.0);
    PoolContext ctx;
    const Tensor y = maxpool3d(x, ctx);
    CHECK(y[0] == cplx(0.0, -3.0));
  }
  SUBCASE("odd extents replication-pad to even") {
    Tensor x = random_tensor({3, 2, 5, 6}, 36);
    PoolContext ctx;
    const Tensor y = maxpool3d(x, ctx);
    CHECK(y.dims() == std::vector<std::size_t>{2, 2, 3, 3});
  }
  SUBCASE("upsample returns pooled input to the original dims") {
    Tensor x = random_tensor({3, 2, 5, 5}, 37);
    PoolContext ctx;
    const Tensor y = maxpool3d(x, ctx);
    Tensor w = random_tensor({2, 2}, 38);
    Tensor b = random_tensor({2}, 39);
    const Tensor up = upsample3d(y, w, b, 3, 5, 5);
    CHECK(up.dims() == x.dims());
  }
}

TEST_CASE("maxpool3d backward matches finite differences") {
  Tensor x = random_tensor({4, 2, 4, 4}, 40);
  PoolContext ctx;
  const Tensor y = maxpool3d(x, ctx);
  Tensor probe = random_tensor(y.dims(), 41);
  const Tensor g_x = maxpool3d_backward(ctx, probe);
  const Tensor fd = fd_gradient(x, [&](const Tensor& v) {
    PoolContext c2;
    return probe_loss(probe, maxpool3d(v, c2));
  });
  CHECK(rel_error(g_x, fd) < 1e-6);
}

TEST_CASE("maxpool3d backward with replication padding") {
  Tensor x = random_tensor({3, 1, 3, 3}, 42);
  PoolContext ctx;
  const Tensor y = maxpool3d(x, ctx);
  Tensor probe = random_tensor(y.dims(), 43);
  const Tensor g_x = maxpool3d_backward(ctx, probe);
  const Tensor fd = fd_gradient(x, [&](const Tensor& v) {
    PoolContext c2;
    return probe_loss(probe, maxpool3d(v, c2));
  });
  CHECK(rel_error(g_x, fd) < 1e-6);
}

TEST_CASE("upsample3d forward structure and backward") {
  Tensor x = random_tensor({2, 3, 3, 3}, 44);
  Tensor w = random_tensor({2, 3}, 45);
  Tensor b = random_tensor({2}, 46);
  const Tensor y = upsample3d(x, w, b, 4, 5, 6);
  REQUIRE(y.dims() == std::vector<std::size_t>{4, 2, 5, 6});

  // odd positions carry only the bias
  CHECK(y[y.idx(1, 0, 0, 0)] == b[0]);
  CHECK(y[y.idx(0, 1, 1, 3)] == b[1]);
  // even positions: bias + weighted sum over input channels
  cplx want = b[0];
  for (std::size_t i = 0; i < 3; ++i) want += w[w.idx(0, i)] * x[x.idx(1, i, 2, 1)];
  CHECK(std::abs(y[y.idx(2, 0, 4, 2)] - want) < 1e-12);

  Tensor probe = random_tensor(y.dims(), 47);
  Tensor g_w = Tensor::zeros(w.dims()), g_b = Tensor::zeros(b.dims());
  const Tensor g_x = upsample3d_backward(x, w, probe, g_w, g_b);
  CHECK(rel_error(g_x, fd_gradient(x, [&](const Tensor& v) {
          return probe_loss(probe, upsample3d(v, w, b, 4, 5, 6));
        })) < 1e-6);
  CHECK(rel_error(g_w, fd_gradient(w, [&](const Tensor& v) {
          return probe_loss(probe, upsample3d(x, v, b, 4, 5, 6));
        })) < 1e-6);
  CHECK(rel_error(g_b, fd_gradient(b, [&](const Tensor& v) {
          return probe_loss(probe, upsample3d(x, w, v, 4, 5, 6));
        })) < 1e-6);
}

TEST_CASE("se attention forward properties") {
  Tensor x = random_tensor({2, 2, 3, 3}, 48);

  SUBCASE("zero weights halve the input") {
    AttentionWeights w;
    w.w1 = Tensor::zeros({2, 4});
    w.b1 = Tensor::zeros({2});
    w.w2 = Tensor::zeros({4, 2});
    w.b2 = Tensor::zeros({4});
    AttentionContext ctx;
    const Tensor y = se_attention(x, w, 0, ctx);
    CHECK(rel_error(y, scale(x, cplx(0.5, 0.0))) < 1e-12);
  }

  SUBCASE("attention always contracts") {
    Rng rng(49);
    AttentionWeights w = make_attention_weights(2, 2, rng);
    AttentionContext ctx;
    const Tensor y = se_attention(x, w, 0, ctx);
    CHECK(norm(y) < norm(x));
    for (double v : ctx.wv) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("se attention backward matches finite differences") {
  auto run = [](const Tensor& x, std::size_t axis, std::uint64_t seed) {
    Rng rng(seed);
    const AttentionWeights w = make_attention_weights(x.dim(axis), 2, rng);
    Tensor probe = random_tensor(x.dims(), seed + 1);
    AttentionContext ctx;
    se_attention(x, w, axis, ctx);
    AttentionWeights g;
    g.w1 = Tensor::zeros(w.w1.dims());
    g.b1 = Tensor::zeros(w.b1.dims());
    g.w2 = Tensor::zeros(w.w2.dims());
    g.b2 = Tensor::zeros(w.b2.dims());
    const Tensor g_x = se_attention_backward(x, w, axis, ctx, probe, g);

    auto loss_x = [&](const Tensor& v) {
      AttentionContext c;
      return probe_loss(probe, se_attention(v, w, axis, c));
    };
    CHECK(rel_error(g_x, fd_gradient(x, loss_x)) < 1e-6);

    auto loss_param = [&](const Tensor& v, int which) {
      AttentionWeights wp = w;
      (which == 0 ? wp.w1 : which == 1 ? wp.b1 : which == 2 ? wp.w2 : wp.b2) = v;
      AttentionContext c;
      return probe_loss(probe, se_attention(x, wp, axis, c));
    };
    CHECK(rel_error(g.w1, fd_gradient(w.w1, [&](const Tensor& v) { return loss_param(v, 0); })) < 1e-6);
    CHECK(rel_error(g.b1, fd_gradient(w.b1, [&](const Tensor& v) { return loss_param(v, 1); })) < 1e-6);
    CHECK(rel_error(g.w2, fd_gradient(w.w2, [&](const Tensor& v) { return loss_param(v, 2); })) < 1e-6);
    CHECK(rel_error(g.b2, fd_gradient(w.b2, [&](const Tensor& v) { return loss_param(v, 3); })) < 1e-6);
  };

  SUBCASE("time axis on a 2x2x2x2 probe") { run(random_tensor({2, 2, 2, 2}, 50), 0, 60); }
  SUBCASE("coil axis on k-space features") { run(random_tensor({2, 2, 3, 2, 2}, 51), 2, 70); }
}
