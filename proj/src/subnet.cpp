#include "aliknet/subnet.hpp"

#include <algorithm>
#include <cmath>

#include "aliknet/svd.hpp"

namespace aliknet {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Tensor complex_kernel(std::vector<std::size_t> dims, std::size_t fan_in, Rng& rng) {
  Tensor w(std::move(dims));
  // unit-variance complex entries scaled so E|w|^2 = 1/fan_in
  fill_normal(w, rng, 1.0 / std::sqrt(2.0 * static_cast<double>(fan_in)));
  return w;
}

StageParams init_stage(std::size_t ci, std::size_t co, std::size_t ks,
                       std::size_t kt, Rng& rng) {
  StageParams p;
  p.ws = complex_kernel({co, ci, ks, ks}, ci * ks * ks, rng);
  p.bs = Tensor::zeros({co});
  p.mb1 = Tensor::zeros({co});
  p.wt = complex_kernel({co, co, kt}, co * kt, rng);
  p.bt = Tensor::zeros({co});
  p.mb2 = Tensor::zeros({co});
  return p;
}

Tensor stage_forward(const Tensor& x, const StageParams& p, StageTrace& tr) {
  tr.in = x;
  tr.c1 = conv2d_xy(x, p.ws, p.bs);
  tr.a1 = modrelu(tr.c1, p.mb1);
  tr.c2 = conv1d_t(tr.a1, p.wt, p.bt);
  return modrelu(tr.c2, p.mb2);
}

Tensor stage_backward(const StageParams& p, const StageTrace& tr,
                      const Tensor& g_out, StageParams& g) {
  const Tensor g_c2 = modrelu_backward(tr.c2, p.mb2, g_out, g.mb2);
  const Tensor g_a1 = conv1d_t_backward(tr.a1, p.wt, g_c2, g.wt, g.bt);
  const Tensor g_c1 = modrelu_backward(tr.c1, p.mb1, g_a1, g.mb1);
  return conv2d_xy_backward(tr.in, p.ws, g_c1, g.ws, g.bs);
}

}  // namespace

UNetParams init_unet(std::size_t filters, std::size_t spatial_kernel,
                     std::size_t temporal_kernel, std::size_t T,
                     std::size_t attention_ratio, bool attention, Rng& rng) {
  const std::size_t f = filters;
  UNetParams p;
  p.enc1 = init_stage(1, f, spatial_kernel, temporal_kernel, rng);
  p.enc2 = init_stage(f, 2 * f, spatial_kernel, temporal_kernel, rng);
  p.up1_w = complex_kernel({2 * f, 2 * f}, 2 * f, rng);
  p.up1_b = Tensor::zeros({2 * f});
  p.dec2 = init_stage(2 * f, f, spatial_kernel, temporal_kernel, rng);
  p.up2_w = complex_kernel({f, f}, f, rng);
  p.up2_b = Tensor::zeros({f});
  p.dec1 = init_stage(f, f, spatial_kernel, temporal_kernel, rng);
  if (attention) {
    const std::size_t t_half = (T + 1) / 2;
    p.att2 = make_attention_weights(t_half, attention_ratio, rng);
    p.att1 = make_attention_weights(T, attention_ratio, rng);
  }
  p.out_w = complex_kernel({1, f, 1, 1}, f, rng);
  p.out_b = Tensor::zeros({1});
  return p;
}

Tensor unet_forward(const Tensor& x, const UNetParams& p, bool use_attention,
                    UNetTrace& tr) {
  require_ndim("unet input", x, 3);
  const std::size_t T = x.dim(0), X = x.dim(1), Y = x.dim(2);

  const Tensor x0 = x.reshaped({T, 1, X, Y});
  tr.e1_out = stage_forward(x0, p.enc1, tr.e1);
  tr.p1 = maxpool3d(tr.e1_out, tr.pool1);
  tr.e2_out = stage_forward(tr.p1, p.enc2, tr.e2);
  tr.p2 = maxpool3d(tr.e2_out, tr.pool2);

  const Tensor u1 = upsample3d(tr.p2, p.up1_w, p.up1_b, tr.e2_out.dim(0),
                               tr.e2_out.dim(2), tr.e2_out.dim(3));
  tr.u1_in_sum = u1 + tr.e2_out;
  tr.d2_out = stage_forward(tr.u1_in_sum, p.dec2, tr.d2);
  tr.t2 = use_attention ? se_attention(tr.d2_out, p.att2, 0, tr.att2_ctx) : tr.d2_out;

  const Tensor u2 = upsample3d(tr.t2, p.up2_w, p.up2_b, T, X, Y);
  tr.u2_in_sum = u2 + tr.e1_out;
  tr.d1_out = stage_forward(tr.u2_in_sum, p.dec1, tr.d1);
  tr.t1 = use_attention ? se_attention(tr.d1_out, p.att1, 0, tr.att1_ctx) : tr.d1_out;

  const Tensor body = conv2d_xy(tr.t1, p.out_w, p.out_b);
  return x + body.reshaped({T, X, Y});
}

Tensor unet_backward(const UNetParams& p, bool use_attention, const UNetTrace& tr,
                     const Tensor& g_out, UNetParams& g) {
  const std::size_t T = g_out.dim(0), X = g_out.dim(1), Y = g_out.dim(2);
  const Tensor g_body = g_out.reshaped({T, 1, X, Y});

  const Tensor g_t1 = conv2d_xy_backward(tr.t1, p.out_w, g_body, g.out_w, g.out_b);
  const Tensor g_d1out =
      use_attention ? se_attention_backward(tr.d1_out, p.att1, 0, tr.att1_ctx, g_t1, g.att1)
                    : g_t1;
  const Tensor g_s2 = stage_backward(p.dec1, tr.d1, g_d1out, g.dec1);
  const Tensor g_t2 = upsample3d_backward(tr.t2, p.up2_w, g_s2, g.up2_w, g.up2_b);
  const Tensor g_d2out =
      use_attention ? se_attention_backward(tr.d2_out, p.att2, 0, tr.att2_ctx, g_t2, g.att2)
                    : g_t2;
  const Tensor g_s1 = stage_backward(p.dec2, tr.d2, g_d2out, g.dec2);
  const Tensor g_p2 = upsample3d_backward(tr.p2, p.up1_w, g_s1, g.up1_w, g.up1_b);

  Tensor g_e2out = maxpool3d_backward(tr.pool2, g_p2);
  g_e2out = g_e2out + g_s1;  // skip connection into the deepest decoder stage
  const Tensor g_p1 = stage_backward(p.enc2, tr.e2, g_e2out, g.enc2);

  Tensor g_e1out = maxpool3d_backward(tr.pool1, g_p1);
  g_e1out = g_e1out + g_s2;  // skip connection into the last decoder stage
  const Tensor g_x0 = stage_backward(p.enc1, tr.e1, g_e1out, g.enc1);

  return g_out + g_x0.reshaped({T, X, Y});
}

std::vector<PatchBox> patch_layout(std::size_t T, std::size_t X, std::size_t Y,
                                   const PatchSpec& spec) {
  if (spec.nt == 0 || spec.nx == 0 || spec.ny == 0) {
    throw ConfigError("patch spec must have positive counts");
  }
  if (T % spec.nt != 0) {
    throw ConfigError("temporal patch count " + std::to_string(spec.nt) +
                      " does not divide frame count " + std::to_string(T));
  }
  const std::size_t bt = T / spec.nt;
  const std::size_t bx = (X + spec.nx - 1) / spec.nx;
  const std::size_t by = (Y + spec.ny - 1) / spec.ny;
  const std::size_t ox = bx / 4, oy = by / 4;
  std::vector<PatchBox> boxes;
  boxes.reserve(spec.nt * spec.nx * spec.ny);
  for (std::size_t g = 0; g < spec.nt; ++g) {
    for (std::size_t ix = 0; ix < spec.nx; ++ix) {
      for (std::size_t iy = 0; iy < spec.ny; ++iy) {
        PatchBox b;
        b.t0 = g * bt;
        b.t1 = b.t0 + bt;
        b.x0 = ix * bx;
        b.x1 = std::min(b.x0 + bx + ox, X);
        b.y0 = iy * by;
        b.y1 = std::min(b.y0 + by + oy, Y);
        if (b.x0 >= X || b.y0 >= Y) {
          throw ConfigError("patch spec (" + std::to_string(spec.nt) + "," +
                            std::to_string(spec.nx) + "," + std::to_string(spec.ny) +
                            ") produces an empty patch for image " +
                            std::to_string(X) + "x" + std::to_string(Y));
        }
        boxes.push_back(b);
      }
    }
  }
  return boxes;
}

std::vector<cplx> svt_apply(const std::vector<cplx>& a, std::size_t m,
                            std::size_t n, double tau, bool surrogate,
                            SvtContext& ctx) {
  const SvdResult svd = svd_jacobi(a, m, n);
  ctx.m = m;
  ctx.n = n;
  ctx.u = svd.u;
  ctx.v = svd.v;
  ctx.s = svd.s;
  ctx.tau = tau;
  double bar = 0.0;
  for (double s : svd.s) bar += s;
  bar /= static_cast<double>(svd.r);
  ctx.sigma_bar = bar;
  ctx.zeta = sigmoid(tau) * bar;

  const double eps = 0.01 * bar;
  std::vector<double> s_new(svd.r);
  ctx.kept.assign(svd.r, 0);
  for (std::size_t j = 0; j < svd.r; ++j) {
    const double sj = svd.s[j] - ctx.zeta;
    ctx.kept[j] = svd.s[j] > ctx.zeta;
    if (surrogate && eps > 0.0) {
      s_new[j] = std::max(sj, 0.0) + ctx.zeta * sigmoid(sj / eps);
    } else {
      s_new[j] = ctx.kept[j] ? svd.s[j] : 0.0;
    }
  }

  std::vector<cplx> out(m * n, cplx(0.0, 0.0));
  for (std::size_t j = 0; j < svd.r; ++j) {
    if (s_new[j] == 0.0) continue;
    const cplx* uj = svd.u.data() + j * m;
    const cplx* vj = svd.v.data() + j * n;
    for (std::size_t k = 0; k < n; ++k) {
      const cplx vc = s_new[j] * std::conj(vj[k]);
      cplx* col = out.data() + k * m;
      for (std::size_t i = 0; i < m; ++i) col[i] += uj[i] * vc;
    }
  }
  return out;
}

void svt_backward(const SvtContext& ctx, const std::vector<cplx>& g_out,
                  std::vector<cplx>& g_in, double& g_tau) {
  const std::size_t m = ctx.m, n = ctx.n, r = ctx.s.size();
  g_in = g_out;
  g_tau = 0.0;

  const double eps = 0.01 * ctx.sigma_bar;
  double dl_dzeta = 0.0;
  for (std::size_t j = 0; j < r; ++j) {
    const cplx* uj = ctx.u.data() + j * m;
    const cplx* vj = ctx.v.data() + j * n;
    // c_j = u_j^H G v_j
    cplx c(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      cplx acc(0.0, 0.0);
      const cplx* col = g_out.data() + k * m;
      for (std::size_t i = 0; i < m; ++i) acc += std::conj(uj[i]) * col[i];
      c += acc * vj[k];
    }
    if (!ctx.kept[j]) {
      // remove the dropped component: g -= u_j c_j v_j^H
      for (std::size_t k = 0; k < n; ++k) {
        const cplx vc = c * std::conj(vj[k]);
        cplx* col = g_in.data() + k * m;
        for (std::size_t i = 0; i < m; ++i) col[i] -= uj[i] * vc;
      }
    }
    if (eps > 0.0) {
      const double sj = ctx.s[j] - ctx.zeta;
      const double sg = sigmoid(sj / eps);
      const double ds_dzeta = -(sj > 0.0 ? 1.0 : 0.0) + sg -
                              (ctx.zeta / eps) * sg * (1.0 - sg);
      dl_dzeta += c.real() * ds_dzeta;
    }
  }
  const double st = sigmoid(ctx.tau);
  g_tau = dl_dzeta * st * (1.0 - st) * ctx.sigma_bar;
}

Tensor lowrank_forward(const Tensor& x, const Tensor& tau, const PatchSpec& spec,
                       bool surrogate, LowRankContext& ctx) {
  require_ndim("lowrank input", x, 3);
  const std::size_t T = x.dim(0), X = x.dim(1), Y = x.dim(2);
  ctx.boxes = patch_layout(T, X, Y, spec);
  if (tau.size() != ctx.boxes.size()) {
    throw ShapeError("lowrank threshold count " + std::to_string(tau.size()) +
                     " does not match patch count " + std::to_string(ctx.boxes.size()));
  }

  ctx.coverage = Tensor({X, Y});
  for (std::size_t p = 0; p < ctx.boxes.size() / spec.nt; ++p) {
    // spatial boxes repeat identically for every temporal group
    const PatchBox& b = ctx.boxes[p];
    for (std::size_t xx = b.x0; xx < b.x1; ++xx) {
      for (std::size_t yy = b.y0; yy < b.y1; ++yy) {
        ctx.coverage[ctx.coverage.idx(xx, yy)] += 1.0;
      }
    }
  }

  ctx.svt.assign(ctx.boxes.size(), SvtContext{});
  Tensor out({T, X, Y});
  for (std::size_t p = 0; p < ctx.boxes.size(); ++p) {
    const PatchBox& b = ctx.boxes[p];
    const std::size_t pw = (b.x1 - b.x0) * (b.y1 - b.y0);
    const std::size_t nf = b.t1 - b.t0;
    std::vector<cplx> cas(pw * nf);
    for (std::size_t k = 0; k < nf; ++k) {
      std::size_t row = 0;
      for (std::size_t xx = b.x0; xx < b.x1; ++xx) {
        for (std::size_t yy = b.y0; yy < b.y1; ++yy, ++row) {
          cas[k * pw + row] = x[x.idx(b.t0 + k, xx, yy)];
        }
      }
    }
    std::vector<cplx> rec;
    try {
      rec = svt_apply(cas, pw, nf, tau[p].real(), surrogate, ctx.svt[p]);
    } catch (const NumericError& e) {
      throw NumericError("patch " + std::to_string(p) + ": " + e.what());
    }
    for (std::size_t k = 0; k < nf; ++k) {
      std::size_t row = 0;
      for (std::size_t xx = b.x0; xx < b.x1; ++xx) {
        for (std::size_t yy = b.y0; yy < b.y1; ++yy, ++row) {
          out[out.idx(b.t0 + k, xx, yy)] +=
              rec[k * pw + row] / ctx.coverage[ctx.coverage.idx(xx, yy)];
        }
      }
    }
  }
  return out;
}

Tensor lowrank_backward(const LowRankContext& ctx, const Tensor& g_out,
                        Tensor& g_tau) {
  Tensor g_x(g_out.dims());
  for (std::size_t p = 0; p < ctx.boxes.size(); ++p) {
    const PatchBox& b = ctx.boxes[p];
    const std::size_t pw = (b.x1 - b.x0) * (b.y1 - b.y0);
    const std::size_t nf = b.t1 - b.t0;
    std::vector<cplx> g_patch(pw * nf);
    for (std::size_t k = 0; k < nf; ++k) {
      std::size_t row = 0;
      for (std::size_t xx = b.x0; xx < b.x1; ++xx) {
        for (std::size_t yy = b.y0; yy < b.y1; ++yy, ++row) {
          g_patch[k * pw + row] =
              g_out[g_out.idx(b.t0 + k, xx, yy)] /
              ctx.coverage[ctx.coverage.idx(xx, yy)].real();
        }
      }
    }
    std::vector<cplx> g_cas;
    double gt = 0.0;
    svt_backward(ctx.svt[p], g_patch, g_cas, gt);
    g_tau[p] += cplx(gt, 0.0);
    for (std::size_t k = 0; k < nf; ++k) {
      std::size_t row = 0;
      for (std::size_t xx = b.x0; xx < b.x1; ++xx) {
        for (std::size_t yy = b.y0; yy < b.y1; ++yy, ++row) {
          g_x[g_x.idx(b.t0 + k, xx, yy)] += g_cas[k * pw + row];
        }
      }
    }
  }
  return g_x;
}

KNetParams init_knet(std::size_t filters, std::size_t kernel, std::size_t coils,
                     std::size_t attention_ratio, bool attention, Rng& rng) {
  const std::size_t f = filters, k = kernel;
  KNetParams p;
  p.w1 = complex_kernel({f, 1, k, k, k}, k * k * k, rng);
  p.w2 = complex_kernel({f, f, k, k, k}, f * k * k * k, rng);
  p.w3 = complex_kernel({1, f, k, k, k}, f * k * k * k, rng);
  p.mb1 = Tensor::zeros({f});
  p.mb2 = Tensor::zeros({f});
  if (attention) {
    p.att1 = make_attention_weights(coils, attention_ratio, rng);
    p.att2 = make_attention_weights(coils, attention_ratio, rng);
  }
  return p;
}

Tensor knet_forward(const Tensor& y, const KNetParams& p, bool use_attention,
                    bool residual, KNetTrace& tr) {
  require_ndim("knet input", y, 4);
  const std::size_t T = y.dim(0), C = y.dim(1), X = y.dim(2), Yd = y.dim(3);

  tr.f0 = y.reshaped({T, 1, C, X, Yd});
  tr.l1 = conv3d_cxy(tr.f0, p.w1, Tensor());
  tr.a1 = modrelu(tr.l1, p.mb1);
  tr.t1 = use_attention ? se_attention(tr.a1, p.att1, 2, tr.ac1) : tr.a1;
  tr.l2 = conv3d_cxy(tr.t1, p.w2, Tensor());
  tr.a2 = modrelu(tr.l2, p.mb2);
  tr.t2 = use_attention ? se_attention(tr.a2, p.att2, 2, tr.ac2) : tr.a2;
  const Tensor l3 = conv3d_cxy(tr.t2, p.w3, Tensor());
  Tensor out = l3.reshaped({T, C, X, Yd});
  if (residual) out = out + y;
  return out;
}

Tensor knet_backward(const KNetParams& p, bool use_attention, bool residual,
                     const KNetTrace& tr, const Tensor& g_out, KNetParams& g) {
  const std::size_t T = g_out.dim(0), C = g_out.dim(1), X = g_out.dim(2),
                    Yd = g_out.dim(3);
  const Tensor g_l3 = g_out.reshaped({T, 1, C, X, Yd});
  Tensor unused_bias;
  const Tensor g_t2 = conv3d_cxy_backward(tr.t2, p.w3, g_l3, g.w3, unused_bias);
  const Tensor g_a2 =
      use_attention ? se_attention_backward(tr.a2, p.att2, 2, tr.ac2, g_t2, g.att2)
                    : g_t2;
  const Tensor g_l2 = modrelu_backward(tr.l2, p.mb2, g_a2, g.mb2);
  const Tensor g_t1 = conv3d_cxy_backward(tr.t1, p.w2, g_l2, g.w2, unused_bias);
  const Tensor g_a1 =
      use_attention ? se_attention_backward(tr.a1, p.att1, 2, tr.ac1, g_t1, g.att1)
                    : g_t1;
  const Tensor g_l1 = modrelu_backward(tr.l1, p.mb1, g_a1, g.mb1);
  const Tensor g_f0 = conv3d_cxy_backward(tr.f0, p.w1, g_l1, g.w1, unused_bias);
  Tensor g_y = g_f0.reshaped({T, C, X, Yd});
  if (residual) g_y = g_y + g_out;
  return g_y;
}

}  // namespace aliknet
