#include "aliknet/network.hpp"

#include <cmath>
#include <utility>

#include "aliknet/errors.hpp"

namespace aliknet {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

template <typename TensorT, typename F>
void visit_attention(TensorT& a, const std::string& prefix, F&& f) {
  f(prefix + ".w1", a.w1, false);
  f(prefix + ".b1", a.b1, false);
  f(prefix + ".w2", a.w2, false);
  f(prefix + ".b2", a.b2, false);
}

template <typename StageT, typename F>
void visit_stage(StageT& s, const std::string& prefix, F&& f) {
  f(prefix + ".ws", s.ws, true);
  f(prefix + ".bs", s.bs, true);
  f(prefix + ".mb1", s.mb1, false);
  f(prefix + ".wt", s.wt, true);
  f(prefix + ".bt", s.bt, true);
  f(prefix + ".mb2", s.mb2, false);
}

// Single enumeration of the parameter tree; both const-nesses and the
// zeroing helper go through here so ordering can never diverge.
template <typename ParamsT, typename F>
void visit_params(ParamsT& p, const NetworkConfig& cfg, F&& f) {
  for (std::size_t n = 0; n < p.iters.size(); ++n) {
    auto& it = p.iters[n];
    const std::string base = "iter" + std::to_string(n);
    if (cfg.image_net) {
      const std::string u = base + ".unet";
      visit_stage(it.unet.enc1, u + ".enc1", f);
      visit_stage(it.unet.enc2, u + ".enc2", f);
      visit_stage(it.unet.dec2, u + ".dec2", f);
      visit_stage(it.unet.dec1, u + ".dec1", f);
      f(u + ".up1_w", it.unet.up1_w, true);
      f(u + ".up1_b", it.unet.up1_b, true);
      f(u + ".up2_w", it.unet.up2_w, true);
      f(u + ".up2_b", it.unet.up2_b, true);
      if (cfg.attention) {
        visit_attention(it.unet.att2, u + ".att2", f);
        visit_attention(it.unet.att1, u + ".att1", f);
      }
      f(u + ".out_w", it.unet.out_w, true);
      f(u + ".out_b", it.unet.out_b, true);
    }
    if (cfg.lowrank) {
      f(base + ".tau", it.tau, false);
    }
    if (cfg.kspace_branch) {
      const std::string k = base + ".knet";
      f(k + ".w1", it.knet.w1, true);
      f(k + ".w2", it.knet.w2, true);
      f(k + ".w3", it.knet.w3, true);
      f(k + ".mb1", it.knet.mb1, false);
      f(k + ".mb2", it.knet.mb2, false);
      if (cfg.attention) {
        visit_attention(it.knet.att1, k + ".att1", f);
        visit_attention(it.knet.att2, k + ".att2", f);
      }
      f(base + ".mu_raw", it.mu_raw, false);
    }
    if (cfg.image_branch()) {
      f(base + ".eta", it.eta, false);
      if (cfg.lowrank) f(base + ".alpha", it.alpha, false);
    }
    if (cfg.isl) {
      f(base + ".a_raw", it.a_raw, false);
      f(base + ".b_raw", it.b_raw, false);
    }
  }
}

void record(std::vector<std::string>* ops, const char* tag) {
  if (ops) ops->emplace_back(tag);
}

}  // namespace

NetworkConfig NetworkConfig::full_scale() {
  NetworkConfig cfg;
  cfg.T = 25;
  cfg.X = cfg.Y = 176;
  cfg.C = 15;
  cfg.iterations = 8;
  cfg.filters = 12;
  cfg.knet_filters = 12;
  cfg.patches = PatchSpec{5, 4, 4};
  return cfg;
}

void NetworkConfig::apply_preset(const std::string& name) {
  struct Row {
    const char* name;
    bool image_net, lowrank, kspace_branch, attention, isl;
  };
  static const Row rows[] = {
      {"a-inet", true, false, false, true, false},
      {"a-knet", false, false, true, true, false},
      {"a-linet", true, true, false, true, false},
      {"a-iknet", true, false, true, true, true},
      {"liknet", true, true, true, false, true},
      {"a-liknet", true, true, true, true, true},
  };
  for (const Row& r : rows) {
    if (name == r.name) {
      image_net = r.image_net;
      lowrank = r.lowrank;
      kspace_branch = r.kspace_branch;
      attention = r.attention;
      isl = r.isl;
      return;
    }
  }
  throw ConfigError("unknown network preset '" + name + "'");
}

void NetworkConfig::validate() const {
  if (T == 0 || X == 0 || Y == 0 || C == 0) {
    throw ConfigError("all data dims must be positive");
  }
  if (filters == 0 || knet_filters == 0) {
    throw ConfigError("filter counts must be positive");
  }
  if (attention_ratio == 0) {
    throw ConfigError("attention ratio must be positive");
  }
  for (std::size_t k : {spatial_kernel, temporal_kernel, kspace_kernel}) {
    if (k == 0 || k % 2 == 0) {
      throw ConfigError("kernel sizes must be odd");
    }
  }
  if (!image_branch() && !kspace_branch) {
    throw ConfigError("at least one branch must be enabled");
  }
  if (isl && !(kspace_branch && image_branch())) {
    throw ConfigError("information sharing requires both branches");
  }
  if (lowrank && (patches.nt == 0 || T % patches.nt != 0)) {
    throw ConfigError("patch frame groups must divide the frame count");
  }
}

NetworkParams init_params(const NetworkConfig& cfg, Rng& rng) {
  cfg.validate();
  NetworkParams p;
  p.iters.resize(cfg.iterations);
  const std::size_t n_patches =
      cfg.lowrank ? patch_layout(cfg.T, cfg.X, cfg.Y, cfg.patches).size() : 0;
  for (std::size_t n = 0; n < cfg.iterations; ++n) {
    IterationParams& it = p.iters[n];
    Rng iter_rng = rng.fork(n);
    if (cfg.image_net) {
      it.unet = init_unet(cfg.filters, cfg.spatial_kernel, cfg.temporal_kernel,
                          cfg.T, cfg.attention_ratio, cfg.attention, iter_rng);
    }
    if (cfg.lowrank) {
      it.tau = Tensor::full({n_patches}, cplx(-2.0, 0.0));
    }
    if (cfg.kspace_branch) {
      it.knet = init_knet(cfg.knet_filters, cfg.kspace_kernel, cfg.C,
                          cfg.attention_ratio, cfg.attention, iter_rng);
      // softplus pre-image of 1
      it.mu_raw = Tensor::full({1}, cplx(std::log(std::exp(1.0) - 1.0), 0.0));
    }
    if (cfg.image_branch()) {
      it.eta = Tensor::full({1}, cplx(1.0, 0.0));
      it.alpha = Tensor::full({1}, cplx(0.5, 0.0));
    }
    if (cfg.isl) {
      // sigmoid pre-image of 0.5
      it.a_raw = Tensor::zeros({1});
      it.b_raw = Tensor::zeros({1});
    }
  }
  return p;
}

NetworkParams zero_like(const NetworkParams& p) {
  NetworkParams z = p;
  // Tensors absent from the source stay empty; present ones are zeroed.
  for (IterationParams& it : z.iters) {
    for (Tensor* t :
         {&it.tau, &it.eta, &it.alpha, &it.mu_raw, &it.a_raw, &it.b_raw}) {
      if (!t->empty()) t->fill(cplx(0.0, 0.0));
    }
    for (StageParams* s : {&it.unet.enc1, &it.unet.enc2, &it.unet.dec2, &it.unet.dec1}) {
      for (Tensor* t : {&s->ws, &s->bs, &s->mb1, &s->wt, &s->bt, &s->mb2}) {
        if (!t->empty()) t->fill(cplx(0.0, 0.0));
      }
    }
    for (Tensor* t : {&it.unet.up1_w, &it.unet.up1_b, &it.unet.up2_w,
                      &it.unet.up2_b, &it.unet.out_w, &it.unet.out_b,
                      &it.knet.w1, &it.knet.w2, &it.knet.w3, &it.knet.mb1,
                      &it.knet.mb2}) {
      if (!t->empty()) t->fill(cplx(0.0, 0.0));
    }
    for (AttentionWeights* a : {&it.unet.att2, &it.unet.att1, &it.knet.att1,
                                &it.knet.att2}) {
      for (Tensor* t : {&a->w1, &a->b1, &a->w2, &a->b2}) {
        if (!t->empty()) t->fill(cplx(0.0, 0.0));
      }
    }
  }
  return z;
}

void for_each_param(NetworkParams& p, const NetworkConfig& cfg,
                    const ParamVisitor& f) {
  visit_params(p, cfg, f);
}

void for_each_param(
    const NetworkParams& p, const NetworkConfig& cfg,
    const std::function<void(const std::string&, const Tensor&, bool)>& f) {
  visit_params(p, cfg, f);
}

ParamCount count_params(const NetworkParams& p, const NetworkConfig& cfg) {
  struct Bucket {
    const char* key;
    const char* label;
  };
  static const Bucket buckets[] = {
      {".unet.", "image subnet"},        {".tau", "low-rank thresholds"},
      {".knet.", "k-space subnet"},      {".eta", "image dc"},
      {".alpha", "image dc"},            {".mu_raw", "k-space dc"},
      {".a_raw", "information sharing"}, {".b_raw", "information sharing"},
  };
  ParamCount out;
  auto add = [&](const std::string& label, std::size_t n) {
    for (auto& [name, count] : out.by_component) {
      if (name == label) {
        count += n;
        return;
      }
    }
    out.by_component.emplace_back(label, n);
  };
  for_each_param(p, cfg,
                 [&](const std::string& name, const Tensor& t, bool complex_valued) {
                   const std::size_t dof = t.size() * (complex_valued ? 2 : 1);
                   out.total += dof;
                   for (const Bucket& b : buckets) {
                     if (name.find(b.key) != std::string::npos) {
                       add(b.label, dof);
                       return;
                     }
                   }
                   add("other", dof);
                 });
  return out;
}

NetworkState init_state(const EncodingOperator& op, const Tensor& y_u) {
  return NetworkState{op.adjoint(y_u), y_u};
}

NetworkState network_forward(const NetworkState& init, const NetworkParams& params,
                             const NetworkConfig& cfg, const EncodingOperator& op,
                             const Tensor& y_u, ForwardTrace& trace,
                             bool svt_surrogate, std::vector<std::string>* ops) {
  cfg.validate();
  if (params.iters.size() != cfg.iterations) {
    throw ConfigError("parameter set has " + std::to_string(params.iters.size()) +
                      " iterations, config wants " + std::to_string(cfg.iterations));
  }
  require_ndim("network image state", init.x, 3);
  require_ndim("network k-space state", init.y, 4);
  if (init.x.dim(0) != cfg.T || init.x.dim(1) != cfg.X || init.x.dim(2) != cfg.Y ||
      init.y.dim(0) != cfg.T || init.y.dim(1) != cfg.C ||
      init.y.dim(2) != cfg.X || init.y.dim(3) != cfg.Y) {
    throw ShapeError("state dims " + dims_to_string(init.x.dims()) + " / " +
                     dims_to_string(init.y.dims()) + " do not match the config");
  }

  Tensor x = init.x;
  Tensor y = init.y;
  trace.iters.clear();
  trace.iters.resize(cfg.iterations);
  for (std::size_t n = 0; n < cfg.iterations; ++n) {
    const IterationParams& it = params.iters[n];
    IterationTrace& tr = trace.iters[n];

    if (cfg.kspace_branch) {
      record(ops, "knet");
      if (cfg.attention) record(ops, "attention:coil");
      tr.r = knet_forward(y, it.knet, cfg.attention, cfg.knet_residual, tr.knet);
      record(ops, "kspace_dc");
      y = kspace_dc(tr.r, y_u, op.mask, softplus(it.mu_raw[0].real()));
    }

    if (cfg.image_branch()) {
      if (cfg.image_net) {
        record(ops, "unet");
        if (cfg.attention) record(ops, "attention:time");
        tr.p = unet_forward(x, it.unet, cfg.attention, tr.unet);
      } else {
        tr.p = x;
      }
      if (cfg.lowrank) {
        record(ops, "lowrank");
        tr.q = lowrank_forward(x, it.tau, cfg.patches, svt_surrogate, tr.lowrank);
      } else {
        tr.q = tr.p;
      }
      record(ops, "image_dc");
      const ImageDCParams dc{it.eta[0].real(), it.alpha[0].real()};
      x = image_dc(tr.p, tr.q, y_u, op, dc, tr.idc);
    }

    if (cfg.isl) {
      record(ops, "isl");
      const IslParams sh{sigmoid(it.a_raw[0].real()), sigmoid(it.b_raw[0].real())};
      IslResult res = isl(x, y, op.maps, sh, tr.isl);
      x = std::move(res.x);
      y = std::move(res.y);
    }
  }

  if (!cfg.image_branch()) {
    // k-space-only variants still owe an image: coil-combined inverse
    // transform of the final k-space.
    record(ops, "kspace_to_image");
    x = fs_adjoint(y, op.maps);
  }
  return NetworkState{std::move(x), std::move(y)};
}

NetworkState network_backward(const NetworkParams& params, const NetworkConfig& cfg,
                              const EncodingOperator& op, const Tensor& y_u,
                              const ForwardTrace& trace, const Tensor& g_x_out,
                              const Tensor& g_y_out, NetworkParams& grads) {
  if (trace.iters.size() != cfg.iterations || grads.iters.size() != cfg.iterations) {
    throw ConfigError("trace or gradient buffers do not match the config");
  }
  Tensor g_x = g_x_out;
  Tensor g_y = g_y_out;

  if (!cfg.image_branch()) {
    g_y = g_y + fs_forward(g_x, op.maps);
    g_x = Tensor::zeros(g_x.dims());
  }

  for (std::size_t ni = cfg.iterations; ni-- > 0;) {
    const IterationParams& it = params.iters[ni];
    const IterationTrace& tr = trace.iters[ni];
    IterationParams& g = grads.iters[ni];

    if (cfg.isl) {
      const double a_raw = it.a_raw[0].real(), b_raw = it.b_raw[0].real();
      const IslParams sh{sigmoid(a_raw), sigmoid(b_raw)};
      IslGrads ig = isl_backward(op.maps, sh, tr.isl, g_x, g_y);
      g.a_raw[0] += cplx(ig.g_a * sh.a * (1.0 - sh.a), 0.0);
      g.b_raw[0] += cplx(ig.g_b * sh.b * (1.0 - sh.b), 0.0);
      g_x = std::move(ig.g_x);
      g_y = std::move(ig.g_y);
    }

    if (cfg.image_branch()) {
      const ImageDCParams dc{it.eta[0].real(), it.alpha[0].real()};
      ImageDCGrads dg = image_dc_backward(op, dc, tr.idc, g_x);
      g.eta[0] += cplx(dg.g_eta, 0.0);
      if (cfg.lowrank) g.alpha[0] += cplx(dg.g_alpha, 0.0);

      Tensor g_p = std::move(dg.g_p);
      Tensor g_from_lowrank;
      if (cfg.lowrank) {
        g_from_lowrank = lowrank_backward(tr.lowrank, dg.g_q, g.tau);
      } else {
        g_p = g_p + dg.g_q;  // q aliased p
      }
      Tensor g_x_new = cfg.image_net
                           ? unet_backward(it.unet, cfg.attention, tr.unet, g_p, g.unet)
                           : std::move(g_p);
      g_x = cfg.lowrank ? g_x_new + g_from_lowrank : std::move(g_x_new);
    }

    if (cfg.kspace_branch) {
      const double mu_raw = it.mu_raw[0].real();
      KspaceDCGrads kg =
          kspace_dc_backward(tr.r, y_u, op.mask, softplus(mu_raw), g_y);
      g.mu_raw[0] += cplx(kg.g_mu * sigmoid(mu_raw), 0.0);
      g_y = knet_backward(it.knet, cfg.attention, cfg.knet_residual, tr.knet,
                          kg.g_r, g.knet);
    }
  }
  return NetworkState{std::move(g_x), std::move(g_y)};
}

}  // namespace aliknet
