#include "aliknet/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aliknet/errors.hpp"

namespace aliknet {

namespace {

double sum_abs(const Tensor& pred, const Tensor& ref) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - ref[i]);
  return acc;
}

void abs_mean_backward(const Tensor& pred, const Tensor& ref, double inv_count,
                       Tensor& g) {
  g = Tensor(pred.dims());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const cplx d = pred[i] - ref[i];
    const double m = std::abs(d);
    g[i] = m == 0.0 ? cplx(0.0, 0.0) : cplx(d.real() / m * inv_count, d.imag() / m * inv_count);
  }
}

struct ParamView {
  std::vector<std::string> names;
  std::vector<Tensor*> tensors;
};

ParamView view_of(NetworkParams& p, const NetworkConfig& cfg) {
  ParamView v;
  for_each_param(p, cfg, [&](const std::string& name, Tensor& t, bool) {
    v.names.push_back(name);
    v.tensors.push_back(&t);
  });
  return v;
}

double rel_error_of(const Tensor& a, const Tensor& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::max(std::norm(a[i]), std::norm(b[i]));
  }
  return den == 0.0 ? 0.0 : std::sqrt(num / den);
}

double param_norm(const NetworkParams& p, const NetworkConfig& cfg) {
  double acc = 0.0;
  for_each_param(p, cfg, [&](const std::string&, const Tensor& t, bool) {
    for (std::size_t i = 0; i < t.size(); ++i) acc += std::norm(t[i]);
  });
  return std::sqrt(acc);
}

}  // namespace

LossReport loss(const Tensor& x_hat, const Tensor& y_hat, const Tensor& ref_x,
                const Tensor& ref_y, bool shared_norm) {
  require_same_dims("image loss", x_hat, ref_x);
  require_same_dims("k-space loss", y_hat, ref_y);
  const double nx = static_cast<double>(x_hat.size());
  const double ny = shared_norm ? nx : static_cast<double>(y_hat.size());
  LossReport r;
  r.l_image = sum_abs(x_hat, ref_x) / nx;
  r.l_kspace = sum_abs(y_hat, ref_y) / ny;
  r.l_total = r.l_image + r.l_kspace;
  return r;
}

void loss_backward(const Tensor& x_hat, const Tensor& y_hat, const Tensor& ref_x,
                   const Tensor& ref_y, bool shared_norm, Tensor& g_x,
                   Tensor& g_y) {
  require_same_dims("image loss", x_hat, ref_x);
  require_same_dims("k-space loss", y_hat, ref_y);
  const double nx = static_cast<double>(x_hat.size());
  const double ny = shared_norm ? nx : static_cast<double>(y_hat.size());
  abs_mean_backward(x_hat, ref_x, 1.0 / nx, g_x);
  abs_mean_backward(y_hat, ref_y, 1.0 / ny, g_y);
}

OptimState init_optimizer(const NetworkParams& params, const NetworkConfig& cfg,
                          const AdamConfig& acfg) {
  OptimState opt;
  opt.cfg = acfg;
  for_each_param(params, cfg, [&](const std::string& name, const Tensor& t, bool) {
    opt.names.push_back(name);
    opt.m.push_back(Tensor::zeros(t.dims()));
    opt.v.push_back(Tensor::zeros(t.dims()));
  });
  return opt;
}

void adam_step(NetworkParams& params, const NetworkParams& grads,
               const NetworkConfig& cfg, OptimState& opt) {
  ParamView pv = view_of(params, cfg);
  ParamView gv = view_of(const_cast<NetworkParams&>(grads), cfg);
  if (pv.tensors.size() != opt.m.size() || gv.tensors.size() != opt.m.size()) {
    throw ConfigError("optimizer state does not match the parameter set");
  }
  opt.step += 1;
  const double b1 = opt.cfg.beta1, b2 = opt.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(opt.step));
  for (std::size_t k = 0; k < pv.tensors.size(); ++k) {
    Tensor& p = *pv.tensors[k];
    const Tensor& g = *gv.tensors[k];
    Tensor& m = opt.m[k];
    Tensor& v = opt.v[k];
    require_same_dims("adam", p, g);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gr = g[i].real(), gi = g[i].imag();
      const double mr = b1 * m[i].real() + (1.0 - b1) * gr;
      const double mi = b1 * m[i].imag() + (1.0 - b1) * gi;
      const double vr = b2 * v[i].real() + (1.0 - b2) * gr * gr;
      const double vi = b2 * v[i].imag() + (1.0 - b2) * gi * gi;
      m[i] = cplx(mr, mi);
      v[i] = cplx(vr, vi);
      const double dr = opt.cfg.lr * (mr / bc1) / (std::sqrt(vr / bc2) + opt.cfg.eps);
      const double di = opt.cfg.lr * (mi / bc1) / (std::sqrt(vi / bc2) + opt.cfg.eps);
      p[i] = cplx(p[i].real() - dr, p[i].imag() - di);
    }
  }
}

GradCheckReport grad_check_network(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng sample_rng(seed);
  const CineSample sample =
      make_sample(cfg.T, cfg.X, cfg.Y, cfg.C, 3.0, 2, sample_rng);
  const EncodingOperator op{sample.maps, sample.mask};
  Rng param_rng(seed + 1);
  NetworkParams params = init_params(cfg, param_rng);
  const NetworkState st = init_state(op, sample.under_kspace);

  Rng probe_rng(seed + 2);
  Tensor probe_x(st.x.dims()), probe_y(st.y.dims());
  fill_normal(probe_x, probe_rng, 1.0);
  fill_normal(probe_y, probe_rng, 1.0);

  auto probe = [&](bool surrogate) {
    ForwardTrace tr;
    const NetworkState out =
        network_forward(st, params, cfg, op, sample.under_kspace, tr, surrogate);
    return dot(probe_x, out.x).real() + dot(probe_y, out.y).real();
  };

  auto grads_for = [&](bool surrogate) {
    ForwardTrace tr;
    network_forward(st, params, cfg, op, sample.under_kspace, tr, surrogate);
    NetworkParams g = zero_like(params);
    network_backward(params, cfg, op, sample.under_kspace, tr, probe_x, probe_y, g);
    return g;
  };
  NetworkParams grads_hard = grads_for(false);
  NetworkParams grads_smooth = grads_for(true);

  ParamView pv = view_of(params, cfg);
  ParamView hv = view_of(grads_hard, cfg);
  ParamView sv = view_of(grads_smooth, cfg);

  const double h = 1e-6;
  GradCheckReport report;
  for (std::size_t k = 0; k < pv.tensors.size(); ++k) {
    const bool is_tau = pv.names[k].find(".tau") != std::string::npos;
    Tensor& t = *pv.tensors[k];
    Tensor fd(t.dims());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const cplx saved = t[i];
      double parts[2];
      for (int part = 0; part < 2; ++part) {
        const cplx delta = part == 0 ? cplx(h, 0.0) : cplx(0.0, h);
        t[i] = saved + delta;
        const double up = probe(is_tau);
        t[i] = saved - delta;
        const double down = probe(is_tau);
        t[i] = saved;
        parts[part] = (up - down) / (2.0 * h);
      }
      fd[i] = cplx(parts[0], parts[1]);
    }
    const Tensor& analytic = is_tau ? *sv.tensors[k] : *hv.tensors[k];
    GradCheckEntry entry{pv.names[k], rel_error_of(analytic, fd)};
    report.worst = std::max(report.worst, entry.rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

TrainResult train(const std::vector<CineSample>& dataset,
                  const NetworkConfig& net_cfg, const TrainConfig& tcfg,
                  const StepCallback& on_step) {
  net_cfg.validate();
  if (dataset.empty()) throw ConfigError("training dataset is empty");
  if (tcfg.r_min < 1.0 || tcfg.r_max < tcfg.r_min) {
    throw ConfigError("acceleration range must satisfy 1 <= r_min <= r_max");
  }

  Rng master(tcfg.seed);
  Rng init_rng = master.fork(0);
  TrainResult result;
  result.params = init_params(net_cfg, init_rng);
  AdamConfig acfg;
  acfg.lr = tcfg.lr;
  result.opt = init_optimizer(result.params, net_cfg, acfg);

  for (std::size_t step = 1; step <= tcfg.steps; ++step) {
    const CineSample& sample = dataset[(step - 1) % dataset.size()];
    Rng step_rng = master.fork(step);
    const double accel = tcfg.r_min + (tcfg.r_max - tcfg.r_min) * step_rng.uniform();
    const Tensor mask = generate_mask(sample.reference.dim(0),
                                      sample.reference.dim(2), accel,
                                      tcfg.center_lines, step_rng);
    const Tensor y_u = apply_mask(sample.full_kspace, mask);
    const EncodingOperator op{sample.maps, mask};

    const NetworkState st = init_state(op, y_u);
    ForwardTrace tr;
    const NetworkState out =
        network_forward(st, result.params, net_cfg, op, y_u, tr);
    const LossReport lr = loss(out.x, out.y, sample.reference,
                               sample.full_kspace, tcfg.shared_loss_norm);
    if (!std::isfinite(lr.l_total)) {
      std::ostringstream msg;
      msg << "training diverged at step " << step
          << " (loss not finite; parameter norm "
          << param_norm(result.params, net_cfg) << ")";
      throw NumericError(msg.str());
    }

    Tensor g_x, g_y;
    loss_backward(out.x, out.y, sample.reference, sample.full_kspace,
                  tcfg.shared_loss_norm, g_x, g_y);
    NetworkParams grads = zero_like(result.params);
    network_backward(result.params, net_cfg, op, y_u, tr, g_x, g_y, grads);
    adam_step(result.params, grads, net_cfg, result.opt);

    StepLog entry{step, lr.l_image, lr.l_kspace, lr.l_total, accel};
    result.log.push_back(entry);
    if (on_step) on_step(entry, result.params, result.opt);
  }
  return result;
}

double moving_average(const std::vector<StepLog>& log, std::size_t upto,
                      std::size_t window) {
  if (log.empty() || upto == 0) return 0.0;
  const std::size_t end = std::min(upto, log.size());
  const std::size_t begin = end > window ? end - window : 0;
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += log[i].l_total;
  return acc / static_cast<double>(end - begin);
}

}  // namespace aliknet
