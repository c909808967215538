// Command-line front end: dataset synthesis, training, reconstruction,
// evaluation, gradient checking, and figure export on top of the library.
//
// Every failure is reported as a single line "error: <category>: <message>"
// on stderr with a category-specific exit status (see README).

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aliknet/config.hpp"
#include "aliknet/figure.hpp"
#include "aliknet/metrics.hpp"
#include "aliknet/mri.hpp"
#include "aliknet/network.hpp"
#include "aliknet/serialize.hpp"
#include "aliknet/training.hpp"

namespace fs = std::filesystem;
using namespace aliknet;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("short write to " + path);
}

// Sample directories under `dir`, sorted by name. A sample directory is any
// directory that carries a sample.json manifest.
std::vector<fs::path> list_sample_dirs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "sample.json")) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CineSample> load_samples(const std::string& dir, std::size_t limit) {
  std::vector<CineSample> out;
  for (const fs::path& p : list_sample_dirs(dir)) {
    if (limit > 0 && out.size() == limit) break;
    out.push_back(load_sample(p.string()));
  }
  if (out.empty()) throw ConfigError("no samples found in " + dir);
  return out;
}

void check_sample_dims(const CineSample& s, const NetworkConfig& cfg,
                       const std::string& what) {
  const auto& d = s.full_kspace.dims();
  if (d[0] != cfg.T || d[1] != cfg.C || d[2] != cfg.X || d[3] != cfg.Y) {
    throw ConfigError(what + " dims (t,c,x,y)=(" + std::to_string(d[0]) + "," +
                      std::to_string(d[1]) + "," + std::to_string(d[2]) + "," +
                      std::to_string(d[3]) + ") do not match the configuration (" +
                      std::to_string(cfg.T) + "," + std::to_string(cfg.C) + "," +
                      std::to_string(cfg.X) + "," + std::to_string(cfg.Y) + ")");
  }
}

json metric_json(const MetricReport& r, bool with_frames) {
  json doc{{"nrmse", r.nrmse}, {"psnr_db", r.psnr_db}, {"ssim", r.ssim}};
  if (with_frames) {
    doc["nrmse_frames"] = r.nrmse_frames;
    doc["psnr_frames"] = r.psnr_frames;
    doc["ssim_frames"] = r.ssim_frames;
  }
  return doc;
}

struct ReconResult {
  NetworkState out;
  Tensor zero_filled;
};

ReconResult run_network(const Checkpoint& ck, const CineSample& s) {
  check_sample_dims(s, ck.cfg, "sample");
  const EncodingOperator op{s.maps, s.mask};
  const NetworkState init = init_state(op, s.under_kspace);
  ForwardTrace trace;
  NetworkState out = network_forward(init, ck.params, ck.cfg, op, s.under_kspace, trace);
  return ReconResult{std::move(out), init.x};
}

// Validation report: the trained network and the zero-filled baseline on each
// held-out sample, using the sampling pattern stored with the sample so that
// a later `recon` + `eval` reproduces these numbers exactly.
json validate_checkpoint(const Checkpoint& ck, const std::string& dir,
                         std::size_t limit) {
  json samples = json::array();
  MetricReport mean, zf_mean;
  std::size_t n = 0;
  for (const fs::path& p : list_sample_dirs(dir)) {
    if (limit > 0 && n == limit) break;
    const CineSample s = load_sample(p.string());
    const ReconResult rr = run_network(ck, s);
    const MetricReport net = evaluate(rr.out.x, s.reference);
    const MetricReport zf = evaluate(rr.zero_filled, s.reference);
    json entry = metric_json(net, false);
    entry["name"] = p.filename().string();
    entry["acceleration"] = s.acceleration;
    entry["zero_filled"] = metric_json(zf, false);
    samples.push_back(std::move(entry));
    mean.nrmse += net.nrmse;
    mean.psnr_db += net.psnr_db;
    mean.ssim += net.ssim;
    zf_mean.nrmse += zf.nrmse;
    zf_mean.psnr_db += zf.psnr_db;
    zf_mean.ssim += zf.ssim;
    ++n;
  }
  if (n == 0) throw ConfigError("no samples found in " + dir);
  const double inv = 1.0 / static_cast<double>(n);
  mean.nrmse *= inv;
  mean.psnr_db *= inv;
  mean.ssim *= inv;
  zf_mean.nrmse *= inv;
  zf_mean.psnr_db *= inv;
  zf_mean.ssim *= inv;
  return json{{"count", n},
              {"samples", std::move(samples)},
              {"mean", metric_json(mean, false)},
              {"zero_filled_mean", metric_json(zf_mean, false)}};
}

int exit_code_for(const std::string& category) {
  if (category == "config") return 3;
  if (category == "shape") return 4;
  if (category == "format") return 5;
  if (category == "numeric") return 6;
  if (category == "io") return 7;
  return 1;
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

struct PhantomArgs {
  std::string out;
  std::size_t count = 16;
  std::size_t t = 8, x = 32, y = 32, coils = 4;
  double r_min = 2.0, r_max = 8.0;
  std::size_t center_lines = 4;
  std::uint64_t seed = 0;
};

void cmd_phantom(const PhantomArgs& a) {
  if (a.r_min < 1.0 || a.r_max < a.r_min) {
    throw ConfigError("acceleration range must satisfy 1 <= r-min <= r-max");
  }
  ensure_dir(a.out);
  const std::vector<CineSample> data =
      make_dataset(a.count, a.t, a.x, a.y, a.coils, a.r_min, a.r_max,
                   a.center_lines, a.seed);
  char name[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::snprintf(name, sizeof name, "sample%03zu", i);
    save_sample((fs::path(a.out) / name).string(), data[i]);
  }
  std::cout << "wrote " << data.size() << " samples to " << a.out << "\n";
}

struct MaskArgs {
  std::string out;
  std::size_t t = 8, y = 32;
  double accel = 4.0;
  std::size_t center_lines = 4;
  std::uint64_t seed = 0;
};

void cmd_mask(const MaskArgs& a) {
  Rng rng(a.seed);
  const Tensor mask = generate_mask(a.t, a.y, a.accel, a.center_lines, rng);
  write_tensor(a.out, mask);
  double kept = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) kept += mask[i].real();
  std::cout << "wrote " << a.t << "x" << a.y << " mask to " << a.out
            << " (sampled fraction " << kept / static_cast<double>(mask.size())
            << ")\n";
}

struct TrainArgs {
  std::string config;
  std::string output;  // optional override of paths.output
};

void cmd_train(const TrainArgs& a) {
  RunConfig rc = RunConfig::from_file(a.config);
  if (!a.output.empty()) rc.output_dir = a.output;
  if (rc.dataset_dir.empty()) throw ConfigError("paths.dataset is required");

  const std::vector<CineSample> dataset = load_samples(rc.dataset_dir, 0);
  check_sample_dims(dataset.front(), rc.net, "dataset sample");

  ensure_dir(rc.output_dir);
  const fs::path out(rc.output_dir);
  const json echo = rc.echo();
  write_text((out / "config_echo.json").string(), echo.dump(2) + "\n");

  std::ofstream log_csv((out / "loss_log.csv").string(),
                        std::ios::binary | std::ios::trunc);
  if (!log_csv) throw IoError("cannot open " + (out / "loss_log.csv").string());
  log_csv << "step,l_image,l_kspace,l_total,accel\n";
  char line[256];

  const std::size_t report_every = std::max<std::size_t>(1, rc.train.steps / 10);
  const StepCallback on_step = [&](const StepLog& s, const NetworkParams& params,
                                   const OptimState& opt) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g\n", s.step,
                  s.l_image, s.l_kspace, s.l_total, s.accel);
    log_csv << line;
    if (s.step % report_every == 0 || s.step == rc.train.steps) {
      std::snprintf(line, sizeof line, "step %6zu  loss %.6f  (image %.6f, kspace %.6f)  R=%.2f\n",
                    s.step, s.l_total, s.l_image, s.l_kspace, s.accel);
      std::cout << line << std::flush;
    }
    if (rc.train.checkpoint_every > 0 && s.step % rc.train.checkpoint_every == 0 &&
        s.step != rc.train.steps) {
      const std::string dir = (out / ("checkpoint-" + std::to_string(s.step))).string();
      save_checkpoint(dir, Checkpoint{rc.net, params, opt, s.step, echo});
    }
  };

  const TrainResult result = train(dataset, rc.net, rc.train, on_step);
  log_csv.close();
  if (!log_csv) throw IoError("short write to " + (out / "loss_log.csv").string());

  const Checkpoint final_ck{rc.net, result.params, result.opt, rc.train.steps, echo};
  save_checkpoint((out / "checkpoint").string(), final_ck);

  json report{{"steps", rc.train.steps},
              {"moving_average",
               {{"window", 200},
                {"at_step_50", moving_average(result.log, 50, 200)},
                {"at_end", moving_average(result.log, rc.train.steps, 200)}}},
              {"final",
               {{"l_image", result.log.back().l_image},
                {"l_kspace", result.log.back().l_kspace},
                {"l_total", result.log.back().l_total}}},
              {"validation", json()}};
  if (!rc.validation_dir.empty()) {
    report["validation"] = validate_checkpoint(final_ck, rc.validation_dir,
                                               rc.validation_count);
    const json& v = report["validation"];
    std::cout << "validation over " << v["count"] << " samples: psnr "
              << v["mean"]["psnr_db"] << " dB (zero-filled "
              << v["zero_filled_mean"]["psnr_db"] << " dB), ssim "
              << v["mean"]["ssim"] << "\n";
  }
  write_text((out / "report.json").string(), report.dump(2) + "\n");
  std::cout << "wrote checkpoint and report to " << rc.output_dir << "\n";
}

struct ReconArgs {
  std::string checkpoint, sample, out;
};

void cmd_recon(const ReconArgs& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const CineSample s = load_sample(a.sample);
  const ReconResult rr = run_network(ck, s);
  ensure_dir(a.out);
  const fs::path out(a.out);
  write_tensor((out / "recon_x.ctns").string(), rr.out.x);
  write_tensor((out / "recon_y.ctns").string(), rr.out.y);
  write_tensor((out / "zf_x.ctns").string(), rr.zero_filled);
  std::cout << "wrote recon_x.ctns, recon_y.ctns, zf_x.ctns to " << a.out << "\n";
}

struct EvalArgs {
  std::string pred, ref, out;
};

void cmd_eval(const EvalArgs& a) {
  const Tensor pred = read_tensor(a.pred);
  const Tensor ref = read_tensor(a.ref);
  const MetricReport r = evaluate(pred, ref);
  const std::string doc = metric_json(r, true).dump(2) + "\n";
  std::cout << doc;
  if (!a.out.empty()) write_text(a.out, doc);
}

struct GradcheckArgs {
  std::size_t t = 4, x = 8, y = 8, coils = 2;
  std::size_t iterations = 1, filters = 4, knet_filters = 4;
  std::string preset;
  std::uint64_t seed = 0;
  double tolerance = 1e-5;
};

void cmd_gradcheck(const GradcheckArgs& a) {
  NetworkConfig cfg;
  cfg.T = a.t;
  cfg.X = a.x;
  cfg.Y = a.y;
  cfg.C = a.coils;
  cfg.iterations = a.iterations;
  cfg.filters = a.filters;
  cfg.knet_filters = a.knet_filters;
  cfg.patches = PatchSpec{2, 2, 2};
  cfg.spatial_kernel = 3;
  cfg.temporal_kernel = 3;
  cfg.kspace_kernel = 3;
  if (!a.preset.empty()) cfg.apply_preset(a.preset);
  const GradCheckReport report = grad_check_network(cfg, a.seed);
  char line[128];
  for (const GradCheckEntry& e : report.entries) {
    std::snprintf(line, sizeof line, "%-32s %.6e\n", e.name.c_str(), e.rel_err);
    std::cout << line;
  }
  std::snprintf(line, sizeof line, "%-32s %.6e\n", "worst", report.worst);
  std::cout << line;
  if (!(report.worst < a.tolerance)) {
    throw NumericError("gradient check worst relative error " +
                       std::to_string(report.worst) + " exceeds tolerance");
  }
  std::cout << "all parameter groups within tolerance " << a.tolerance << "\n";
}

struct FigureArgs {
  std::string input, ref, out, error_out;
  std::size_t frame = 0;
};

void cmd_figure(const FigureArgs& a) {
  const Tensor x = read_tensor(a.input);
  write_magnitude_pgm(a.out, x, a.frame);
  std::cout << "wrote " << a.out << "\n";
  if (!a.error_out.empty()) {
    const Tensor ref = read_tensor(a.ref);
    write_error_pgm(a.error_out, x, ref, a.frame);
    std::cout << "wrote " << a.error_out << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unrolled dual-domain dynamic MRI reconstruction"};
  app.require_subcommand(1);

  PhantomArgs pa;
  CLI::App* phantom = app.add_subcommand(
      "phantom", "Generate a synthetic cine dataset of sample directories");
  phantom->add_option("--out", pa.out, "Output dataset directory")->required();
  phantom->add_option("--count", pa.count, "Number of samples");
  phantom->add_option("--t", pa.t, "Frames per sample");
  phantom->add_option("--x", pa.x, "Frequency-encode size");
  phantom->add_option("--y", pa.y, "Phase-encode size");
  phantom->add_option("--coils", pa.coils, "Coil count");
  phantom->add_option("--r-min", pa.r_min, "Minimum acceleration");
  phantom->add_option("--r-max", pa.r_max, "Maximum acceleration");
  phantom->add_option("--center-lines", pa.center_lines, "Always-sampled center lines");
  phantom->add_option("--seed", pa.seed, "Random seed");
  phantom->callback([&] { cmd_phantom(pa); });

  MaskArgs ma;
  CLI::App* mask = app.add_subcommand("mask", "Generate a sampling mask tensor");
  mask->add_option("--out", ma.out, "Output tensor file")->required();
  mask->add_option("--t", ma.t, "Frames");
  mask->add_option("--y", ma.y, "Phase-encode size");
  mask->add_option("--accel", ma.accel, "Acceleration factor");
  mask->add_option("--center-lines", ma.center_lines, "Always-sampled center lines");
  mask->add_option("--seed", ma.seed, "Random seed");
  mask->callback([&] { cmd_mask(ma); });

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "Train a network from a run config");
  train->add_option("--config", ta.config, "Run configuration file (JSON)")->required();
  train->add_option("--output", ta.output, "Override the configured output directory");
  train->callback([&] { cmd_train(ta); });

  ReconArgs ra;
  CLI::App* recon =
      app.add_subcommand("recon", "Reconstruct one sample with a trained checkpoint");
  recon->add_option("--checkpoint", ra.checkpoint, "Checkpoint directory")->required();
  recon->add_option("--sample", ra.sample, "Sample directory")->required();
  recon->add_option("--out", ra.out, "Output directory")->required();
  recon->callback([&] { cmd_recon(ra); });

  EvalArgs ea;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Compare a reconstruction against a reference");
  eval_cmd->add_option("--pred", ea.pred, "Predicted image tensor")->required();
  eval_cmd->add_option("--ref", ea.ref, "Reference image tensor")->required();
  eval_cmd->add_option("--out", ea.out, "Also write the report to this file");
  eval_cmd->callback([&] { cmd_eval(ea); });

  GradcheckArgs ga;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of every parameter group");
  gradcheck->add_option("--t", ga.t, "Frames");
  gradcheck->add_option("--x", ga.x, "Frequency-encode size");
  gradcheck->add_option("--y", ga.y, "Phase-encode size");
  gradcheck->add_option("--coils", ga.coils, "Coil count");
  gradcheck->add_option("--iterations", ga.iterations, "Unrolled iterations");
  gradcheck->add_option("--filters", ga.filters, "Image-branch filters");
  gradcheck->add_option("--knet-filters", ga.knet_filters, "K-space-branch filters");
  gradcheck->add_option("--preset", ga.preset, "Named variant preset");
  gradcheck->add_option("--seed", ga.seed, "Random seed");
  gradcheck->add_option("--tolerance", ga.tolerance, "Relative-error tolerance");
  gradcheck->callback([&] { cmd_gradcheck(ga); });

  FigureArgs fa;
  CLI::App* figure =
      app.add_subcommand("figure", "Render a frame as an 8-bit portable graymap");
  figure->add_option("--input", fa.input, "Image tensor file")->required();
  figure->add_option("--frame", fa.frame, "Frame index");
  figure->add_option("--out", fa.out, "Output graymap file")->required();
  CLI::Option* ref_opt =
      figure->add_option("--ref", fa.ref, "Reference tensor for the error map");
  figure->add_option("--error-out", fa.error_out, "Write a 5x scaled error map here")
      ->needs(ref_opt);
  figure->callback([&] { cmd_figure(fa); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
