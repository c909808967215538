#include "aliknet/serialize.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "aliknet/errors.hpp"

namespace aliknet {

namespace {

namespace fs = std::filesystem;

constexpr char kMagic[4] = {'C', 'T', 'N', 'S'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kMaxRank = 8;

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  put_u64(buf, std::bit_cast<std::uint64_t>(v));
}

void put_f32(std::string& buf, float v) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
  std::string data;
  std::size_t pos = 0;
  std::string path;

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw FormatError(path + ": " + what + " at byte " + std::to_string(at));
  }

  std::uint8_t u8(const char* what) {
    if (pos >= data.size()) fail(std::string("truncated ") + what, pos);
    return static_cast<std::uint8_t>(data[pos++]);
  }

  std::uint64_t u64(const char* what) {
    if (pos + 8 > data.size()) fail(std::string("truncated ") + what, pos);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
  }

  double f64() {
    return std::bit_cast<double>(u64("payload"));
  }

  float f32() {
    if (pos + 4 > data.size()) fail("truncated payload", pos);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data[pos + i])) << (8 * i);
    }
    pos += 4;
    return std::bit_cast<float>(v);
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("short write to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string entry_file(const char* kind, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu.ctns", kind, index);
  return buf;
}

}  // namespace

void write_tensor(const std::string& path, const Tensor& t, TensorDType dtype) {
  if (t.empty()) throw ShapeError("refusing to write an empty tensor");
  if (t.ndim() > kMaxRank) {
    throw ShapeError("tensor rank " + std::to_string(t.ndim()) + " exceeds the format limit");
  }
  std::string buf;
  buf.reserve(16 + t.size() * (dtype == TensorDType::kComplexF64 ? 16 : 8));
  buf.append(kMagic, 4);
  buf.push_back(static_cast<char>(kVersion));
  buf.push_back(static_cast<char>(dtype));
  buf.push_back(static_cast<char>(t.ndim()));
  for (std::size_t d = 0; d < t.ndim(); ++d) put_u64(buf, t.dim(d));
  if (dtype == TensorDType::kComplexF64) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      put_f64(buf, t[i].real());
      put_f64(buf, t[i].imag());
    }
  } else {
    for (std::size_t i = 0; i < t.size(); ++i) {
      put_f32(buf, static_cast<float>(t[i].real()));
      put_f32(buf, static_cast<float>(t[i].imag()));
    }
  }
  write_file(path, buf);
}

Tensor read_tensor(const std::string& path) {
  Reader r{read_file(path), 0, path};
  if (r.data.size() < 4 || std::memcmp(r.data.data(), kMagic, 4) != 0) {
    r.fail("bad magic", 0);
  }
  r.pos = 4;
  const std::uint8_t version = r.u8("version");
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version), 4);
  const std::uint8_t dtype = r.u8("dtype");
  if (dtype > 1) r.fail("unknown dtype " + std::to_string(dtype), 5);
  const std::uint8_t ndim = r.u8("rank");
  if (ndim == 0 || ndim > kMaxRank) r.fail("invalid rank " + std::to_string(ndim), 6);
  std::vector<std::size_t> dims;
  for (std::uint8_t d = 0; d < ndim; ++d) {
    const std::size_t at = r.pos;
    const std::uint64_t extent = r.u64("extent");
    if (extent == 0 || extent > (std::uint64_t(1) << 32)) r.fail("invalid extent", at);
    dims.push_back(static_cast<std::size_t>(extent));
  }
  Tensor t(dims);
  const std::size_t scalar = dtype == 0 ? 8 : 4;
  const std::size_t want = r.pos + t.size() * 2 * scalar;
  if (r.data.size() != want) {
    r.fail("payload size " + std::to_string(r.data.size() - r.pos) + ", expected " +
               std::to_string(t.size() * 2 * scalar),
           r.pos);
  }
  if (dtype == 0) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double re = r.f64();
      const double im = r.f64();
      t[i] = cplx(re, im);
    }
  } else {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double re = r.f32();
      const double im = r.f32();
      t[i] = cplx(re, im);
    }
  }
  return t;
}

void save_sample(const std::string& dir, const CineSample& sample) {
  make_dir(dir);
  write_tensor(dir + "/reference.ctns", sample.reference);
  write_tensor(dir + "/full_kspace.ctns", sample.full_kspace);
  write_tensor(dir + "/under_kspace.ctns", sample.under_kspace);
  write_tensor(dir + "/mask.ctns", sample.mask);
  write_tensor(dir + "/maps.ctns", sample.maps);
  const json meta = {{"acceleration", sample.acceleration}};
  write_file(dir + "/sample.json", meta.dump(2) + "\n");
}

CineSample load_sample(const std::string& dir) {
  CineSample s;
  s.reference = read_tensor(dir + "/reference.ctns");
  s.full_kspace = read_tensor(dir + "/full_kspace.ctns");
  s.under_kspace = read_tensor(dir + "/under_kspace.ctns");
  s.mask = read_tensor(dir + "/mask.ctns");
  s.maps = read_tensor(dir + "/maps.ctns");
  try {
    const json meta = json::parse(read_file(dir + "/sample.json"));
    s.acceleration = meta.value("acceleration", 1.0);
  } catch (const json::exception& e) {
    throw FormatError(dir + "/sample.json is not valid JSON: " + std::string(e.what()));
  }
  return s;
}

void check_compatible(const NetworkConfig& a, const NetworkConfig& b) {
  struct Field {
    const char* name;
    std::size_t lhs, rhs;
  };
  const Field fields[] = {
      {"t", a.T, b.T},
      {"x", a.X, b.X},
      {"y", a.Y, b.Y},
      {"c", a.C, b.C},
      {"iterations", a.iterations, b.iterations},
      {"filters", a.filters, b.filters},
      {"knet_filters", a.knet_filters, b.knet_filters},
      {"patches.nt", a.patches.nt, b.patches.nt},
      {"patches.nx", a.patches.nx, b.patches.nx},
      {"patches.ny", a.patches.ny, b.patches.ny},
      {"spatial_kernel", a.spatial_kernel, b.spatial_kernel},
      {"temporal_kernel", a.temporal_kernel, b.temporal_kernel},
      {"kspace_kernel", a.kspace_kernel, b.kspace_kernel},
      {"attention_ratio", a.attention_ratio, b.attention_ratio},
      {"knet_residual", a.knet_residual, b.knet_residual},
      {"image_net", a.image_net, b.image_net},
      {"lowrank", a.lowrank, b.lowrank},
      {"kspace_branch", a.kspace_branch, b.kspace_branch},
      {"attention", a.attention, b.attention},
      {"isl", a.isl, b.isl},
  };
  for (const Field& f : fields) {
    if (f.lhs != f.rhs) {
      throw ConfigError("checkpoint/config mismatch in " + std::string(f.name) +
                        " (" + std::to_string(f.lhs) + " vs " +
                        std::to_string(f.rhs) + ")");
    }
  }
}

void save_checkpoint(const std::string& dir, const Checkpoint& ck) {
  make_dir(dir);
  json manifest;
  manifest["format"] = "tensor-checkpoint";
  manifest["version"] = 1;
  manifest["step"] = ck.step;
  manifest["config"] = network_config_to_json(ck.cfg);
  if (!ck.run_config.is_null()) manifest["run_config"] = ck.run_config;
  manifest["optimizer"] = {{"step", ck.opt.step},
                           {"lr", ck.opt.cfg.lr},
                           {"beta1", ck.opt.cfg.beta1},
                           {"beta2", ck.opt.cfg.beta2},
                           {"eps", ck.opt.cfg.eps}};

  json entries = json::array();
  std::size_t index = 0;
  for_each_param(ck.params, ck.cfg,
                 [&](const std::string& name, const Tensor& t, bool) {
                   const std::string file = entry_file("p", index);
                   write_tensor(dir + "/" + file, t);
                   json e = {{"name", name}, {"file", file}, {"dims", t.dims()}};
                   if (index < ck.opt.m.size()) {
                     const std::string mf = entry_file("m", index);
                     const std::string vf = entry_file("v", index);
                     write_tensor(dir + "/" + mf, ck.opt.m[index]);
                     write_tensor(dir + "/" + vf, ck.opt.v[index]);
                     e["m_file"] = mf;
                     e["v_file"] = vf;
                   }
                   entries.push_back(std::move(e));
                   ++index;
                 });
  manifest["params"] = std::move(entries);
  write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir + "/manifest.json"));
  } catch (const json::exception& e) {
    throw FormatError(dir + "/manifest.json is not valid JSON: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "tensor-checkpoint") {
    throw FormatError(dir + "/manifest.json: not a checkpoint manifest");
  }

  Checkpoint ck;
  ck.cfg = network_config_from_json(manifest.at("config"));
  ck.step = manifest.value("step", std::size_t{0});
  ck.run_config = manifest.value("run_config", json());

  Rng rng(0);
  ck.params = init_params(ck.cfg, rng);
  AdamConfig acfg;
  const json& opt = manifest.at("optimizer");
  acfg.lr = opt.value("lr", acfg.lr);
  acfg.beta1 = opt.value("beta1", acfg.beta1);
  acfg.beta2 = opt.value("beta2", acfg.beta2);
  acfg.eps = opt.value("eps", acfg.eps);
  ck.opt = init_optimizer(ck.params, ck.cfg, acfg);
  ck.opt.step = opt.value("step", std::size_t{0});

  const json& entries = manifest.at("params");
  std::size_t index = 0;
  for_each_param(ck.params, ck.cfg, [&](const std::string& name, Tensor& t, bool) {
    if (index >= entries.size()) {
      throw ConfigError("checkpoint is missing parameter " + name);
    }
    const json& e = entries.at(index);
    if (e.value("name", "") != name) {
      throw ConfigError("checkpoint parameter order mismatch: expected " + name +
                        ", found " + e.value("name", "<none>"));
    }
    Tensor loaded = read_tensor(dir + "/" + e.value("file", ""));
    if (loaded.dims() != t.dims()) {
      throw ConfigError("checkpoint parameter " + name + " has dims " +
                        dims_to_string(loaded.dims()) + ", config wants " +
                        dims_to_string(t.dims()));
    }
    t = std::move(loaded);
    if (e.contains("m_file")) {
      ck.opt.m[index] = read_tensor(dir + "/" + e.value("m_file", ""));
      ck.opt.v[index] = read_tensor(dir + "/" + e.value("v_file", ""));
      require_same_dims("checkpoint moments", ck.opt.m[index], t);
      require_same_dims("checkpoint moments", ck.opt.v[index], t);
    }
    ++index;
  });
  if (index != entries.size()) {
    throw ConfigError("checkpoint has " + std::to_string(entries.size()) +
                      " parameters, config wants " + std::to_string(index));
  }
  return ck;
}

}  // namespace aliknet
