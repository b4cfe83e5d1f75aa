// apir: scan-specific parallel MRI reconstruction toolkit (simulate, subsample,
// reconstruct, evaluate, noisemap, emit-image). Every run that writes an output
// directory drops a manifest.json there; `apir --manifest <path>` replays it.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "apir/apirnet.hpp"
#include "apir/dft.hpp"
#include "apir/errors.hpp"
#include "apir/grappa.hpp"
#include "apir/grid.hpp"
#include "apir/io.hpp"
#include "apir/masks.hpp"
#include "apir/noise_eval.hpp"
#include "apir/phantom.hpp"
#include "apir/signal.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace apir;

// ---------- small parsers ----------

std::pair<int, int> parse_int_pair(const std::string& s, const char* what) {
  auto x = s.find('x');
  try {
    if (x == std::string::npos) {
      int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw ValueError(std::string(what) + ": expected N or N1xN2, got '" + s + "'");
  }
}

std::pair<double, double> parse_window(const std::string& s) {
  auto c = s.find(':');
  if (c == std::string::npos)
    throw ValueError("window: expected min:max, got '" + s + "'");
  try {
    return {std::stod(s.substr(0, c)), std::stod(s.substr(c + 1))};
  } catch (const std::exception&) {
    throw ValueError("window: expected min:max, got '" + s + "'");
  }
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::size_t pos = 0;
  try {
    while (pos < s.size()) {
      auto c = s.find(',', pos);
      if (c == std::string::npos) c = s.size();
      out.push_back(std::stoi(s.substr(pos, c - pos)));
      pos = c + 1;
    }
  } catch (const std::exception&) {
    throw ValueError(std::string(what) + ": expected comma-separated integers, got '" +
                     s + "'");
  }
  if (out.empty()) throw ValueError(std::string(what) + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  try {
    while (pos < s.size()) {
      auto c = s.find(',', pos);
      if (c == std::string::npos) c = s.size();
      out.push_back(std::stod(s.substr(pos, c - pos)));
      pos = c + 1;
    }
  } catch (const std::exception&) {
    throw ValueError(std::string(what) + ": expected comma-separated numbers, got '" +
                     s + "'");
  }
  return out;
}

// Schedule: either a JSON file {"levels":[{"k1","k2","lr","epochs"}...]} with
// k = 0 meaning the full extent, or inline "REGION:lr:epochs,..." where REGION
// is K, K1xK2, or "full".
LevelSchedule parse_schedule(const std::string& s, int n1, int n2) {
  LevelSchedule sched;
  if (fs::exists(s) && fs::is_regular_file(s)) {
    std::ifstream f(s);
    if (!f) throw IoError("cannot open schedule file: " + s);
    json j;
    try {
      f >> j;
    } catch (const json::exception& e) {
      throw IoError("invalid JSON in schedule file " + s + ": " + e.what());
    }
    for (const auto& L : j.at("levels")) {
      LevelSpec lv;
      lv.k1 = L.at("k1").get<int>();
      lv.k2 = L.at("k2").get<int>();
      if (lv.k1 == 0) lv.k1 = n1;
      if (lv.k2 == 0) lv.k2 = n2;
      lv.lr = L.at("lr").get<double>();
      lv.epochs = L.at("epochs").get<int>();
      sched.levels.push_back(lv);
    }
    return sched;
  }

  std::size_t pos = 0;
  while (pos < s.size()) {
    auto c = s.find(',', pos);
    if (c == std::string::npos) c = s.size();
    const std::string tok = s.substr(pos, c - pos);
    pos = c + 1;

    auto p1 = tok.find(':');
    auto p2 = tok.find(':', p1 == std::string::npos ? p1 : p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos)
      throw ValueError("schedule: expected REGION:lr:epochs, got '" + tok + "'");
    const std::string region = tok.substr(0, p1);
    LevelSpec lv;
    if (region == "full") {
      lv.k1 = n1;
      lv.k2 = n2;
    } else {
      auto [k1, k2] = parse_int_pair(region, "schedule region");
      lv.k1 = k1;
      lv.k2 = k2;
    }
    try {
      lv.lr = std::stod(tok.substr(p1 + 1, p2 - p1 - 1));
      lv.epochs = std::stoi(tok.substr(p2 + 1));
    } catch (const std::exception&) {
      throw ValueError("schedule: expected REGION:lr:epochs, got '" + tok + "'");
    }
    sched.levels.push_back(lv);
  }
  if (sched.levels.empty()) throw ValueError("schedule: empty");
  return sched;
}

Method parse_method(const std::string& s) {
  if (s == "zero") return Method::zero_filled;
  if (s == "grappa") return Method::grappa;
  if (s == "apirnet") return Method::apirnet;
  throw ValueError("method must be zero, grappa, or apirnet; got '" + s + "'");
}

int env_threads() {
  const char* e = std::getenv("APIR_THREADS");
  if (!e) return 1;
  try {
    int v = std::stoi(e);
    return v >= 1 ? v : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

// ---------- manifest ----------

std::string iso_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json_to(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
  if (!f) throw IoError("write failed: " + path);
}

json read_json_from(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw IoError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

class ManifestWriter {
 public:
  ManifestWriter(std::string out_dir, std::string sub, std::vector<std::string> argv)
      : out_dir_(std::move(out_dir)),
        sub_(std::move(sub)),
        argv_(std::move(argv)),
        started_(iso_now()),
        t0_(std::chrono::steady_clock::now()) {
    fs::create_directories(out_dir_);
  }

  void finish() const {
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0_)
                          .count();
    json j{{"tool", "apir"},
           {"subcommand", sub_},
           {"argv", argv_},
           {"started_at", started_},
           {"wall_ms", ms}};
    write_json_to((fs::path(out_dir_) / "manifest.json").string(), j);
  }

 private:
  std::string out_dir_;
  std::string sub_;
  std::vector<std::string> argv_;
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
};

std::string stem_in(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

// ---------- subcommand options ----------

struct SimulateOpts {
  std::string out, spec, kind = "disk";
  int n1 = 64, n2 = 64, coils = 8, bar_period = 8;
  double radius = 24.0, intensity = 1.0;
  std::vector<std::string> features;
  std::uint64_t coil_seed = 1;
  bool uniform_coils = false, emit_coils = false;
};

struct SubsampleOpts {
  std::string in, out, accel = "2x2", acs = "24x24", offsets = "0x0",
              sigma_mode = "relative";
  double sigma = 0.0;
  std::uint64_t noise_seed = 1;
};

struct ReconstructOpts {
  std::string in, masks, out, method;
  // grappa
  double lambda = 1e-4;
  std::string kernel = "5x5";
  int kernel_fe = 1;
  bool save_kernel = false;
  // apirnet
  std::string widths = "64,48,32,24";
  bool residual = false;
  std::uint64_t seed = 1;
  std::string schedule = "16:0.001:2000,32:0.0001:1000,full:0.00005:500";
  bool reset_optimizer = false, hard_dc = false, save_checkpoints = false;
  std::string from_checkpoint;
};

struct EvaluateOpts {
  std::string in, reference, region, out;
};

struct NoisemapOpts {
  std::string in, masks, out, method, support, sigma_mode = "relative";
  double lambda = 1e-4;
  std::string kernel = "5x5";
  int kernel_fe = 1;
  std::string widths = "64,48,32,24";
  bool residual = false;
  std::string schedule = "16:0.001:2000,32:0.0001:1000,full:0.00005:500";
  bool reset_optimizer = false;
  int replicas = 50;
  double sigma = 0.05;
  std::uint64_t base_seed = 1, seed_stride = 1;
  int threads = env_threads();
};

struct EmitImageOpts {
  std::string in, out, name = "image.pgm", window;
};

// ---------- runners ----------

PhantomSpec phantom_from_json(const json& j) {
  PhantomSpec spec;
  spec.n1 = j.value("n1", spec.n1);
  spec.n2 = j.value("n2", spec.n2);
  const std::string kind = j.value("kind", "disk");
  if (kind == "disk")
    spec.kind = PhantomSpec::Kind::disk;
  else if (kind == "bars")
    spec.kind = PhantomSpec::Kind::bars;
  else
    throw ValueError("phantom kind must be disk or bars, got '" + kind + "'");
  spec.radius = j.value("radius", spec.radius);
  spec.intensity = j.value("intensity", spec.intensity);
  spec.bar_period = j.value("bar_period", spec.bar_period);
  if (j.contains("features"))
    for (const auto& f : j.at("features"))
      spec.features.push_back({f.at("dc1").get<double>(), f.at("dc2").get<double>(),
                               f.at("radius").get<double>(),
                               f.at("intensity").get<double>()});
  return spec;
}

void run_simulate(const SimulateOpts& o, const std::vector<std::string>& argv) {
  ManifestWriter manifest(o.out, "simulate", argv);

  PhantomSpec spec;
  if (!o.spec.empty()) {
    spec = phantom_from_json(read_json_from(o.spec));
  } else {
    spec.n1 = o.n1;
    spec.n2 = o.n2;
    if (o.kind == "disk")
      spec.kind = PhantomSpec::Kind::disk;
    else if (o.kind == "bars")
      spec.kind = PhantomSpec::Kind::bars;
    else
      throw ValueError("phantom kind must be disk or bars, got '" + o.kind + "'");
    spec.radius = o.radius;
    spec.intensity = o.intensity;
    spec.bar_period = o.bar_period;
    for (const auto& f : o.features) {
      auto v = parse_double_list(f, "feature");
      if (v.size() != 4)
        throw ValueError("feature: expected dc1,dc2,radius,intensity");
      spec.features.push_back({v[0], v[1], v[2], v[3]});
    }
  }

  const RealGrid phantom = make_phantom(spec);
  const MaskGrid support = phantom_support(spec);
  const CoilProfile coils =
      make_coils(spec.n1, spec.n2, o.coils, o.coil_seed, o.uniform_coils);
  const ComplexGrid kspace = simulate_kspace(phantom, coils);

  save_grid(stem_in(o.out, "kspace"), kspace);
  save_real(stem_in(o.out, "phantom"), phantom);
  save_mask(stem_in(o.out, "support"), support);
  if (o.emit_coils) save_grid(stem_in(o.out, "coils"), coils.sens);
  manifest.finish();
}

void run_subsample(const SubsampleOpts& o, const std::vector<std::string>& argv) {
  ManifestWriter manifest(o.out, "subsample", argv);

  ComplexGrid g = load_grid(o.in);
  if (g.domain != Domain::kspace)
    throw ValueError("subsample expects a k-space grid");
  const auto accel = parse_int_pair(o.accel, "accel");
  const auto acs = parse_int_pair(o.acs, "acs");
  const auto offsets = parse_int_pair(o.offsets, "offsets");
  const SamplingMasks masks = make_masks(g.n1, g.n2, accel, acs, offsets);

  if (o.sigma < 0.0) throw ValueError("sigma must be nonnegative");
  if (o.sigma > 0.0) {
    double s = o.sigma;
    if (o.sigma_mode == "relative")
      s *= normalize(g, masks.m_sampled).second.scale;
    else if (o.sigma_mode != "absolute")
      throw ValueError("sigma-mode must be relative or absolute");
    g = add_noise(g, masks.m_sampled, s, o.noise_seed);
  }

  save_grid(stem_in(o.out, "kspace_sub"), apply_mask(g, masks.m_sampled));
  save_masks(stem_in(o.out, "masks"), masks);
  manifest.finish();
}

void run_reconstruct(const ReconstructOpts& o, const std::vector<std::string>& argv) {
  ManifestWriter manifest(o.out, "reconstruct", argv);

  const ComplexGrid g = load_grid(o.in);
  if (g.domain != Domain::kspace)
    throw ValueError("reconstruct expects a k-space grid");
  const SamplingMasks masks = load_masks(o.masks);
  const Method method = parse_method(o.method);

  ComplexGrid kout;
  RealGrid image;

  if (method == Method::zero_filled) {
    kout = apply_mask(g, masks.m_sampled);
    image = reconstruct_image(kout);
  } else if (method == Method::grappa) {
    GrappaGeometry geom;
    auto [kp1, kp2] = parse_int_pair(o.kernel, "kernel");
    geom.k_pe1 = kp1;
    geom.k_pe2 = kp2;
    geom.k_fe = o.kernel_fe;
    GrappaResult res = grappa_reconstruct(g, masks, geom, o.lambda);
    kout = std::move(res.kspace);
    image = std::move(res.image);
    if (o.save_kernel) save_kernel(stem_in(o.out, "kernel"), res.kernel);
  } else if (!o.from_checkpoint.empty()) {
    const Checkpoint c = load_checkpoint(o.from_checkpoint);
    auto [norm_g, rec] = normalize(g, masks.m_sampled);
    kout = denormalize(forward_complete(c.net, norm_g, masks), rec);
    if (o.hard_dc)
      for (int ch = 0; ch < g.channels; ++ch)
        for (int f = 0; f < g.nf; ++f)
          for (int i = 0; i < g.n1; ++i)
            for (int j = 0; j < g.n2; ++j)
              if (masks.m_sampled.on(i, j)) kout.at(ch, f, i, j) = g.at(ch, f, i, j);
    image = reconstruct_image(kout);
  } else {
    ArchitectureSpec arch;
    arch.n_coils = g.channels;
    arch.widths = parse_int_list(o.widths, "widths");
    arch.residual = o.residual;
    const LevelSchedule sched = parse_schedule(o.schedule, g.n1, g.n2);

    auto [k, img, run] = apirnet_reconstruct(g, masks, arch, sched, o.seed,
                                             o.reset_optimizer, o.hard_dc);
    kout = std::move(k);
    image = std::move(img);

    json levels = json::array();
    for (const auto& lv : sched.levels)
      levels.push_back(json{
          {"k1", lv.k1}, {"k2", lv.k2}, {"lr", lv.lr}, {"epochs", lv.epochs}});
    write_json_to(stem_in(o.out, "train_run.json"),
                  json{{"seed", run.seed},
                       {"norm_scale", run.norm.scale},
                       {"wall_seconds", run.wall_seconds},
                       {"levels", levels},
                       {"loss_trace", run.loss_trace}});
    save_checkpoint(stem_in(o.out, "checkpoint"),
                    Checkpoint{arch, run.params, run.norm.scale, std::nullopt});
    if (o.save_checkpoints)
      for (std::size_t i = 0; i < run.level_checkpoints.size(); ++i)
        save_checkpoint(
            stem_in(o.out, ("level_" + std::to_string(i + 1)).c_str()),
            Checkpoint{arch, run.level_checkpoints[i], run.norm.scale, std::nullopt});
  }

  save_grid(stem_in(o.out, "kspace_recon"), kout);
  save_real(stem_in(o.out, "image"), image);
  manifest.finish();
}

void run_evaluate(const EvaluateOpts& o, const std::vector<std::string>& argv) {
  const RealGrid recon = load_real(o.in);
  const RealGrid reference = load_real(o.reference);

  json j{{"mse", mse(recon, reference)}};
  j["rmse"] = std::sqrt(j["mse"].get<double>());
  double max_abs = 0.0;
  for (std::size_t i = 0; i < recon.data.size(); ++i)
    max_abs = std::max(max_abs, std::abs(recon.data[i] - reference.data[i]));
  j["max_abs_err"] = max_abs;
  if (!o.region.empty()) {
    const MaskGrid region = load_mask(o.region);
    j["mse_region"] = mse(recon, reference, region);
    j["region_pixels"] = region.popcount();
  }

  std::cout << j.dump(2) << "\n";
  if (!o.out.empty()) {
    ManifestWriter manifest(o.out, "evaluate", argv);
    write_json_to(stem_in(o.out, "metrics.json"), j);
    manifest.finish();
  }
}

void run_noisemap(const NoisemapOpts& o, const std::vector<std::string>& argv) {
  ManifestWriter manifest(o.out, "noisemap", argv);

  const ComplexGrid g = load_grid(o.in);
  if (g.domain != Domain::kspace)
    throw ValueError("noisemap expects a k-space grid");
  const SamplingMasks masks = load_masks(o.masks);

  ReplicaConfig cfg;
  cfg.n_replicas = o.replicas;
  cfg.base_seed = o.base_seed;
  cfg.seed_stride = o.seed_stride;
  cfg.threads = o.threads;
  cfg.method.method = parse_method(o.method);
  if (cfg.method.method == Method::grappa) {
    auto [kp1, kp2] = parse_int_pair(o.kernel, "kernel");
    cfg.method.geom.k_pe1 = kp1;
    cfg.method.geom.k_pe2 = kp2;
    cfg.method.geom.k_fe = o.kernel_fe;
    cfg.method.lambda = o.lambda;
  } else if (cfg.method.method == Method::apirnet) {
    cfg.method.arch.n_coils = g.channels;
    cfg.method.arch.widths = parse_int_list(o.widths, "widths");
    cfg.method.arch.residual = o.residual;
    cfg.method.schedule = parse_schedule(o.schedule, g.n1, g.n2);
    cfg.method.reset_optimizer = o.reset_optimizer;
  }

  if (!(o.sigma > 0.0)) throw ValueError("sigma must be positive");
  cfg.sigma = o.sigma;
  if (o.sigma_mode == "relative")
    cfg.sigma *= normalize(g, masks.m_sampled).second.scale;
  else if (o.sigma_mode != "absolute")
    throw ValueError("sigma-mode must be relative or absolute");

  const NoiseMap nm = run_replicas(g, masks, cfg);

  save_real(stem_in(o.out, "std_map"), nm.std_map);
  save_real(stem_in(o.out, "amplification"), nm.amplification);
  save_real(stem_in(o.out, "replica_mean"), nm.mean_image);
  save_real(stem_in(o.out, "reference_std"), nm.reference_std);
  if (nm.amplification.nf == 1) {
    double amax = 0.0;
    for (double v : nm.amplification.data) amax = std::max(amax, v);
    write_pgm16(stem_in(o.out, "amplification.pgm"), nm.amplification, 0.0,
                amax > 0.0 ? amax : 1.0);
  }

  MaskGrid region;
  bool has_region = !o.support.empty();
  if (has_region) {
    region = load_mask(o.support);
    if (!region.same_shape(masks.m_sampled))
      throw DimensionError("support extents do not match the grid");
  }
  double sum = 0.0, amax = 0.0;
  long cnt = 0;
  for (int f = 0; f < nm.amplification.nf; ++f)
    for (int i = 0; i < nm.amplification.n1; ++i)
      for (int j = 0; j < nm.amplification.n2; ++j) {
        if (has_region && !region.on(i, j)) continue;
        const double a = nm.amplification.at(f, i, j);
        sum += a;
        amax = std::max(amax, a);
        ++cnt;
      }

  write_json_to(stem_in(o.out, "noisemap.json"),
                json{{"method", cfg.method.name()},
                     {"n_replicas", cfg.n_replicas},
                     {"sigma_given", o.sigma},
                     {"sigma_mode", o.sigma_mode},
                     {"sigma_absolute", cfg.sigma},
                     {"base_seed", cfg.base_seed},
                     {"seed_stride", cfg.seed_stride},
                     {"region", has_region ? "support" : "all"},
                     {"region_pixels", cnt},
                     {"mean_amplification", cnt > 0 ? sum / double(cnt) : 0.0},
                     {"max_amplification", amax}});
  manifest.finish();
}

void run_emit_image(const EmitImageOpts& o, const std::vector<std::string>& argv) {
  ManifestWriter manifest(o.out, "emit-image", argv);

  const RealGrid g = load_real(o.in);
  double wmin, wmax;
  if (o.window.empty()) {
    wmin = g.data.empty() ? 0.0 : g.data[0];
    wmax = wmin;
    for (double v : g.data) {
      wmin = std::min(wmin, v);
      wmax = std::max(wmax, v);
    }
  } else {
    std::tie(wmin, wmax) = parse_window(o.window);
  }
  write_pgm16(stem_in(o.out, o.name.c_str()), g, wmin, wmax);
  manifest.finish();
}

// ---------- dispatch ----------

int dispatch(const std::vector<std::string>& args, bool allow_manifest) {
  CLI::App app{"scan-specific parallel MRI reconstruction toolkit"};
  app.require_subcommand(0, 1);

  std::string manifest_path;
  app.add_option("--manifest", manifest_path,
                 "replay a previous run from its manifest.json");

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "synthesize a multi-coil phantom");
  c_sim->add_option("--out", sim.out, "output directory")->required();
  auto* o_spec = c_sim->add_option("--spec", sim.spec, "phantom description JSON");
  auto* o_n1 = c_sim->add_option("--n1", sim.n1, "grid rows (PE1)")->capture_default_str();
  auto* o_n2 = c_sim->add_option("--n2", sim.n2, "grid cols (PE2)")->capture_default_str();
  auto* o_kind = c_sim->add_option("--kind", sim.kind, "phantom kind: disk|bars")
                     ->capture_default_str();
  auto* o_rad = c_sim->add_option("--radius", sim.radius, "main disk radius (pixels)")
                    ->capture_default_str();
  auto* o_int = c_sim->add_option("--intensity", sim.intensity, "main intensity")
                    ->capture_default_str();
  auto* o_bar = c_sim->add_option("--bar-period", sim.bar_period,
                                  "stripe width for bars kind")
                    ->capture_default_str();
  auto* o_feat = c_sim->add_option("--feature", sim.features,
                                   "extra disk dc1,dc2,radius,intensity (repeatable)");
  o_spec->excludes(o_n1)->excludes(o_n2)->excludes(o_kind)->excludes(o_rad)
      ->excludes(o_int)->excludes(o_bar)->excludes(o_feat);
  c_sim->add_option("--coils", sim.coils, "number of receive coils")
      ->capture_default_str();
  c_sim->add_option("--coil-seed", sim.coil_seed, "coil profile seed")
      ->capture_default_str();
  c_sim->add_flag("--uniform-coils", sim.uniform_coils, "all-ones sensitivities");
  c_sim->add_flag("--emit-coils", sim.emit_coils, "also write the coil profile grid");

  SubsampleOpts sub;
  auto* c_sub = app.add_subcommand("subsample", "mask k-space, optionally add noise");
  c_sub->add_option("--in", sub.in, "input k-space grid stem")->required();
  c_sub->add_option("--out", sub.out, "output directory")->required();
  c_sub->add_option("--accel", sub.accel, "acceleration R1xR2")->capture_default_str();
  c_sub->add_option("--acs", sub.acs, "ACS block a1xa2")->capture_default_str();
  c_sub->add_option("--offsets", sub.offsets, "pattern lattice offsets o1xo2")
      ->capture_default_str();
  c_sub->add_option("--sigma", sub.sigma, "noise std at sampled positions")
      ->capture_default_str();
  c_sub->add_option("--sigma-mode", sub.sigma_mode,
                    "relative (to max sampled magnitude) or absolute")
      ->capture_default_str();
  c_sub->add_option("--noise-seed", sub.noise_seed, "noise seed")->capture_default_str();

  ReconstructOpts rec;
  auto* c_rec = app.add_subcommand("reconstruct", "reconstruct subsampled k-space");
  c_rec->add_option("--in", rec.in, "input k-space grid stem")->required();
  c_rec->add_option("--masks", rec.masks, "sampling masks stem")->required();
  c_rec->add_option("--out", rec.out, "output directory")->required();
  c_rec->add_option("--method", rec.method, "zero | grappa | apirnet")->required();
  c_rec->add_option("--lambda", rec.lambda, "grappa: Tikhonov weight")
      ->capture_default_str();
  c_rec->add_option("--kernel", rec.kernel, "grappa: PE taps k1xk2")
      ->capture_default_str();
  c_rec->add_option("--kernel-fe", rec.kernel_fe, "grappa: FE taps")
      ->capture_default_str();
  c_rec->add_flag("--save-kernel", rec.save_kernel, "grappa: write kernel files");
  auto* o_w = c_rec->add_option("--widths", rec.widths, "apirnet: layer widths")
                  ->capture_default_str();
  auto* o_res = c_rec->add_flag("--residual", rec.residual,
                                "apirnet: input->output skip connection");
  auto* o_seed = c_rec->add_option("--seed", rec.seed, "apirnet: init seed")
                     ->capture_default_str();
  auto* o_sched = c_rec->add_option(
      "--schedule", rec.schedule,
      "apirnet: REGION:lr:epochs,... (REGION = K, K1xK2, or full) or a JSON file");
  auto* o_reset = c_rec->add_flag("--reset-optimizer", rec.reset_optimizer,
                                  "apirnet: fresh Adam state per level");
  c_rec->add_flag("--hard-dc", rec.hard_dc,
                  "apirnet: restore measured values after completion");
  auto* o_sc = c_rec->add_flag("--save-checkpoints", rec.save_checkpoints,
                               "apirnet: write per-level checkpoints");
  auto* o_fc = c_rec->add_option("--from-checkpoint", rec.from_checkpoint,
                                 "apirnet: skip training, run a saved network");
  o_fc->excludes(o_w)->excludes(o_res)->excludes(o_seed)->excludes(o_sched)
      ->excludes(o_reset)->excludes(o_sc);

  EvaluateOpts ev;
  auto* c_ev = app.add_subcommand("evaluate", "image error metrics vs a reference");
  c_ev->add_option("--in", ev.in, "reconstructed image stem")->required();
  c_ev->add_option("--reference", ev.reference, "reference image stem")->required();
  c_ev->add_option("--region", ev.region, "mask stem restricting a second MSE");
  c_ev->add_option("--out", ev.out, "optional output directory for metrics.json");

  NoisemapOpts nmo;
  auto* c_nm = app.add_subcommand("noisemap",
                                  "pseudo-replica noise amplification maps");
  c_nm->add_option("--in", nmo.in, "clean fully sampled k-space stem")->required();
  c_nm->add_option("--masks", nmo.masks, "sampling masks stem")->required();
  c_nm->add_option("--out", nmo.out, "output directory")->required();
  c_nm->add_option("--method", nmo.method, "zero | grappa | apirnet")->required();
  c_nm->add_option("--lambda", nmo.lambda, "grappa: Tikhonov weight")
      ->capture_default_str();
  c_nm->add_option("--kernel", nmo.kernel, "grappa: PE taps k1xk2")
      ->capture_default_str();
  c_nm->add_option("--kernel-fe", nmo.kernel_fe, "grappa: FE taps")
      ->capture_default_str();
  c_nm->add_option("--widths", nmo.widths, "apirnet: layer widths")
      ->capture_default_str();
  c_nm->add_flag("--residual", nmo.residual, "apirnet: input->output skip");
  c_nm->add_option("--schedule", nmo.schedule, "apirnet: training schedule");
  c_nm->add_flag("--reset-optimizer", nmo.reset_optimizer,
                 "apirnet: fresh Adam state per level");
  c_nm->add_option("--replicas", nmo.replicas, "number of noise replicas")
      ->capture_default_str();
  c_nm->add_option("--sigma", nmo.sigma, "replica noise std")->capture_default_str();
  c_nm->add_option("--sigma-mode", nmo.sigma_mode,
                   "relative (to max sampled magnitude) or absolute")
      ->capture_default_str();
  c_nm->add_option("--base-seed", nmo.base_seed, "replica seed base")
      ->capture_default_str();
  c_nm->add_option("--seed-stride", nmo.seed_stride, "replica seed stride")
      ->capture_default_str();
  c_nm->add_option("--support", nmo.support,
                   "mask stem for the summary statistics region");
  c_nm->add_option("--threads", nmo.threads,
                   "worker threads for replicas (default: APIR_THREADS or 1)");

  EmitImageOpts em;
  auto* c_em = app.add_subcommand("emit-image", "render a real grid to 16-bit PGM");
  c_em->add_option("--in", em.in, "real grid stem")->required();
  c_em->add_option("--out", em.out, "output directory")->required();
  c_em->add_option("--name", em.name, "output file name")->capture_default_str();
  c_em->add_option("--window", em.window,
                   "display window min:max (default: data range)");

  std::vector<const char*> cargv;
  cargv.push_back("apir");
  for (const auto& s : args) cargv.push_back(s.c_str());
  try {
    app.parse(int(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (!manifest_path.empty()) {
    if (!allow_manifest) throw ValueError("a manifest cannot replay another manifest");
    if (!app.get_subcommands().empty())
      throw ValueError("--manifest cannot be combined with a subcommand");
    const json j = read_json_from(manifest_path);
    std::vector<std::string> stored;
    for (const auto& a : j.at("argv")) stored.push_back(a.get<std::string>());
    return dispatch(stored, false);
  }

  if (c_sim->parsed()) {
    run_simulate(sim, args);
  } else if (c_sub->parsed()) {
    run_subsample(sub, args);
  } else if (c_rec->parsed()) {
    run_reconstruct(rec, args);
  } else if (c_ev->parsed()) {
    run_evaluate(ev, args);
  } else if (c_nm->parsed()) {
    run_noisemap(nmo, args);
  } else if (c_em->parsed()) {
    run_emit_image(em, args);
  } else {
    std::cout << app.help();
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return dispatch(args, true);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const DimensionError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const ValueError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "compute error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
