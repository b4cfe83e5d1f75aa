#include "apir/noise_eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "apir/io.hpp"
#include "apir/phantom.hpp"

namespace apir {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const char* kind_name(Method m) {
  switch (m) {
    case Method::zero_filled: return "zero_filled";
    case Method::grappa: return "grappa";
    case Method::apirnet: return "apirnet";
  }
  return "unknown";
}

}  // namespace

std::string MethodSpec::name() const { return kind_name(method); }

void WelfordGrid::add(const RealGrid& x) {
  if (n_ == 0) {
    mean_ = RealGrid(x.nf, x.n1, x.n2);
    m2_ = RealGrid(x.nf, x.n1, x.n2);
  } else if (!mean_.same_shape(x)) {
    throw DimensionError("accumulator shape mismatch");
  }
  ++n_;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double delta = x.data[i] - mean_.data[i];
    mean_.data[i] += delta / double(n_);
    m2_.data[i] += delta * (x.data[i] - mean_.data[i]);
  }
}

RealGrid WelfordGrid::std_sample() const {
  if (n_ < 2) throw StateError("sample std needs at least 2 samples");
  RealGrid s(m2_.nf, m2_.n1, m2_.n2);
  for (std::size_t i = 0; i < s.data.size(); ++i)
    s.data[i] = std::sqrt(std::max(0.0, m2_.data[i]) / double(n_ - 1));
  return s;
}

NoiseMap run_replicas(const ComplexGrid& kspace, const SamplingMasks& masks,
                      const ReplicaConfig& cfg) {
  if (cfg.n_replicas < 2) throw ValueError("need at least 2 replicas");
  if (!(cfg.sigma > 0.0)) throw ValueError("replica sigma must be positive");
  if (kspace.domain != Domain::kspace) throw ValueError("replica input must be k-space");
  if (kspace.n1 != masks.m_sampled.n1 || kspace.n2 != masks.m_sampled.n2)
    throw DimensionError("mask extents do not match the grid");

  const MaskGrid everywhere(kspace.n1, kspace.n2, 1);

  // GRAPPA prediction is linear in the data, so one calibration on the clean
  // subsampled input serves every replica; the weights do not depend on sigma.
  GrappaKernel kernel;
  if (cfg.method.method == Method::grappa) {
    const ComplexGrid clean_sub = apply_mask(kspace, masks.m_sampled);
    auto [norm_sub, rec] = normalize(clean_sub, masks.m_sampled);
    kernel = calibrate(norm_sub, masks, cfg.method.geom, cfg.method.lambda);
  }

  auto one_replica = [&](int r, RealGrid& img, RealGrid& ref) {
    const std::uint64_t seed = cfg.base_seed + std::uint64_t(r) * cfg.seed_stride;
    const ComplexGrid noisy = add_noise(kspace, everywhere, cfg.sigma, seed);
    const ComplexGrid noisy_sub = apply_mask(noisy, masks.m_sampled);
    ref = reconstruct_image(noisy);
    switch (cfg.method.method) {
      case Method::zero_filled:
        img = reconstruct_image(noisy_sub);
        break;
      case Method::grappa: {
        const ComplexGrid pred = predict(noisy_sub, masks, kernel);
        img = reconstruct_image(merge(noisy_sub, pred, masks));
        break;
      }
      case Method::apirnet: {
        auto [kout, image, run] = apirnet_reconstruct(
            noisy_sub, masks, cfg.method.arch, cfg.method.schedule,
            seed + 1000003ULL, cfg.method.reset_optimizer);
        img = std::move(image);
        break;
      }
    }
  };

  // Replicas are independent; results are accumulated in replica order so the
  // output is bit-identical for any thread count.
  std::vector<RealGrid> imgs(cfg.n_replicas), refs(cfg.n_replicas);
  const int workers = std::clamp(cfg.threads, 1, cfg.n_replicas);
  if (workers == 1) {
    for (int r = 1; r <= cfg.n_replicas; ++r) one_replica(r, imgs[r - 1], refs[r - 1]);
  } else {
    std::atomic<int> next{1};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r > cfg.n_replicas) return;
        try {
          one_replica(r, imgs[r - 1], refs[r - 1]);
        } catch (...) {
          std::lock_guard<std::mutex> lk(failure_mu);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  WelfordGrid w_method, w_ref;
  for (int r = 0; r < cfg.n_replicas; ++r) {
    w_method.add(imgs[r]);
    w_ref.add(refs[r]);
  }

  NoiseMap out;
  out.mean_image = w_method.mean();
  out.std_map = w_method.std_sample();
  out.reference_std = w_ref.std_sample();
  out.amplification = RealGrid(out.std_map.nf, out.std_map.n1, out.std_map.n2);
  for (std::size_t i = 0; i < out.amplification.data.size(); ++i) {
    const double ref = out.reference_std.data[i];
    out.amplification.data[i] = ref > 0.0 ? out.std_map.data[i] / ref : 0.0;
  }
  return out;
}

std::vector<MethodReport> compare_methods(
    const ComplexGrid& kspace_acquired, const ComplexGrid& kspace_clean,
    const SamplingMasks& masks, const RealGrid& reference, const MaskGrid& support,
    const std::vector<MethodSpec>& methods, const ReplicaConfig& replica_base,
    const std::string& out_dir, double error_gain) {
  if (methods.empty()) throw ValueError("no methods to compare");
  if (reference.n1 != kspace_acquired.n1 || reference.n2 != kspace_acquired.n2 ||
      reference.nf != kspace_acquired.nf)
    throw DimensionError("reference extents do not match the grid");
  if (!support.same_shape(masks.m_sampled))
    throw DimensionError("support extents do not match the masks");
  if (!(error_gain > 0.0)) throw ValueError("error gain must be positive");

  const bool with_noise = replica_base.n_replicas >= 2;
  const bool write_out = !out_dir.empty();
  if (write_out) fs::create_directories(out_dir);

  double rmax = 0.0;
  for (double v : reference.data) rmax = std::max(rmax, v);
  if (rmax <= 0.0) rmax = 1.0;

  std::map<std::string, int> name_uses;
  bool wrote_reference_std = false;
  std::vector<MethodReport> reports;

  for (const auto& spec : methods) {
    MethodReport rep;
    rep.name = spec.name();
    if (int n = ++name_uses[rep.name]; n > 1)
      rep.name += "_" + std::to_string(n);

    switch (spec.method) {
      case Method::zero_filled:
        rep.recon = reconstruct_image(apply_mask(kspace_acquired, masks.m_sampled));
        break;
      case Method::grappa:
        rep.recon = grappa_reconstruct(kspace_acquired, masks, spec.geom, spec.lambda).image;
        break;
      case Method::apirnet: {
        auto [kout, image, run] = apirnet_reconstruct(
            kspace_acquired, masks, spec.arch, spec.schedule,
            replica_base.base_seed, spec.reset_optimizer);
        rep.recon = std::move(image);
        break;
      }
    }

    rep.error_image = RealGrid(rep.recon.nf, rep.recon.n1, rep.recon.n2);
    for (std::size_t i = 0; i < rep.error_image.data.size(); ++i)
      rep.error_image.data[i] = std::abs(rep.recon.data[i] - reference.data[i]);
    rep.mse_full = mse(rep.recon, reference);
    rep.mse_support = support.popcount() > 0 ? mse(rep.recon, reference, support)
                                             : rep.mse_full;

    if (with_noise) {
      ReplicaConfig cfg = replica_base;
      cfg.method = spec;
      rep.noise = run_replicas(kspace_clean, masks, cfg);
      rep.has_noise = true;

      double sum = 0.0;
      long cnt = 0;
      const bool use_support = support.popcount() > 0;
      const auto& amp = rep.noise.amplification;
      for (int f = 0; f < amp.nf; ++f)
        for (int i = 0; i < amp.n1; ++i)
          for (int j = 0; j < amp.n2; ++j) {
            if (use_support && !support.on(i, j)) continue;
            const double a = amp.at(f, i, j);
            sum += a;
            rep.max_amplification = std::max(rep.max_amplification, a);
            ++cnt;
          }
      rep.mean_amplification = cnt > 0 ? sum / double(cnt) : 0.0;
    }

    if (write_out) {
      const std::string stem = (fs::path(out_dir) / rep.name).string();
      save_real(stem + "_recon", rep.recon);
      save_real(stem + "_error", rep.error_image);
      if (rep.recon.nf == 1) {
        write_pgm16(stem + "_recon.pgm", rep.recon, 0.0, rmax);
        write_pgm16(stem + "_error.pgm", rep.error_image, 0.0, rmax / error_gain);
      }
      if (rep.has_noise) {
        save_real(stem + "_std", rep.noise.std_map);
        save_real(stem + "_amplification", rep.noise.amplification);
        save_real(stem + "_replica_mean", rep.noise.mean_image);
        if (rep.recon.nf == 1) {
          double amax = 0.0;
          for (double v : rep.noise.amplification.data) amax = std::max(amax, v);
          write_pgm16(stem + "_amplification.pgm", rep.noise.amplification, 0.0,
                      amax > 0.0 ? amax : 1.0);
        }
        if (!wrote_reference_std) {
          save_real((fs::path(out_dir) / "reference_std").string(),
                    rep.noise.reference_std);
          wrote_reference_std = true;
        }
      }
    }

    reports.push_back(std::move(rep));
  }

  if (write_out) {
    json jm = json::array();
    for (const auto& rep : reports) {
      json e{{"name", rep.name},
             {"mse_full", rep.mse_full},
             {"mse_support", rep.mse_support},
             {"has_noise", rep.has_noise}};
      if (rep.has_noise) {
        e["mean_amplification"] = rep.mean_amplification;
        e["max_amplification"] = rep.max_amplification;
      }
      jm.push_back(e);
    }
    json j{{"shape", json{kspace_acquired.n1, kspace_acquired.n2}},
           {"channels", kspace_acquired.channels},
           {"accel", json{masks.r1, masks.r2}},
           {"acs_size", json{masks.a1, masks.a2}},
           {"n_replicas", with_noise ? replica_base.n_replicas : 0},
           {"sigma", replica_base.sigma},
           {"base_seed", replica_base.base_seed},
           {"seed_stride", replica_base.seed_stride},
           {"methods", jm}};
    std::ofstream f((fs::path(out_dir) / "report.json").string());
    if (!f) throw IoError("cannot open for writing: " + out_dir + "/report.json");
    f << j.dump(2) << "\n";
    if (!f) throw IoError("write failed: " + out_dir + "/report.json");
  }

  return reports;
}

}  // namespace apir
