#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "apir/errors.hpp"
#include "apir/grappa.hpp"
#include "apir/grid.hpp"
#include "apir/io.hpp"
#include "apir/masks.hpp"
#include "apir/phantom.hpp"
#include "apir/rng.hpp"
#include "apir/signal.hpp"
#include "oracles.hpp"

using namespace apir;

namespace {

int mod(int x, int m) { return ((x % m) + m) % m; }

ComplexGrid random_grid(int c, int nf, int n1, int n2, Domain d, std::uint64_t seed) {
  ComplexGrid g(c, nf, n1, n2, d);
  Rng rng(seed);
  for (auto& z : g.data) z = cdouble(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return g;
}

std::string temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() /
           ("apir_unit_" + std::string(tag) + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(p);
  return p.string();
}

// Largest |w_lib - w_oracle| over all offsets, plus the oracle's own largest
// magnitude for scaling the tolerance.
struct WeightDiff {
  double diff = 0.0;
  double scale = 0.0;
};

WeightDiff compare_weights(const GrappaKernel& k, const oracle::GrappaOracleFit& f) {
  REQUIRE(k.offsets == f.offsets);
  REQUIRE(k.weights.size() == f.weights.size());
  WeightDiff r;
  const int S = k.source_count();
  for (std::size_t o = 0; o < k.weights.size(); ++o) {
    REQUIRE(int(k.weights[o].size()) == k.channels * S);
    REQUIRE(f.weights[o].rows() == k.channels);
    REQUIRE(f.weights[o].cols() == S);
    for (int c = 0; c < k.channels; ++c)
      for (int s = 0; s < S; ++s) {
        r.diff = std::max(r.diff,
                          std::abs(k.weights[o][std::size_t(c) * S + s] -
                                   f.weights[o](c, s)));
        r.scale = std::max(r.scale, std::abs(f.weights[o](c, s)));
      }
  }
  return r;
}

// K-space whose off-pattern values are produced exactly from the pattern
// lattice by a known per-offset weight set (k_fe = 1), with periodic wrap.
struct Generated {
  ComplexGrid ks;
  std::vector<std::pair<int, int>> offsets;
  std::vector<std::vector<cdouble>> weights;  // per offset, row-major C x S
};

Generated make_generated(int C, int nf, int n1, int n2, const SamplingMasks& m,
                         int kp1, int kp2, std::uint64_t seed) {
  const int S = C * kp1 * kp2;
  const int lo1 = -(kp1 - 1) / 2, hi1 = kp1 / 2;
  const int lo2 = -(kp2 - 1) / 2, hi2 = kp2 / 2;
  Rng rng(seed);

  Generated g;
  g.ks = ComplexGrid(C, nf, n1, n2, Domain::kspace);
  for (int c = 0; c < C; ++c)
    for (int f = 0; f < nf; ++f)
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
          if (mod(i - m.o1, m.r1) == 0 && mod(j - m.o2, m.r2) == 0)
            g.ks.at(c, f, i, j) = cdouble(rng.uniform(-1, 1), rng.uniform(-1, 1));

  for (int d1 = 0; d1 < m.r1; ++d1)
    for (int d2 = 0; d2 < m.r2; ++d2) {
      if (d1 == 0 && d2 == 0) continue;
      g.offsets.emplace_back(d1, d2);
      std::vector<cdouble> w(std::size_t(C) * S);
      for (auto& z : w) z = cdouble(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
      g.weights.push_back(std::move(w));
    }

  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      const int d1 = mod(i - m.o1, m.r1), d2 = mod(j - m.o2, m.r2);
      if (d1 == 0 && d2 == 0) continue;
      const auto& w = g.weights[std::size_t(d1) * m.r2 + d2 - 1];
      for (int f = 0; f < nf; ++f)
        for (int ct = 0; ct < C; ++ct) {
          cdouble acc(0.0, 0.0);
          int col = 0;
          for (int cs = 0; cs < C; ++cs)
            for (int u = lo1; u <= hi1; ++u)
              for (int v = lo2; v <= hi2; ++v)
                acc += w[std::size_t(ct) * S + col++] *
                       g.ks.at(cs, f, mod(i - d1 + u * m.r1, n1),
                               mod(j - d2 + v * m.r2, n2));
          g.ks.at(ct, f, i, j) = acc;
        }
    }
  return g;
}

}  // namespace

TEST_CASE("calibration matches the svd oracle") {
  struct Config {
    int C, nf, n1, n2, r1, r2, a1, a2;
    GrappaGeometry geom;
    double lambda;
  };
  const Config configs[] = {
      {2, 1, 24, 24, 2, 2, 16, 16, {1, 3, 3}, 0.0},
      {2, 1, 24, 24, 2, 2, 16, 16, {1, 3, 3}, 1e-3},
      {2, 4, 20, 20, 2, 2, 12, 12, {2, 3, 2}, 1e-3},
      {3, 1, 30, 24, 3, 2, 15, 12, {1, 3, 3}, 1e-3},
  };
  int seed = 900;
  for (const auto& cfg : configs) {
    CAPTURE(cfg.C);
    CAPTURE(cfg.r1);
    CAPTURE(cfg.lambda);
    ComplexGrid ks = random_grid(cfg.C, cfg.nf, cfg.n1, cfg.n2, Domain::kspace, seed++);
    SamplingMasks m = make_masks(cfg.n1, cfg.n2, {cfg.r1, cfg.r2}, {cfg.a1, cfg.a2});
    GrappaKernel k = calibrate(ks, m, cfg.geom, cfg.lambda);
    auto fit = oracle::grappa_fit(ks, m, cfg.geom.k_fe, cfg.geom.k_pe1, cfg.geom.k_pe2,
                                  cfg.lambda);
    auto d = compare_weights(k, fit);
    CHECK(d.diff <= 1e-8 * (1.0 + d.scale));
    CHECK(k.r1 == cfg.r1);
    CHECK(k.r2 == cfg.r2);
    CHECK(k.channels == cfg.C);
    CHECK(int(k.offsets.size()) == cfg.r1 * cfg.r2 - 1);
  }
}

TEST_CASE("calibration recovers an exact generating kernel and predict reproduces it") {
  struct Config {
    std::pair<int, int> offsets;
    std::uint64_t seed;
  };
  for (const auto& cfg : {Config{{0, 0}, 31}, Config{{1, 1}, 32}}) {
    const int C = 2, nf = 3, n1 = 24, n2 = 24;
    SamplingMasks m = make_masks(n1, n2, {2, 2}, {14, 14}, cfg.offsets);
    Generated gen = make_generated(C, nf, n1, n2, m, 3, 3, cfg.seed);

    GrappaKernel k = calibrate(gen.ks, m, {1, 3, 3}, 0.0);
    REQUIRE(k.offsets == gen.offsets);
    double wdiff = 0.0;
    for (std::size_t o = 0; o < k.weights.size(); ++o)
      for (std::size_t i = 0; i < k.weights[o].size(); ++i)
        wdiff = std::max(wdiff, std::abs(k.weights[o][i] - gen.weights[o][i]));
    CHECK(wdiff <= 1e-8);

    ComplexGrid pred = predict(gen.ks, m, k);
    double pdiff = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i)
      pdiff = std::max(pdiff, std::abs(pred.data[i] - gen.ks.data[i]) /
                                  (1.0 + std::abs(gen.ks.data[i])));
    CHECK(pdiff <= 1e-8);
  }
}

TEST_CASE("predict copies pattern-lattice positions bitwise") {
  ComplexGrid ks = random_grid(2, 1, 20, 20, Domain::kspace, 55);
  SamplingMasks m = make_masks(20, 20, {2, 2}, {12, 12}, {1, 0});
  GrappaKernel k = calibrate(ks, m, {1, 3, 3}, 1e-2);
  ComplexGrid out = predict(ks, m, k);
  int copied = 0, changed = 0;
  for (int c = 0; c < ks.channels; ++c)
    for (int i = 0; i < ks.n1; ++i)
      for (int j = 0; j < ks.n2; ++j) {
        if (m.m_pattern.on(i, j)) {
          CHECK(out.at(c, 0, i, j) == ks.at(c, 0, i, j));
          ++copied;
        } else if (out.at(c, 0, i, j) != ks.at(c, 0, i, j)) {
          ++changed;
        }
      }
  CHECK(copied > 0);
  CHECK(changed > 0);  // off-pattern positions really are rewritten
}

TEST_CASE("predict is linear: scaling the input by a power of two scales the output") {
  ComplexGrid ks = random_grid(3, 1, 20, 20, Domain::kspace, 77);
  SamplingMasks m = make_masks(20, 20, {2, 2}, {12, 12});
  GrappaKernel k = calibrate(ks, m, {1, 3, 3}, 1e-3);
  ComplexGrid scaled = ks;
  for (auto& z : scaled.data) z *= 2.0;
  ComplexGrid a = predict(ks, m, k);
  ComplexGrid b = predict(scaled, m, k);
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(b.data[i] == 2.0 * a.data[i]);
}

TEST_CASE("merge is an exact selection") {
  ComplexGrid ks = random_grid(2, 2, 16, 14, Domain::kspace, 60);
  ComplexGrid pred = random_grid(2, 2, 16, 14, Domain::kspace, 61);
  SamplingMasks m = make_masks(16, 14, {2, 2}, {8, 6});
  ComplexGrid out = merge(ks, pred, m);
  for (int c = 0; c < 2; ++c)
    for (int f = 0; f < 2; ++f)
      for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 14; ++j) {
          if (m.m_sampled.on(i, j))
            CHECK(out.at(c, f, i, j) == ks.at(c, f, i, j));
          else
            CHECK(out.at(c, f, i, j) == pred.at(c, f, i, j));
        }
}

TEST_CASE("ridge weight norms are monotone nonincreasing in lambda") {
  ComplexGrid ks = random_grid(3, 1, 20, 20, Domain::kspace, 81);
  SamplingMasks m = make_masks(20, 20, {2, 2}, {12, 12});
  const double lambdas[] = {0.0, 1e-3, 1e-1, 10.0};
  std::vector<double> norms;
  for (double lam : lambdas) {
    GrappaKernel k = calibrate(ks, m, {1, 3, 3}, lam);
    double n2 = 0.0;
    for (const auto& w : k.weights)
      for (const auto& z : w) n2 += std::norm(z);
    norms.push_back(std::sqrt(n2));
  }
  for (std::size_t i = 1; i < norms.size(); ++i) CHECK(norms[i] <= norms[i - 1] + 1e-12);
}

TEST_CASE("rank-deficient calibration demands regularization") {
  // 8 channels with a (1,3,3) kernel needs 72 unknowns per offset; a 6x6 ACS
  // at (2,2) provides only 9 fitting rows, so the unregularized normal
  // equations are singular.
  ComplexGrid ks = random_grid(8, 1, 24, 24, Domain::kspace, 90);
  SamplingMasks m = make_masks(24, 24, {2, 2}, {6, 6});
  CHECK_THROWS_AS(calibrate(ks, m, {1, 3, 3}, 0.0), CalibrationError);
  try {
    calibrate(ks, m, {1, 3, 3}, 0.0);
  } catch (const CalibrationError& e) {
    CHECK(std::string(e.what()).find("use lambda > 0") != std::string::npos);
  }
  GrappaKernel k = calibrate(ks, m, {1, 3, 3}, 1e-3);
  CHECK(k.offsets.size() == 3);
  for (const auto& w : k.weights) CHECK(w.size() == std::size_t(8) * k.source_count());
}

TEST_CASE("acs block must cover one full source footprint") {
  ComplexGrid ks = random_grid(2, 1, 32, 32, Domain::kspace, 95);
  // (1,5,5) at accel (2,2) needs a 9x9 ACS.
  SamplingMasks small1 = make_masks(32, 32, {2, 2}, {8, 10});
  CHECK_THROWS_AS(calibrate(ks, small1, {1, 5, 5}, 1e-3), CalibrationError);
  SamplingMasks small2 = make_masks(32, 32, {2, 2}, {10, 8});
  CHECK_THROWS_AS(calibrate(ks, small2, {1, 5, 5}, 1e-3), CalibrationError);
  try {
    calibrate(ks, small1, {1, 5, 5}, 1e-3);
  } catch (const CalibrationError& e) {
    CHECK(std::string(e.what()).find("insufficient ACS") != std::string::npos);
  }
  SamplingMasks ok = make_masks(32, 32, {2, 2}, {9, 9});
  CHECK_NOTHROW(calibrate(ks, ok, {1, 5, 5}, 1e-3));
}

TEST_CASE("fe extent must cover the fe footprint") {
  ComplexGrid ks = random_grid(2, 1, 20, 20, Domain::kspace, 97);
  SamplingMasks m = make_masks(20, 20, {2, 2}, {12, 12});
  CHECK_THROWS_AS(calibrate(ks, m, {2, 3, 3}, 1e-3), CalibrationError);
}

TEST_CASE("calibrate and predict validate their inputs") {
  ComplexGrid ks = random_grid(2, 1, 20, 20, Domain::kspace, 99);
  SamplingMasks m = make_masks(20, 20, {2, 2}, {12, 12});

  CHECK_THROWS_AS(calibrate(ks, m, {1, 3, 3}, -1.0), ValueError);
  CHECK_THROWS_AS(calibrate(ks, m, {1, 0, 3}, 0.0), ValueError);

  SamplingMasks wrong = make_masks(16, 16, {2, 2}, {8, 8});
  CHECK_THROWS_AS(calibrate(ks, wrong, {1, 3, 3}, 0.0), DimensionError);

  ComplexGrid bad = ks;
  bad.at(0, 0, 3, 3) = cdouble(std::numeric_limits<double>::quiet_NaN(), 0.0);
  CHECK_THROWS_AS(calibrate(bad, m, {1, 3, 3}, 1e-3), ValueError);

  GrappaKernel k = calibrate(ks, m, {1, 3, 3}, 1e-3);
  CHECK_THROWS_AS(predict(ks, wrong, k), DimensionError);
  SamplingMasks other = make_masks(20, 20, {2, 1}, {12, 12});
  CHECK_THROWS_AS(predict(ks, other, k), DimensionError);
  ComplexGrid narrow = random_grid(3, 1, 20, 20, Domain::kspace, 98);
  CHECK_THROWS_AS(predict(narrow, m, k), DimensionError);

  ComplexGrid small = random_grid(2, 1, 16, 16, Domain::kspace, 96);
  CHECK_THROWS_AS(merge(ks, small, m), DimensionError);
}

TEST_CASE("no acceleration passes the input straight through") {
  ComplexGrid ks = random_grid(2, 1, 12, 12, Domain::kspace, 70);
  SamplingMasks m = make_masks(12, 12, {1, 1}, {4, 4});
  GrappaKernel k = calibrate(ks, m, {1, 3, 3}, 0.0);
  CHECK(k.offsets.empty());
  ComplexGrid out = predict(ks, m, k);
  for (std::size_t i = 0; i < out.data.size(); ++i) CHECK(out.data[i] == ks.data[i]);

  GrappaResult res = grappa_reconstruct(ks, m, {1, 3, 3}, 0.0);
  for (std::size_t i = 0; i < res.kspace.data.size(); ++i)
    CHECK(res.kspace.data[i] == ks.data[i]);
  RealGrid direct = reconstruct_image(ks);
  for (std::size_t i = 0; i < res.image.data.size(); ++i)
    CHECK(res.image.data[i] == direct.data[i]);
}

TEST_CASE("grappa beats zero-filling on a simulated phantom") {
  PhantomSpec spec;
  spec.n1 = spec.n2 = 32;
  spec.radius = 12.0;
  RealGrid ph = make_phantom(spec);
  CoilProfile coils = make_coils(32, 32, 4, 7);
  ComplexGrid ks = simulate_kspace(ph, coils);
  ComplexGrid noisy = add_noise(ks, MaskGrid(32, 32, 1), 1e-4, 3);

  SamplingMasks m = make_masks(32, 32, {2, 2}, {16, 16});
  ComplexGrid sub = apply_mask(noisy, m.m_sampled);
  RealGrid reference = reconstruct_image(noisy);
  RealGrid zf = reconstruct_image(sub);

  GrappaResult res = grappa_reconstruct(sub, m, {1, 3, 3}, 1e-4);
  CHECK(mse(res.image, reference) < mse(zf, reference));

  // Sampled positions of the merged k-space are the raw input, bitwise.
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j)
        if (m.m_sampled.on(i, j)) CHECK(res.kspace.at(c, 0, i, j) == sub.at(c, 0, i, j));
  CHECK(res.kernel.lambda == 1e-4);
  CHECK(res.norm.scale > 0.0);
}

TEST_CASE("kernel files round-trip at float32 precision") {
  ComplexGrid ks = random_grid(2, 1, 20, 20, Domain::kspace, 110);
  SamplingMasks m = make_masks(20, 20, {2, 2}, {12, 12}, {0, 1});
  GrappaKernel k = calibrate(ks, m, {1, 3, 3}, 1e-3);

  std::string dir = temp_dir("kernel");
  save_kernel(dir + "/weights", k);
  GrappaKernel l = load_kernel(dir + "/weights");

  CHECK(l.r1 == k.r1);
  CHECK(l.r2 == k.r2);
  CHECK(l.geom.k_fe == k.geom.k_fe);
  CHECK(l.geom.k_pe1 == k.geom.k_pe1);
  CHECK(l.geom.k_pe2 == k.geom.k_pe2);
  CHECK(l.lambda == k.lambda);
  CHECK(l.channels == k.channels);
  CHECK(l.offsets == k.offsets);
  REQUIRE(l.weights.size() == k.weights.size());
  for (std::size_t o = 0; o < k.weights.size(); ++o) {
    REQUIRE(l.weights[o].size() == k.weights[o].size());
    for (std::size_t i = 0; i < k.weights[o].size(); ++i) {
      CHECK(l.weights[o][i].real() == double(float(k.weights[o][i].real())));
      CHECK(l.weights[o][i].imag() == double(float(k.weights[o][i].imag())));
    }
  }
  std::filesystem::remove_all(dir);
}
