#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "apir/dft.hpp"
#include "apir/errors.hpp"
#include "apir/masks.hpp"
#include "apir/phantom.hpp"
#include "apir/signal.hpp"

using namespace apir;

TEST_CASE("disk phantom has the requested radius and intensity") {
  PhantomSpec spec;
  spec.n1 = 33;
  spec.n2 = 33;  // integer center at (16, 16)
  spec.radius = 10.0;
  spec.intensity = 0.75;
  RealGrid p = make_phantom(spec);
  CHECK(p.at(16, 16) == 0.75);
  CHECK(p.at(16, 16 + 10) == 0.75);  // on the rim (d = radius counts as inside)
  CHECK(p.at(16, 16 + 11) == 0.0);
  CHECK(p.at(0, 0) == 0.0);

  long inside = 0;
  for (int i = 0; i < 33; ++i)
    for (int j = 0; j < 33; ++j) {
      const double d1 = i - 16.0, d2 = j - 16.0;
      const bool in = d1 * d1 + d2 * d2 <= 100.0;
      CHECK(p.at(i, j) == (in ? 0.75 : 0.0));
      inside += in;
    }
  MaskGrid sup = phantom_support(spec);
  CHECK(long(sup.popcount()) == inside);
}

TEST_CASE("disk features add on top of the base disk") {
  PhantomSpec spec;
  spec.n1 = 32;
  spec.n2 = 32;
  spec.radius = 12.0;
  spec.intensity = 1.0;
  spec.features.push_back({4.0, -3.0, 2.0, 0.5});
  RealGrid p = make_phantom(spec);
  const double c = (32 - 1) / 2.0;
  const int fi = int(std::lround(c + 4.0)), fj = int(std::lround(c - 3.0));
  CHECK(p.at(fi, fj) == 1.5);                   // base + feature
  CHECK(p.at(int(c), int(c)) == 1.0);           // base only
  MaskGrid sup = phantom_support(spec);
  CHECK(sup.on(fi, fj));
}

TEST_CASE("bar phantom alternates stripes clipped to the disk") {
  PhantomSpec spec;
  spec.n1 = 24;
  spec.n2 = 24;
  spec.kind = PhantomSpec::Kind::bars;
  spec.radius = 10.0;
  spec.intensity = 2.0;
  spec.bar_period = 3;
  RealGrid p = make_phantom(spec);
  const double c = (24 - 1) / 2.0;
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      const double d1 = i - c, d2 = j - c;
      const bool in = d1 * d1 + d2 * d2 <= 100.0;
      const bool stripe = (j / 3) % 2 == 0;
      CHECK(p.at(i, j) == ((in && stripe) ? 2.0 : 0.0));
    }
}

TEST_CASE("phantom validation rejects bad specs") {
  PhantomSpec spec;
  spec.n1 = 16;
  spec.n2 = 16;
  spec.features.push_back({20.0, 0.0, 2.0, 1.0});  // center off the grid
  CHECK_THROWS_AS((void)make_phantom(spec), ValueError);
  spec.features.clear();
  spec.radius = -1.0;
  CHECK_THROWS_AS((void)make_phantom(spec), ValueError);
  spec.radius = 4.0;
  spec.kind = PhantomSpec::Kind::bars;
  spec.bar_period = 0;
  CHECK_THROWS_AS((void)make_phantom(spec), ValueError);
}

TEST_CASE("coil profiles are deterministic, smooth in magnitude, and nonzero") {
  CoilProfile a = make_coils(24, 20, 6, 7);
  CoilProfile b = make_coils(24, 20, 6, 7);
  CoilProfile c = make_coils(24, 20, 6, 8);
  CHECK(a.sens.data == b.sens.data);
  CHECK(a.sens.data != c.sens.data);
  CHECK(a.sens.channels == 6);
  CHECK(a.sens.domain == Domain::image);

  double dmax = 0.0;
  for (int ch = 0; ch < 6; ++ch)
    for (int i = 0; i < 24; ++i)
      for (int j = 0; j < 20; ++j) {
        const double m = std::abs(a.sens.at(ch, 0, i, j));
        CHECK(m > 0.0);
        CHECK(m <= 1.1);
        if (j + 1 < 20)
          dmax = std::max(dmax, std::abs(m - std::abs(a.sens.at(ch, 0, i, j + 1))));
      }
  // Gaussian profile of std w: per-pixel magnitude steps stay under amp/(w*sqrt(e)).
  CHECK(dmax < 1.1 / (0.85 * 12.0 * std::sqrt(std::exp(1.0))));

  CoilProfile u = make_coils(8, 8, 3, 1, true);
  for (const auto& z : u.sens.data) CHECK(z == cdouble(1.0, 0.0));

  CHECK_THROWS_AS((void)make_coils(8, 8, 0, 1), ValueError);
}

TEST_CASE("simulated k-space inverts to the coil-weighted phantom") {
  PhantomSpec spec;
  spec.n1 = 20;
  spec.n2 = 20;
  spec.radius = 7.0;
  RealGrid ph = make_phantom(spec);
  CoilProfile coils = make_coils(20, 20, 4, 3);
  ComplexGrid ks = simulate_kspace(ph, coils);
  CHECK(ks.domain == Domain::kspace);
  CHECK(ks.channels == 4);

  ComplexGrid img = dft_inverse(ks);
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) {
        const cdouble want = coils.sens.at(c, 0, i, j) * ph.at(i, j);
        CHECK(std::abs(img.at(c, 0, i, j) - want) < 1e-10);
      }
}

TEST_CASE("noise is masked, deterministic, and has the requested scale") {
  ComplexGrid g(2, 1, 32, 32, Domain::kspace);
  SamplingMasks m = make_masks(32, 32, {2, 2}, {12, 12});
  const double sigma = 0.3;

  ComplexGrid n1 = add_noise(g, m.m_sampled, sigma, 42);
  ComplexGrid n2 = add_noise(g, m.m_sampled, sigma, 42);
  ComplexGrid n3 = add_noise(g, m.m_sampled, sigma, 43);
  CHECK(n1.data == n2.data);
  CHECK(n1.data != n3.data);

  double sum2 = 0.0;
  long cnt = 0;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) {
        if (!m.m_sampled.on(i, j)) {
          CHECK(n1.at(c, 0, i, j) == cdouble(0.0, 0.0));
          continue;
        }
        sum2 += std::norm(n1.at(c, 0, i, j));
        cnt += 2;  // real and imaginary components
      }
  const double est = std::sqrt(sum2 / double(cnt));
  CHECK(est == doctest::Approx(sigma).epsilon(0.10));

  ComplexGrid z = add_noise(g, m.m_sampled, 0.0, 42);
  CHECK(z.data == g.data);
  CHECK_THROWS_AS((void)add_noise(g, m.m_sampled, -0.1, 1), ValueError);
}
