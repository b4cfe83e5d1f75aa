#include "apir/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "apir/dft.hpp"
#include "apir/rng.hpp"

namespace apir {

namespace {

void check_spec(const PhantomSpec& spec) {
  if (spec.n1 < 1 || spec.n2 < 1)
    throw DimensionError("phantom shape must be positive");
  if (spec.intensity < 0) throw ValueError("phantom intensity must be >= 0");
  if (spec.radius < 0) throw ValueError("phantom radius must be >= 0");
  const double c1 = (spec.n1 - 1) / 2.0, c2 = (spec.n2 - 1) / 2.0;
  for (const auto& f : spec.features) {
    if (f.intensity < 0) throw ValueError("feature intensity must be >= 0");
    if (f.radius < 0) throw ValueError("feature radius must be >= 0");
    if (c1 + f.dc1 - f.radius < -0.5 || c1 + f.dc1 + f.radius > spec.n1 - 0.5 ||
        c2 + f.dc2 - f.radius < -0.5 || c2 + f.dc2 + f.radius > spec.n2 - 0.5)
      throw ValueError("feature does not fit within the grid");
  }
  if (spec.kind == PhantomSpec::Kind::bars && spec.bar_period < 1)
    throw ValueError("bar period must be >= 1");
}

}  // namespace

RealGrid make_phantom(const PhantomSpec& spec) {
  check_spec(spec);
  RealGrid img(spec.n1, spec.n2);
  const double c1 = (spec.n1 - 1) / 2.0;
  const double c2 = (spec.n2 - 1) / 2.0;

  if (spec.kind == PhantomSpec::Kind::disk) {
    for (int i = 0; i < spec.n1; ++i) {
      for (int j = 0; j < spec.n2; ++j) {
        double v = 0.0;
        double d1 = i - c1, d2 = j - c2;
        if (d1 * d1 + d2 * d2 <= spec.radius * spec.radius) v += spec.intensity;
        for (const auto& f : spec.features) {
          double e1 = i - (c1 + f.dc1), e2 = j - (c2 + f.dc2);
          if (e1 * e1 + e2 * e2 <= f.radius * f.radius) v += f.intensity;
        }
        img.at(i, j) = v;
      }
    }
  } else {
    // Alternating stripes along PE2, clipped to the main disk radius.
    for (int i = 0; i < spec.n1; ++i) {
      for (int j = 0; j < spec.n2; ++j) {
        double d1 = i - c1, d2 = j - c2;
        if (d1 * d1 + d2 * d2 > spec.radius * spec.radius) continue;
        if ((j / spec.bar_period) % 2 == 0) img.at(i, j) = spec.intensity;
      }
    }
  }
  return img;
}

MaskGrid phantom_support(const PhantomSpec& spec) {
  RealGrid img = make_phantom(spec);
  MaskGrid m(spec.n1, spec.n2);
  for (int i = 0; i < spec.n1; ++i)
    for (int j = 0; j < spec.n2; ++j) m.at(i, j) = img.at(i, j) > 0.0 ? 1 : 0;
  return m;
}

CoilProfile make_coils(int n1, int n2, int n_coils, std::uint64_t seed, bool uniform) {
  if (n1 < 1 || n2 < 1) throw DimensionError("coil map shape must be positive");
  if (n_coils < 1) throw ValueError("n_coils must be >= 1");

  CoilProfile p;
  p.n_coils = n_coils;
  p.sens = ComplexGrid(n_coils, 1, n1, n2, Domain::image);
  if (uniform) {
    for (auto& z : p.sens.data) z = cdouble(1.0, 0.0);
    return p;
  }

  const double c1 = (n1 - 1) / 2.0;
  const double c2 = (n2 - 1) / 2.0;
  const double half = std::max(n1, n2) / 2.0;
  const double ring_r = 1.1 * half;
  const double width = 0.85 * half;  // Gaussian std; keeps per-pixel steps small

  Rng rng(seed);
  for (int c = 0; c < n_coils; ++c) {
    double phi = 2.0 * M_PI * c / n_coils + rng.uniform(-0.05, 0.05);
    double p1 = c1 + ring_r * std::cos(phi);
    double p2 = c2 + ring_r * std::sin(phi);
    double amp = 0.9 + 0.2 * rng.uniform();
    double a1 = rng.uniform(-0.04, 0.04);  // linear phase ramp, rad/pixel
    double a2 = rng.uniform(-0.04, 0.04);
    double phi0 = rng.uniform(0.0, 2.0 * M_PI);
    for (int i = 0; i < n1; ++i) {
      for (int j = 0; j < n2; ++j) {
        double d1 = i - p1, d2 = j - p2;
        double mag = amp * std::exp(-(d1 * d1 + d2 * d2) / (2.0 * width * width));
        double ph = a1 * (i - c1) + a2 * (j - c2) + phi0;
        p.sens.at(c, 0, i, j) = std::polar(mag, ph);
      }
    }
  }
  return p;
}

ComplexGrid simulate_kspace(const RealGrid& phantom, const CoilProfile& coils) {
  if (phantom.nf != 1)
    throw DimensionError("simulate_kspace expects a single-slice phantom");
  if (coils.sens.n1 != phantom.n1 || coils.sens.n2 != phantom.n2)
    throw DimensionError("coil map extents do not match phantom extents");
  ComplexGrid img(coils.n_coils, 1, phantom.n1, phantom.n2, Domain::image);
  for (int c = 0; c < coils.n_coils; ++c)
    for (int i = 0; i < phantom.n1; ++i)
      for (int j = 0; j < phantom.n2; ++j)
        img.at(c, 0, i, j) = coils.sens.at(c, 0, i, j) * phantom.at(i, j);
  return dft_forward(img);
}

ComplexGrid add_noise(const ComplexGrid& kspace, const MaskGrid& m, double sigma,
                      std::uint64_t seed) {
  if (m.n1 != kspace.n1 || m.n2 != kspace.n2)
    throw DimensionError("mask extents do not match grid PE extents");
  if (sigma < 0) throw ValueError("sigma must be >= 0");
  ComplexGrid out = kspace;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (int c = 0; c < out.channels; ++c) {
    for (int f = 0; f < out.nf; ++f) {
      for (int i = 0; i < out.n1; ++i) {
        for (int j = 0; j < out.n2; ++j) {
          if (!m.on(i, j)) continue;
          double re = sigma * rng.normal();
          double im = sigma * rng.normal();
          out.at(c, f, i, j) += cdouble(re, im);
        }
      }
    }
  }
  return out;
}

}  // namespace apir
