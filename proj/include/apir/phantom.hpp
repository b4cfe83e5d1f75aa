#pragma once

#include <cstdint>
#include <vector>

#include "apir/grid.hpp"
#include "apir/masks.hpp"

namespace apir {

// Additive disk feature; center offsets are relative to the grid center.
struct DiskFeature {
  double dc1 = 0.0;
  double dc2 = 0.0;
  double radius = 0.0;
  double intensity = 0.0;
};

struct PhantomSpec {
  enum class Kind { disk, bars };
  int n1 = 64;
  int n2 = 64;
  Kind kind = Kind::disk;
  double radius = 24.0;      // main disk radius (disk kind)
  double intensity = 1.0;
  std::vector<DiskFeature> features;  // disk kind only
  int bar_period = 8;        // bars kind: stripe width in pixels
};

// Smooth ring-arranged complex Gaussian sensitivities with linear phase.
struct CoilProfile {
  int n_coils = 0;
  ComplexGrid sens;  // channels = n_coils, image domain
};

RealGrid make_phantom(const PhantomSpec& spec);
MaskGrid phantom_support(const PhantomSpec& spec);

CoilProfile make_coils(int n1, int n2, int n_coils, std::uint64_t seed,
                       bool uniform = false);

// Per-coil image = phantom * sensitivity, transformed to k-space.
ComplexGrid simulate_kspace(const RealGrid& phantom, const CoilProfile& coils);

// Add i.i.d. complex Gaussian noise (std sigma per component) at masked
// positions only, across all channels and FE planes. Deterministic per seed.
ComplexGrid add_noise(const ComplexGrid& kspace, const MaskGrid& m, double sigma,
                      std::uint64_t seed);

}  // namespace apir
