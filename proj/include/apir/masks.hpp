#pragma once

#include <utility>

#include "apir/grid.hpp"

namespace apir {

// The sampling-mask triple over the PE plane. m_sampled is the union of the
// regular lattice m_pattern and the centered contiguous ACS block m_acs.
struct SamplingMasks {
  MaskGrid m_sampled;
  MaskGrid m_pattern;
  MaskGrid m_acs;
  int r1 = 1, r2 = 1;  // acceleration per PE axis
  int a1 = 0, a2 = 0;  // ACS extents
  int o1 = 0, o2 = 0;  // pattern lattice offsets
};

SamplingMasks make_masks(int n1, int n2, std::pair<int, int> accel,
                         std::pair<int, int> acs_size,
                         std::pair<int, int> offsets = {0, 0});

ComplexGrid apply_mask(const ComplexGrid& g, const MaskGrid& m);

// Centered crops used by hierarchical training. The mask crop slices the
// parent rasters, so the union identity is preserved exactly; the lattice
// offsets and ACS extents are recomputed for the cropped frame.
ComplexGrid crop_centered(const ComplexGrid& g, int k1, int k2);
MaskGrid crop_centered(const MaskGrid& m, int k1, int k2);
SamplingMasks crop_centered(const SamplingMasks& m, int k1, int k2);

}  // namespace apir
