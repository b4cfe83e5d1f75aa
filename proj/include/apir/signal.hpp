#pragma once

#include <utility>

#include "apir/grid.hpp"
#include "apir/masks.hpp"

namespace apir {

// Scale factor by which raw k-space was divided; multiply back to undo.
struct NormalizationRecord {
  double scale = 1.0;
};

// Scale g so the largest sampled magnitude is 1. Raises ValueError when the
// sampled data is all zero (or the mask is empty).
std::pair<ComplexGrid, NormalizationRecord> normalize(const ComplexGrid& g,
                                                      const MaskGrid& m_sampled);
ComplexGrid denormalize(const ComplexGrid& g, const NormalizationRecord& rec);

// Root-mean-square combination over channels of an image-domain grid.
RealGrid rms_combine(const ComplexGrid& img);

// dft_inverse followed by rms_combine.
RealGrid reconstruct_image(const ComplexGrid& kspace);

double mse(const RealGrid& recon, const RealGrid& reference);
double mse(const RealGrid& recon, const RealGrid& reference, const MaskGrid& region);

}  // namespace apir
