#pragma once

#include <utility>
#include <vector>

#include "apir/grid.hpp"
#include "apir/masks.hpp"
#include "apir/signal.hpp"

namespace apir {

// Kernel extents over source points: k_fe unit steps along FE, k_pe1/k_pe2
// pattern-lattice steps (stride R) along the PE axes.
struct GrappaGeometry {
  int k_fe = 1;
  int k_pe1 = 5;
  int k_pe2 = 5;
};

// Per-target-offset linear prediction weights. For each unsampled offset d in
// the R1xR2 cell the weights form a (channels x source-count) complex matrix,
// source-count = C * k_fe * k_pe1 * k_pe2, columns ordered channel-major then
// (fe, pe1, pe2) taps.
struct GrappaKernel {
  int r1 = 1, r2 = 1;
  GrappaGeometry geom;
  double lambda = 0.0;
  int channels = 0;
  std::vector<std::pair<int, int>> offsets;        // cell offsets, (0,0) excluded
  std::vector<std::vector<cdouble>> weights;       // per offset, row-major C x S

  int source_count() const { return channels * geom.k_fe * geom.k_pe1 * geom.k_pe2; }
};

// Ridge-regularized least-squares fit on ACS rows: (A^H A + lambda I) W = A^H B.
// Rows are ACS target positions of the given cell offset whose full source
// footprint lies inside the grid; sources are pattern-lattice positions.
GrappaKernel calibrate(const ComplexGrid& kspace, const SamplingMasks& masks,
                       const GrappaGeometry& geom, double lambda);

// Predict every off-pattern position from the pattern-masked input with
// periodic wrap; positions on the pattern lattice copy the input.
ComplexGrid predict(const ComplexGrid& kspace, const SamplingMasks& masks,
                    const GrappaKernel& kernel);

// S_final = S at sampled positions, prediction elsewhere (exact selection).
ComplexGrid merge(const ComplexGrid& kspace, const ComplexGrid& predicted,
                  const SamplingMasks& masks);

struct GrappaResult {
  ComplexGrid kspace;   // merged k-space
  RealGrid image;
  GrappaKernel kernel;
  NormalizationRecord norm;
};

// calibrate + predict + merge + reconstruct_image. The input is normalized
// internally (largest sampled magnitude to 1) so lambda is dimensionless; the
// merge runs in the raw input domain.
GrappaResult grappa_reconstruct(const ComplexGrid& kspace, const SamplingMasks& masks,
                                const GrappaGeometry& geom, double lambda);

}  // namespace apir
