#pragma once

#include <optional>
#include <string>
#include <vector>

#include "apir/apirnet.hpp"
#include "apir/grappa.hpp"
#include "apir/grid.hpp"
#include "apir/masks.hpp"
#include "apir/nn.hpp"

namespace apir {

// All formats are a raw little-endian blob <stem>.bin plus a JSON sidecar
// <stem>.json. Complex grids store float32 (re, im) pairs channel-major,
// row-major; real grids store float32 singles; masks store one byte per
// position. Checkpoints store float64 and round-trip exactly.

void save_grid(const std::string& stem, const ComplexGrid& g);
ComplexGrid load_grid(const std::string& stem);

void save_real(const std::string& stem, const RealGrid& g);
RealGrid load_real(const std::string& stem);

void save_mask(const std::string& stem, const MaskGrid& m);
MaskGrid load_mask(const std::string& stem);

// Writes <stem>.json plus <stem>_sampled.bin, <stem>_pattern.bin, <stem>_acs.bin.
void save_masks(const std::string& stem, const SamplingMasks& m);
SamplingMasks load_masks(const std::string& stem);

void save_kernel(const std::string& stem, const GrappaKernel& k);
GrappaKernel load_kernel(const std::string& stem);

// Network checkpoint with the architecture descriptor, the normalization
// scale, and optionally the Adam state so any hierarchical level can resume.
struct Checkpoint {
  ArchitectureSpec arch;
  Network net;
  double norm_scale = 1.0;
  std::optional<AdamState> adam;
};
void save_checkpoint(const std::string& stem, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& stem);

// 16-bit binary PGM (P5, maxval 65535, big-endian samples) with linear
// windowing of [wmin, wmax] onto [0, 65535]. A degenerate window maps to 0.
void write_pgm16(const std::string& path, const RealGrid& g, double wmin, double wmax);

bool files_identical(const std::string& a, const std::string& b);

}  // namespace apir
