#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "apir/errors.hpp"

namespace apir {

using cdouble = std::complex<double>;

enum class Domain { kspace, image };

// Multi-coil complex array indexed [channel, fe, pe1, pe2]. Single-slice 2D
// data uses nf = 1; the two phase-encode axes are always the trailing pair.
struct ComplexGrid {
  int channels = 0;
  int nf = 1;
  int n1 = 0;
  int n2 = 0;
  Domain domain = Domain::kspace;
  std::vector<cdouble> data;

  ComplexGrid() = default;
  ComplexGrid(int c, int f, int i, int j, Domain d)
      : channels(c), nf(f), n1(i), n2(j), domain(d) {
    if (c < 1 || f < 1 || i < 1 || j < 1)
      throw DimensionError("grid extents must be positive");
    data.assign(std::size_t(c) * f * i * j, cdouble(0.0, 0.0));
  }

  std::size_t idx(int c, int f, int i, int j) const {
    return ((std::size_t(c) * nf + f) * n1 + i) * n2 + j;
  }
  cdouble& at(int c, int f, int i, int j) { return data[idx(c, f, i, j)]; }
  const cdouble& at(int c, int f, int i, int j) const { return data[idx(c, f, i, j)]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const ComplexGrid& o) const {
    return channels == o.channels && nf == o.nf && n1 == o.n1 && n2 == o.n2;
  }
};

// Real-valued spatial grid (combined images, noise maps).
struct RealGrid {
  int nf = 1;
  int n1 = 0;
  int n2 = 0;
  std::vector<double> data;

  RealGrid() = default;
  RealGrid(int f, int i, int j) : nf(f), n1(i), n2(j) {
    if (f < 1 || i < 1 || j < 1)
      throw DimensionError("grid extents must be positive");
    data.assign(std::size_t(f) * i * j, 0.0);
  }
  RealGrid(int i, int j) : RealGrid(1, i, j) {}

  std::size_t idx(int f, int i, int j) const {
    return (std::size_t(f) * n1 + i) * n2 + j;
  }
  double& at(int f, int i, int j) { return data[idx(f, i, j)]; }
  double at(int f, int i, int j) const { return data[idx(f, i, j)]; }
  double& at(int i, int j) { return data[idx(0, i, j)]; }
  double at(int i, int j) const { return data[idx(0, i, j)]; }

  bool same_shape(const RealGrid& o) const {
    return nf == o.nf && n1 == o.n1 && n2 == o.n2;
  }
};

// Binary mask over the phase-encode plane, broadcast over channel and FE axes.
struct MaskGrid {
  int n1 = 0;
  int n2 = 0;
  std::vector<std::uint8_t> data;

  MaskGrid() = default;
  MaskGrid(int i, int j, std::uint8_t fill = 0) : n1(i), n2(j) {
    if (i < 1 || j < 1) throw DimensionError("mask extents must be positive");
    data.assign(std::size_t(i) * j, fill);
  }

  std::uint8_t& at(int i, int j) { return data[std::size_t(i) * n2 + j]; }
  std::uint8_t at(int i, int j) const { return data[std::size_t(i) * n2 + j]; }
  bool on(int i, int j) const { return at(i, j) != 0; }

  std::size_t popcount() const {
    std::size_t n = 0;
    for (auto v : data) n += (v != 0);
    return n;
  }
  bool same_shape(const MaskGrid& o) const { return n1 == o.n1 && n2 == o.n2; }
};

void require_finite(const ComplexGrid& g, const char* what);
void require_finite(const RealGrid& g, const char* what);

}  // namespace apir
