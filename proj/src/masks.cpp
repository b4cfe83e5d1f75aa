#include "apir/masks.hpp"

#include <algorithm>
#include <string>

namespace apir {

namespace {

int wrap_mod(int x, int m) { return ((x % m) + m) % m; }

void check_crop(int n1, int n2, int k1, int k2) {
  if (k1 < 1 || k2 < 1 || k1 > n1 || k2 > n2)
    throw DimensionError("crop " + std::to_string(k1) + "x" + std::to_string(k2) +
                         " does not fit in " + std::to_string(n1) + "x" +
                         std::to_string(n2));
}

}  // namespace

SamplingMasks make_masks(int n1, int n2, std::pair<int, int> accel,
                         std::pair<int, int> acs_size, std::pair<int, int> offsets) {
  auto [r1, r2] = accel;
  auto [a1, a2] = acs_size;
  if (n1 < 1 || n2 < 1) throw DimensionError("mask shape must be positive");
  if (r1 < 1 || r2 < 1) throw ValueError("acceleration factors must be >= 1");
  if (a1 < 0 || a2 < 0) throw ValueError("acs size must be nonnegative");
  if (a1 > n1 || a2 > n2)
    throw DimensionError("acs " + std::to_string(a1) + "x" + std::to_string(a2) +
                         " exceeds grid " + std::to_string(n1) + "x" +
                         std::to_string(n2));

  SamplingMasks m;
  m.r1 = r1;
  m.r2 = r2;
  m.a1 = a1;
  m.a2 = a2;
  m.o1 = wrap_mod(offsets.first, r1);
  m.o2 = wrap_mod(offsets.second, r2);
  m.m_pattern = MaskGrid(n1, n2);
  m.m_acs = MaskGrid(n1, n2);
  m.m_sampled = MaskGrid(n1, n2);

  const int s1 = (n1 - a1) / 2;
  const int s2 = (n2 - a2) / 2;
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      bool pat = (i % r1 == m.o1) && (j % r2 == m.o2);
      bool acs = (a1 > 0 && a2 > 0) && (i >= s1 && i < s1 + a1) &&
                 (j >= s2 && j < s2 + a2);
      m.m_pattern.at(i, j) = pat ? 1 : 0;
      m.m_acs.at(i, j) = acs ? 1 : 0;
      m.m_sampled.at(i, j) = (pat || acs) ? 1 : 0;
    }
  }
  return m;
}

ComplexGrid apply_mask(const ComplexGrid& g, const MaskGrid& m) {
  if (m.n1 != g.n1 || m.n2 != g.n2)
    throw DimensionError("mask extents do not match grid PE extents");
  ComplexGrid out = g;
  for (int i = 0; i < g.n1; ++i) {
    for (int j = 0; j < g.n2; ++j) {
      if (m.on(i, j)) continue;
      for (int c = 0; c < g.channels; ++c)
        for (int f = 0; f < g.nf; ++f) out.at(c, f, i, j) = cdouble(0.0, 0.0);
    }
  }
  return out;
}

ComplexGrid crop_centered(const ComplexGrid& g, int k1, int k2) {
  check_crop(g.n1, g.n2, k1, k2);
  const int s1 = (g.n1 - k1) / 2;
  const int s2 = (g.n2 - k2) / 2;
  ComplexGrid out(g.channels, g.nf, k1, k2, g.domain);
  for (int c = 0; c < g.channels; ++c)
    for (int f = 0; f < g.nf; ++f)
      for (int i = 0; i < k1; ++i)
        for (int j = 0; j < k2; ++j)
          out.at(c, f, i, j) = g.at(c, f, s1 + i, s2 + j);
  return out;
}

MaskGrid crop_centered(const MaskGrid& m, int k1, int k2) {
  check_crop(m.n1, m.n2, k1, k2);
  const int s1 = (m.n1 - k1) / 2;
  const int s2 = (m.n2 - k2) / 2;
  MaskGrid out(k1, k2);
  for (int i = 0; i < k1; ++i)
    for (int j = 0; j < k2; ++j) out.at(i, j) = m.at(s1 + i, s2 + j);
  return out;
}

SamplingMasks crop_centered(const SamplingMasks& m, int k1, int k2) {
  const int n1 = m.m_sampled.n1, n2 = m.m_sampled.n2;
  check_crop(n1, n2, k1, k2);
  const int s1 = (n1 - k1) / 2;
  const int s2 = (n2 - k2) / 2;
  SamplingMasks out;
  out.m_sampled = crop_centered(m.m_sampled, k1, k2);
  out.m_pattern = crop_centered(m.m_pattern, k1, k2);
  out.m_acs = crop_centered(m.m_acs, k1, k2);
  out.r1 = m.r1;
  out.r2 = m.r2;
  out.o1 = wrap_mod(m.o1 - s1, m.r1);
  out.o2 = wrap_mod(m.o2 - s2, m.r2);
  // ACS overlap with the crop window stays contiguous.
  const int acs_s1 = (n1 - m.a1) / 2, acs_s2 = (n2 - m.a2) / 2;
  out.a1 = std::max(0, std::min(acs_s1 + m.a1, s1 + k1) - std::max(acs_s1, s1));
  out.a2 = std::max(0, std::min(acs_s2 + m.a2, s2 + k2) - std::max(acs_s2, s2));
  return out;
}

}  // namespace apir
