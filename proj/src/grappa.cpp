#include "apir/grappa.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>

namespace apir {

namespace {

int wrap_mod(int x, int m) { return ((x % m) + m) % m; }

// Tap ranges: centered for odd extents, one extra on the positive side for
// even ones. PE taps step by the acceleration factor, FE taps by one.
struct TapRange {
  int lo, hi;  // inclusive
};
TapRange taps(int k) { return {-(k - 1) / 2, k / 2}; }

struct Footprint {
  TapRange f, u, v;
};

Footprint footprint(const GrappaGeometry& g) {
  return {taps(g.k_fe), taps(g.k_pe1), taps(g.k_pe2)};
}

void check_geometry(const GrappaGeometry& g) {
  if (g.k_fe < 1 || g.k_pe1 < 1 || g.k_pe2 < 1)
    throw ValueError("kernel extents must be >= 1");
}

std::vector<std::pair<int, int>> unsampled_offsets(int r1, int r2) {
  std::vector<std::pair<int, int>> offs;
  for (int d1 = 0; d1 < r1; ++d1)
    for (int d2 = 0; d2 < r2; ++d2)
      if (d1 != 0 || d2 != 0) offs.emplace_back(d1, d2);
  return offs;
}

}  // namespace

GrappaKernel calibrate(const ComplexGrid& kspace, const SamplingMasks& masks,
                       const GrappaGeometry& geom, double lambda) {
  check_geometry(geom);
  if (masks.m_sampled.n1 != kspace.n1 || masks.m_sampled.n2 != kspace.n2)
    throw DimensionError("mask extents do not match grid PE extents");
  if (lambda < 0) throw ValueError("lambda must be >= 0");
  require_finite(kspace, "calibrate");

  GrappaKernel kern;
  kern.r1 = masks.r1;
  kern.r2 = masks.r2;
  kern.geom = geom;
  kern.lambda = lambda;
  kern.channels = kspace.channels;
  kern.offsets = unsampled_offsets(masks.r1, masks.r2);
  if (kern.offsets.empty()) return kern;  // no acceleration, nothing to fit

  // Conservative ACS requirement: one full PE source footprint per axis.
  const int need1 = masks.r1 * (geom.k_pe1 - 1) + 1;
  const int need2 = masks.r2 * (geom.k_pe2 - 1) + 1;
  if (masks.a1 < need1 || masks.a2 < need2)
    throw CalibrationError(
        "insufficient ACS " + std::to_string(masks.a1) + "x" +
        std::to_string(masks.a2) + ": kernel (" + std::to_string(geom.k_pe1) +
        "," + std::to_string(geom.k_pe2) + ") at accel (" +
        std::to_string(masks.r1) + "," + std::to_string(masks.r2) +
        ") needs at least " + std::to_string(need1) + "x" + std::to_string(need2));
  if (kspace.nf < geom.k_fe)
    throw CalibrationError("FE extent smaller than kernel FE footprint");

  const int C = kspace.channels;
  const int S = kern.source_count();
  const Footprint fp = footprint(geom);

  for (auto [d1, d2] : kern.offsets) {
    // Fitting rows: ACS targets of this cell offset whose source footprint
    // (pattern-lattice points around the base p0 = t - d) lies inside the grid.
    std::vector<std::array<int, 3>> rows;
    for (int f = 0; f < kspace.nf; ++f) {
      if (f + fp.f.lo < 0 || f + fp.f.hi >= kspace.nf) continue;
      for (int i = 0; i < kspace.n1; ++i) {
        if (wrap_mod(i - masks.o1, masks.r1) != d1) continue;
        int p1_lo = (i - d1) + fp.u.lo * masks.r1;
        int p1_hi = (i - d1) + fp.u.hi * masks.r1;
        if (p1_lo < 0 || p1_hi >= kspace.n1) continue;
        for (int j = 0; j < kspace.n2; ++j) {
          if (!masks.m_acs.on(i, j)) continue;
          if (wrap_mod(j - masks.o2, masks.r2) != d2) continue;
          int p2_lo = (j - d2) + fp.v.lo * masks.r2;
          int p2_hi = (j - d2) + fp.v.hi * masks.r2;
          if (p2_lo < 0 || p2_hi >= kspace.n2) continue;
          rows.push_back({f, i, j});
        }
      }
    }
    if (rows.empty())
      throw CalibrationError("no fitting rows for offset (" + std::to_string(d1) +
                             "," + std::to_string(d2) + ")");

    Eigen::MatrixXcd A(rows.size(), S), B(rows.size(), C);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto [f, i, j] = rows[r];
      int col = 0;
      for (int cs = 0; cs < C; ++cs)
        for (int w = fp.f.lo; w <= fp.f.hi; ++w)
          for (int u = fp.u.lo; u <= fp.u.hi; ++u)
            for (int v = fp.v.lo; v <= fp.v.hi; ++v)
              A(r, col++) = kspace.at(cs, f + w, (i - d1) + u * masks.r1,
                                      (j - d2) + v * masks.r2);
      for (int ct = 0; ct < C; ++ct) B(r, ct) = kspace.at(ct, f, i, j);
    }

    Eigen::MatrixXcd H = A.adjoint() * A;
    H.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(H);
    Eigen::VectorXd d = ldlt.vectorD().real();
    double dmax = d.maxCoeff();
    double dmin = d.minCoeff();
    if (ldlt.info() != Eigen::Success || dmax <= 0.0 || dmin < 1e-12 * dmax)
      throw CalibrationError(
          "rank-deficient calibration system for offset (" + std::to_string(d1) +
          "," + std::to_string(d2) + "); use lambda > 0");
    Eigen::MatrixXcd W = ldlt.solve(A.adjoint() * B);  // S x C

    std::vector<cdouble> wflat(std::size_t(C) * S);
    for (int ct = 0; ct < C; ++ct)
      for (int s = 0; s < S; ++s) wflat[std::size_t(ct) * S + s] = W(s, ct);
    kern.weights.push_back(std::move(wflat));
  }
  return kern;
}

ComplexGrid predict(const ComplexGrid& kspace, const SamplingMasks& masks,
                    const GrappaKernel& kernel) {
  if (masks.m_sampled.n1 != kspace.n1 || masks.m_sampled.n2 != kspace.n2)
    throw DimensionError("mask extents do not match grid PE extents");
  if (kernel.r1 != masks.r1 || kernel.r2 != masks.r2)
    throw DimensionError("kernel acceleration does not match masks");
  if (kernel.channels != 0 && kernel.channels != kspace.channels)
    throw DimensionError("kernel channel count does not match grid");

  ComplexGrid out = kspace;
  if (kernel.offsets.empty()) return out;

  const ComplexGrid pm = apply_mask(kspace, masks.m_pattern);
  const int C = kspace.channels;
  const int S = kernel.source_count();
  const Footprint fp = footprint(kernel.geom);

  // Source index table per offset: relative (fe, pe1, pe2) displacements from
  // the target, fetched from the pattern-masked grid with periodic wrap.
  for (std::size_t oi = 0; oi < kernel.offsets.size(); ++oi) {
    auto [d1, d2] = kernel.offsets[oi];
    const auto& W = kernel.weights[oi];
    std::vector<cdouble> src(S);
    for (int i = 0; i < kspace.n1; ++i) {
      if (wrap_mod(i - masks.o1, masks.r1) != d1) continue;
      for (int j = 0; j < kspace.n2; ++j) {
        if (wrap_mod(j - masks.o2, masks.r2) != d2) continue;
        for (int f = 0; f < kspace.nf; ++f) {
          int col = 0;
          for (int cs = 0; cs < C; ++cs)
            for (int w = fp.f.lo; w <= fp.f.hi; ++w)
              for (int u = fp.u.lo; u <= fp.u.hi; ++u)
                for (int v = fp.v.lo; v <= fp.v.hi; ++v)
                  src[col++] = pm.at(cs, wrap_mod(f + w, kspace.nf),
                                     wrap_mod((i - d1) + u * masks.r1, kspace.n1),
                                     wrap_mod((j - d2) + v * masks.r2, kspace.n2));
          for (int ct = 0; ct < C; ++ct) {
            cdouble acc(0.0, 0.0);
            const cdouble* wp = W.data() + std::size_t(ct) * S;
            for (int s = 0; s < S; ++s) acc += wp[s] * src[s];
            out.at(ct, f, i, j) = acc;
          }
        }
      }
    }
  }
  return out;
}

ComplexGrid merge(const ComplexGrid& kspace, const ComplexGrid& predicted,
                  const SamplingMasks& masks) {
  if (!kspace.same_shape(predicted))
    throw DimensionError("merge: grid extents differ");
  if (masks.m_sampled.n1 != kspace.n1 || masks.m_sampled.n2 != kspace.n2)
    throw DimensionError("mask extents do not match grid PE extents");
  ComplexGrid out = kspace;
  for (int i = 0; i < kspace.n1; ++i) {
    for (int j = 0; j < kspace.n2; ++j) {
      if (masks.m_sampled.on(i, j)) continue;
      for (int c = 0; c < kspace.channels; ++c)
        for (int f = 0; f < kspace.nf; ++f)
          out.at(c, f, i, j) = predicted.at(c, f, i, j);
    }
  }
  return out;
}

GrappaResult grappa_reconstruct(const ComplexGrid& kspace, const SamplingMasks& masks,
                                const GrappaGeometry& geom, double lambda) {
  auto [norm, rec] = normalize(kspace, masks.m_sampled);
  GrappaResult res;
  res.norm = rec;
  res.kernel = calibrate(norm, masks, geom, lambda);
  ComplexGrid pred = predict(norm, masks, res.kernel);
  pred = denormalize(pred, rec);
  res.kspace = merge(kspace, pred, masks);
  res.image = reconstruct_image(res.kspace);
  return res;
}

}  // namespace apir
