#include "apir/signal.hpp"

#include <algorithm>
#include <cmath>

#include "apir/dft.hpp"

namespace apir {

std::pair<ComplexGrid, NormalizationRecord> normalize(const ComplexGrid& g,
                                                      const MaskGrid& m_sampled) {
  if (m_sampled.n1 != g.n1 || m_sampled.n2 != g.n2)
    throw DimensionError("mask extents do not match grid PE extents");
  double max_mag = 0.0;
  bool any = false;
  for (int i = 0; i < g.n1; ++i) {
    for (int j = 0; j < g.n2; ++j) {
      if (!m_sampled.on(i, j)) continue;
      any = true;
      for (int c = 0; c < g.channels; ++c)
        for (int f = 0; f < g.nf; ++f)
          max_mag = std::max(max_mag, std::abs(g.at(c, f, i, j)));
    }
  }
  if (!any || max_mag == 0.0)
    throw ValueError("normalize: sampled data is empty or all zero");

  ComplexGrid out = g;
  for (auto& z : out.data) z /= max_mag;
  return {out, NormalizationRecord{max_mag}};
}

ComplexGrid denormalize(const ComplexGrid& g, const NormalizationRecord& rec) {
  if (rec.scale <= 0.0) throw ValueError("normalization scale must be positive");
  ComplexGrid out = g;
  for (auto& z : out.data) z *= rec.scale;
  return out;
}

RealGrid rms_combine(const ComplexGrid& img) {
  if (img.domain != Domain::image)
    throw ValueError("rms_combine expects an image-domain grid");
  RealGrid out(img.nf, img.n1, img.n2);
  const double inv_c = 1.0 / img.channels;
  for (int f = 0; f < img.nf; ++f) {
    for (int i = 0; i < img.n1; ++i) {
      for (int j = 0; j < img.n2; ++j) {
        double s = 0.0;
        for (int c = 0; c < img.channels; ++c) s += std::norm(img.at(c, f, i, j));
        out.at(f, i, j) = std::sqrt(s * inv_c);
      }
    }
  }
  return out;
}

RealGrid reconstruct_image(const ComplexGrid& kspace) {
  return rms_combine(dft_inverse(kspace));
}

double mse(const RealGrid& recon, const RealGrid& reference) {
  if (!recon.same_shape(reference))
    throw DimensionError("mse: grid extents differ");
  double s = 0.0;
  for (std::size_t k = 0; k < recon.data.size(); ++k) {
    double d = recon.data[k] - reference.data[k];
    s += d * d;
  }
  return s / double(recon.data.size());
}

double mse(const RealGrid& recon, const RealGrid& reference, const MaskGrid& region) {
  if (!recon.same_shape(reference))
    throw DimensionError("mse: grid extents differ");
  if (region.n1 != recon.n1 || region.n2 != recon.n2)
    throw DimensionError("mse: region extents differ");
  double s = 0.0;
  std::size_t n = 0;
  for (int f = 0; f < recon.nf; ++f) {
    for (int i = 0; i < recon.n1; ++i) {
      for (int j = 0; j < recon.n2; ++j) {
        if (!region.on(i, j)) continue;
        double d = recon.at(f, i, j) - reference.at(f, i, j);
        s += d * d;
        ++n;
      }
    }
  }
  if (n == 0) throw ValueError("mse: empty region");
  return s / double(n);
}

}  // namespace apir
