#include "apir/dft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace apir {

namespace {

// FFTW planning is not thread-safe; plans are created once per (shape,
// direction) with FFTW_ESTIMATE (deterministic) and FFTW_UNALIGNED so they can
// execute on ordinary vector storage via the new-array interface.
std::mutex plan_mutex;

fftw_plan get_plan(int nf, int n1, int n2, int sign) {
  static std::map<std::tuple<int, int, int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto key = std::make_tuple(nf, n1, n2, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  std::size_t n = std::size_t(nf) * n1 * n2;
  std::vector<cdouble> a(n), b(n);
  auto* pa = reinterpret_cast<fftw_complex*>(a.data());
  auto* pb = reinterpret_cast<fftw_complex*>(b.data());
  fftw_plan plan = (nf == 1)
      ? fftw_plan_dft_2d(n1, n2, pa, pb, sign, FFTW_ESTIMATE | FFTW_UNALIGNED)
      : fftw_plan_dft_3d(nf, n1, n2, pa, pb, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache[key] = plan;
  return plan;
}

// pre=true is ifftshift (roll by -floor(n/2) per axis), pre=false is fftshift
// (roll by +floor(n/2)); composed around the raw FFT they center DC at
// floor(n/2) on every transformed axis.
void shift_copy(const cdouble* in, cdouble* out, int nf, int n1, int n2, bool pre) {
  const int sf = nf / 2, s1 = n1 / 2, s2 = n2 / 2;
  for (int f = 0; f < nf; ++f) {
    int f2 = pre ? (f - sf + nf) % nf : (f + sf) % nf;
    for (int i = 0; i < n1; ++i) {
      int i2 = pre ? (i - s1 + n1) % n1 : (i + s1) % n1;
      const cdouble* src = in + (std::size_t(f) * n1 + i) * n2;
      cdouble* dst = out + (std::size_t(f2) * n1 + i2) * n2;
      for (int j = 0; j < n2; ++j) {
        int j2 = pre ? (j - s2 + n2) % n2 : (j + s2) % n2;
        dst[j2] = src[j];
      }
    }
  }
}

ComplexGrid transform(const ComplexGrid& g, int sign, Domain out_domain) {
  require_finite(g, sign == FFTW_FORWARD ? "dft_forward" : "dft_inverse");
  fftw_plan plan = get_plan(g.nf, g.n1, g.n2, sign);
  const std::size_t plane = std::size_t(g.nf) * g.n1 * g.n2;
  const double scale = 1.0 / std::sqrt(double(plane));

  ComplexGrid out(g.channels, g.nf, g.n1, g.n2, out_domain);
  std::vector<cdouble> in_buf(plane), out_buf(plane);
  for (int c = 0; c < g.channels; ++c) {
    const cdouble* src = g.data.data() + c * plane;
    shift_copy(src, in_buf.data(), g.nf, g.n1, g.n2, true);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in_buf.data()),
                     reinterpret_cast<fftw_complex*>(out_buf.data()));
    shift_copy(out_buf.data(), out.data.data() + c * plane, g.nf, g.n1, g.n2, false);
    cdouble* dst = out.data.data() + c * plane;
    for (std::size_t k = 0; k < plane; ++k) dst[k] *= scale;
  }
  return out;
}

}  // namespace

ComplexGrid dft_forward(const ComplexGrid& g) {
  if (g.domain != Domain::image)
    throw ValueError("dft_forward expects an image-domain grid");
  return transform(g, FFTW_FORWARD, Domain::kspace);
}

ComplexGrid dft_inverse(const ComplexGrid& g) {
  if (g.domain != Domain::kspace)
    throw ValueError("dft_inverse expects a kspace-domain grid");
  return transform(g, FFTW_BACKWARD, Domain::image);
}

}  // namespace apir
