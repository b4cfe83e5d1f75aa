#include "apir/grid.hpp"

#include <cmath>
#include <string>

namespace apir {

void require_finite(const ComplexGrid& g, const char* what) {
  for (const auto& z : g.data) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw ValueError(std::string(what) + ": non-finite value in grid");
  }
}

void require_finite(const RealGrid& g, const char* what) {
  for (double v : g.data) {
    if (!std::isfinite(v))
      throw ValueError(std::string(what) + ": non-finite value in grid");
  }
}

}  // namespace apir
