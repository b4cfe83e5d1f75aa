#pragma once

#include "apir/grid.hpp"

namespace apir {

// Centered unitary DFT per channel: fftshift(F(ifftshift(x))) / sqrt(N) with
// DC at index floor(n/2) on every transformed axis. 2D grids (nf == 1)
// transform over the PE plane; nf > 1 adds the FE axis as a 3D transform.
ComplexGrid dft_forward(const ComplexGrid& g);   // image -> kspace
ComplexGrid dft_inverse(const ComplexGrid& g);   // kspace -> image

}  // namespace apir
