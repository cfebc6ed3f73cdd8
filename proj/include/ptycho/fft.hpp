#pragma once

#include "ptycho/grid.hpp"

namespace ptycho {

// Unitary 2D DFT of every (m, n) segment of a ptychograph: forward kernel
// exp(-2*pi*i*(m*u/M + n*v/N)) scaled by 1/sqrt(M*N), frequency origin at
// index (0, 0) (uncentered). ifft2_segments is the exact inverse.
// Throws std::invalid_argument on non-finite input.
ComplexGrid4D fft2_segments(const ComplexGrid4D& x);
ComplexGrid4D ifft2_segments(const ComplexGrid4D& x);

namespace detail {

// One unitary M x N transform, out-of-place; `in` and `out` must not alias.
// sign -1 = forward, +1 = inverse. No finiteness checks.
void dft2_unitary(const cplx* in, cplx* out, int m, int n, int sign);

}  // namespace detail

}  // namespace ptycho
