#include "sine_kernels.hpp"

#include <cmath>

// Built with vector math enabled (see CMakeLists.txt) so these loops map onto the C library's
// SIMD sin/cos where available; elsewhere they compile to the scalar calls.

namespace ginr::detail {

void sine_forward(const double* z, double* out, std::size_t n, double w) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(w * z[i]);
}

void sine_backward(const double* z, double* g, std::size_t n, double w) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) g[i] *= w * std::cos(w * z[i]);
}

}  // namespace ginr::detail
