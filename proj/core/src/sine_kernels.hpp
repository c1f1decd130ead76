#pragma once

#include <cstddef>

namespace ginr::detail {

// out[i] = sin(w * z[i])
void sine_forward(const double* z, double* out, std::size_t n, double w);
// g[i] *= w * cos(w * z[i])
void sine_backward(const double* z, double* g, std::size_t n, double w);

}  // namespace ginr::detail
