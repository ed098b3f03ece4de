#pragma once

#include <cstddef>

// Elementwise transcendental kernels over contiguous arrays. Backed by glibc's
// libmvec two-lane SSE2 variants when available, std:: scalar functions
// otherwise. `in` and `out` may alias.
namespace cdfest::vmath {

void tanh(const double* in, double* out, std::size_t n);
void exp(const double* in, double* out, std::size_t n);
void log(const double* in, double* out, std::size_t n);
void log1p(const double* in, double* out, std::size_t n);

bool vectorized();

}  // namespace cdfest::vmath
