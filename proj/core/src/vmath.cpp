#include "vmath.hpp"

#include <cmath>

#if defined(CDFEST_HAVE_LIBMVEC)
#include <emmintrin.h>

extern "C" {
__m128d _ZGVbN2v_tanh(__m128d);
__m128d _ZGVbN2v_exp(__m128d);
__m128d _ZGVbN2v_log(__m128d);
__m128d _ZGVbN2v_log1p(__m128d);
}
#endif

namespace cdfest::vmath {

namespace {

#if defined(CDFEST_HAVE_LIBMVEC)
// The odd tail goes through the same vector routine so a value's result never
// depends on its position in the array.
template <__m128d (*Fn)(__m128d)>
void apply(const double* in, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    _mm_storeu_pd(out + i, Fn(_mm_loadu_pd(in + i)));
  }
  if (i < n) {
    const __m128d r = Fn(_mm_set1_pd(in[i]));
    out[i] = _mm_cvtsd_f64(r);
  }
}
#endif

}  // namespace

bool vectorized() {
#if defined(CDFEST_HAVE_LIBMVEC)
  return true;
#else
  return false;
#endif
}

void tanh(const double* in, double* out, std::size_t n) {
#if defined(CDFEST_HAVE_LIBMVEC)
  apply<_ZGVbN2v_tanh>(in, out, n);
#else
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
#endif
}

void exp(const double* in, double* out, std::size_t n) {
#if defined(CDFEST_HAVE_LIBMVEC)
  apply<_ZGVbN2v_exp>(in, out, n);
#else
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(in[i]);
#endif
}

void log(const double* in, double* out, std::size_t n) {
#if defined(CDFEST_HAVE_LIBMVEC)
  apply<_ZGVbN2v_log>(in, out, n);
#else
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log(in[i]);
#endif
}

void log1p(const double* in, double* out, std::size_t n) {
#if defined(CDFEST_HAVE_LIBMVEC)
  apply<_ZGVbN2v_log1p>(in, out, n);
#else
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log1p(in[i]);
#endif
}

}  // namespace cdfest::vmath
