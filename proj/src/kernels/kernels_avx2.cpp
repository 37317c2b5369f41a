// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a runtime CPUID check (see kernels_dispatch.cpp).
#include <cstddef>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#include <cmath>

#include "eit3d/kernels.hpp"

namespace eit3d::kern {

namespace {

// complex multiply of interleaved pairs: v * (ar + I*ai)
inline __m256d cmul_scalar(__m256d v, __m256d ar, __m256d ai) {
  __m256d sw = _mm256_permute_pd(v, 0x5);  // swap re<->im per pair
  return _mm256_addsub_pd(_mm256_mul_pd(v, ar), _mm256_mul_pd(sw, ai));
}

// elementwise complex multiply of two interleaved vectors
inline __m256d cmul(__m256d a, __m256d b) {
  __m256d ar = _mm256_movedup_pd(a);                 // [a.re, a.re]
  __m256d aiv = _mm256_permute_pd(a, 0xF);           // [a.im, a.im]
  __m256d bsw = _mm256_permute_pd(b, 0x5);
  return _mm256_addsub_pd(_mm256_mul_pd(ar, b), _mm256_mul_pd(aiv, bsw));
}

void caxpy_v(double* out, const double* in, double ar, double ai, std::size_t n) {
  const __m256d var = _mm256_set1_pd(ar);
  const __m256d vai = _mm256_set1_pd(ai);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d v = _mm256_loadu_pd(in + 2 * i);
    __m256d o = _mm256_loadu_pd(out + 2 * i);
    _mm256_storeu_pd(out + 2 * i, _mm256_add_pd(o, cmul_scalar(v, var, vai)));
  }
  for (; i < n; ++i) {
    double re = in[2 * i], im = in[2 * i + 1];
    out[2 * i] += ar * re - ai * im;
    out[2 * i + 1] += ar * im + ai * re;
  }
}

void phase_accum_v(double* out, std::size_t n, const double* th0, const double* dph,
                   const double* c_re, const double* c_im, std::size_t nmodes) {
  for (std::size_t j = 0; j < nmodes; ++j) {
    const double cr = c_re[j], ci = c_im[j];
    // two complex lanes: z, z*step; advance both by step^2
    double zr0 = std::cos(th0[j]), zi0 = std::sin(th0[j]);
    double sr = std::cos(dph[j]), si = std::sin(dph[j]);
    double zr1 = zr0 * sr - zi0 * si, zi1 = zr0 * si + zi0 * sr;
    double s2r = sr * sr - si * si, s2i = 2 * sr * si;
    __m256d z = _mm256_setr_pd(zr0, zi0, zr1, zi1);
    const __m256d step = _mm256_setr_pd(s2r, s2i, s2r, s2i);
    const __m256d vcr = _mm256_set1_pd(cr);
    const __m256d vci = _mm256_set1_pd(ci);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
      __m256d o = _mm256_loadu_pd(out + 2 * i);
      _mm256_storeu_pd(out + 2 * i, _mm256_add_pd(o, cmul_scalar(z, vcr, vci)));
      z = cmul(z, step);
    }
    if (i < n) {
      alignas(32) double lane[4];
      _mm256_store_pd(lane, z);
      out[2 * i] += cr * lane[0] - ci * lane[1];
      out[2 * i + 1] += cr * lane[1] + ci * lane[0];
    }
  }
}

double dot_v(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double s = lane[0] + lane[1] + lane[2] + lane[3];
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double nrm2sq_v(const double* a, std::size_t n) { return dot_v(a, a, n); }

void axpy_v(double* y, const double* x, double a, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void zdotc_v(const double* a, const double* b, std::size_t n, double* out_re, double* out_im) {
  __m256d accr = _mm256_setzero_pd();  // ar*br + ai*bi per slot pair
  __m256d acci = _mm256_setzero_pd();  // ar*bi - ai*br
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d va = _mm256_loadu_pd(a + 2 * i);
    __m256d vb = _mm256_loadu_pd(b + 2 * i);
    accr = _mm256_fmadd_pd(va, vb, accr);
    __m256d bsw = _mm256_permute_pd(vb, 0x5);  // [bi, br]
    acci = _mm256_add_pd(acci, _mm256_mul_pd(va, bsw));
  }
  alignas(32) double lr[4], li[4];
  _mm256_store_pd(lr, accr);
  _mm256_store_pd(li, acci);
  double sr = lr[0] + lr[1] + lr[2] + lr[3];
  double si = (li[0] - li[1]) + (li[2] - li[3]);  // ar*bi - ai*br
  for (; i < n; ++i) {
    double ar = a[2 * i], ai = a[2 * i + 1];
    double br = b[2 * i], bi = b[2 * i + 1];
    sr += ar * br + ai * bi;
    si += ar * bi - ai * br;
  }
  *out_re = sr;
  *out_im = si;
}

}  // namespace

const Kernels& avx2_impl() {
  static const Kernels k = {"avx2", caxpy_v, phase_accum_v, dot_v, nrm2sq_v, axpy_v, zdotc_v};
  return k;
}

}  // namespace eit3d::kern

#endif  // x86_64
