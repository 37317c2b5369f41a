#include <cmath>
#include <cstddef>

#include "eit3d/kernels.hpp"

namespace eit3d::kern {

namespace {

void caxpy_s(double* out, const double* in, double ar, double ai, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double re = in[2 * i], im = in[2 * i + 1];
    out[2 * i] += ar * re - ai * im;
    out[2 * i + 1] += ar * im + ai * re;
  }
}

void phase_accum_s(double* out, std::size_t n, const double* th0, const double* dph,
                   const double* c_re, const double* c_im, std::size_t nmodes) {
  for (std::size_t j = 0; j < nmodes; ++j) {
    double zr = std::cos(th0[j]), zi = std::sin(th0[j]);
    const double sr = std::cos(dph[j]), si = std::sin(dph[j]);
    const double cr = c_re[j], ci = c_im[j];
    for (std::size_t i = 0; i < n; ++i) {
      out[2 * i] += cr * zr - ci * zi;
      out[2 * i + 1] += cr * zi + ci * zr;
      double t = zr * sr - zi * si;
      zi = zr * si + zi * sr;
      zr = t;
    }
  }
}

double dot_s(const double* a, const double* b, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double nrm2sq_s(const double* a, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy_s(double* y, const double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void zdotc_s(const double* a, const double* b, std::size_t n, double* out_re, double* out_im) {
  double sr = 0, si = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double ar = a[2 * i], ai = a[2 * i + 1];
    double br = b[2 * i], bi = b[2 * i + 1];
    sr += ar * br + ai * bi;
    si += ar * bi - ai * br;
  }
  *out_re = sr;
  *out_im = si;
}

}  // namespace

const Kernels& scalar() {
  static const Kernels k = {"scalar", caxpy_s, phase_accum_s, dot_s, nrm2sq_s, axpy_s, zdotc_s};
  return k;
}

}  // namespace eit3d::kern
