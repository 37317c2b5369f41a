#pragma once

#include <cstddef>

namespace eit3d::kern {

// Hot inner loops of the Fourier transforms and Krylov solvers. Complex
// arrays are interleaved [re,im] doubles (std::complex<double> layout).
//
// Two implementations ship: a scalar reference and an AVX2+FMA variant.
// Dispatch is decided once at first use from CPUID, overridable with the
// EIT3D_SIMD environment variable (auto|scalar|avx2). Both variants run the
// same arithmetic in the same order up to lane grouping and are
// equivalence-tested against each other and against a direct-evaluation
// oracle in tests/test_kernels.cpp.
struct Kernels {
  const char* name;

  // out[i] += a * in[i]  (complex, n complex elements)
  void (*caxpy)(double* out, const double* in, double a_re, double a_im, std::size_t n);

  // For each mode j: out[i] += c_j * exp(I*(th0_j + i*dph_j)), i in [0,n).
  // Evaluated by complex rotation recurrence along i (out complex, length n).
  void (*phase_accum)(double* out, std::size_t n, const double* th0, const double* dph,
                      const double* c_re, const double* c_im, std::size_t nmodes);

  // real BLAS-1
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*nrm2sq)(const double* a, std::size_t n);
  void (*axpy)(double* y, const double* x, double a, std::size_t n);

  // complex: sum conj(a_i)*b_i (interleaved, n complex elements)
  void (*zdotc)(const double* a, const double* b, std::size_t n, double* out_re, double* out_im);
};

const Kernels& active();
const Kernels& scalar();
bool avx2_available();

// Force a specific implementation ("scalar", "avx2", "auto"); throws
// ConfigError for unknown names or if avx2 is requested but unavailable.
void select(const char* name);

}  // namespace eit3d::kern
