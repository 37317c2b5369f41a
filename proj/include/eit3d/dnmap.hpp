#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

#include "eit3d/forward.hpp"

namespace eit3d::dnmap {

using cplx = std::complex<double>;
using forward::VoltageMatrix;

// Discrete ND/DN maps in the orthonormalized pattern basis.
struct DiscreteDNMap {
  Eigen::MatrixXcd Q;     // L x K, orthonormal columns (from MGS of C)
  Eigen::MatrixXcd S;     // K x K upper triangular, C = Q S
  Eigen::MatrixXcd R;     // K x K ND matrix, R = V_synth^* Q
  Eigen::MatrixXcd Lmat;  // K x K DN matrix, R^{-1}
  cplx gamma_best{1.0, 0.0};
  bool scaled = false;
  std::uint64_t layout_hash = 0;
};

// Modified Gram-Schmidt, C = Q S. Throws NumericalError on rank deficiency
// (pivot below 1e-12 * ||C||).
void mgs(const Eigen::MatrixXd& C, Eigen::MatrixXcd& Q, Eigen::MatrixXcd& S);

// Subtract per-column means.
Eigen::MatrixXcd zero_mean_columns(const Eigen::MatrixXcd& V);

// V_synth = V S^{-1} by triangular solve.
Eigen::MatrixXcd change_basis(const Eigen::MatrixXcd& V, const Eigen::MatrixXcd& S);

// R = V_synth^* Q (conjugate transpose).
Eigen::MatrixXcd assemble_nd(const Eigen::MatrixXcd& V_synth, const Eigen::MatrixXcd& Q);

// Lmat = R^{-1} by partial-pivot LU; refuses when cond_1(R) > 1e12.
Eigen::MatrixXcd assemble_dn(const Eigen::MatrixXcd& R);

// Best constant admittivity fit: sum(U.*U) / sum(U.*V), plain products.
cplx gamma_best(const VoltageMatrix& reference, const VoltageMatrix& measured);

// Lmat <- Lmat / gamma_best; sets the scaled flag, refuses double scaling.
void scale_dn(DiscreteDNMap& map, cplx gb);

// Full assembly: zero-mean -> change basis -> ND -> DN (unscaled).
DiscreteDNMap build_map(const forward::CurrentPatternSet& patterns, const VoltageMatrix& v);

}  // namespace eit3d::dnmap
