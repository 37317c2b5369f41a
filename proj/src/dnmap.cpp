#include "eit3d/dnmap.hpp"

#include "eit3d/errors.hpp"

namespace eit3d::dnmap {

void mgs(const Eigen::MatrixXd& C, Eigen::MatrixXcd& Q, Eigen::MatrixXcd& S) {
  const int L = int(C.rows()), K = int(C.cols());
  const double scale = C.norm();
  Q = C.cast<cplx>();
  S = Eigen::MatrixXcd::Zero(K, K);
  for (int j = 0; j < K; ++j) {
    for (int i = 0; i < j; ++i) {
      cplx s = Q.col(i).dot(Q.col(j));  // conjugates the first argument
      S(i, j) = s;
      Q.col(j) -= s * Q.col(i);
    }
    double nrm = Q.col(j).norm();
    if (nrm <= 1e-12 * scale)
      throw NumericalError("mgs: rank-deficient pattern matrix at column " + std::to_string(j));
    S(j, j) = nrm;
    Q.col(j) /= nrm;
  }
  (void)L;
}

Eigen::MatrixXcd zero_mean_columns(const Eigen::MatrixXcd& V) {
  Eigen::MatrixXcd out = V;
  out.rowwise() -= V.colwise().mean();
  return out;
}

Eigen::MatrixXcd change_basis(const Eigen::MatrixXcd& V, const Eigen::MatrixXcd& S) {
  for (int j = 0; j < S.cols(); ++j)
    if (std::abs(S(j, j)) < 1e-300) throw NumericalError("change_basis: singular S");
  // V S^{-1}: solve S^T X^T = V^T with S^T lower triangular
  return S.transpose()
      .triangularView<Eigen::Lower>()
      .solve(V.transpose())
      .transpose();
}

Eigen::MatrixXcd assemble_nd(const Eigen::MatrixXcd& V_synth, const Eigen::MatrixXcd& Q) {
  if (V_synth.rows() != Q.rows() || V_synth.cols() != Q.cols())
    throw ConfigError("assemble_nd: dimension mismatch");
  return V_synth.adjoint() * Q;
}

Eigen::MatrixXcd assemble_dn(const Eigen::MatrixXcd& R) {
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(R);
  Eigen::MatrixXcd inv = lu.inverse();
  double cond = R.cwiseAbs().colwise().sum().maxCoeff() *
                inv.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm condition
  if (!std::isfinite(cond) || cond > 1e12)
    throw NumericalError("assemble_dn: ND matrix near-singular (cond_1 ~ " + std::to_string(cond) +
                         ")");
  return inv;
}

cplx gamma_best(const VoltageMatrix& reference, const VoltageMatrix& measured) {
  if (reference.V.rows() != measured.V.rows() || reference.V.cols() != measured.V.cols())
    throw ConfigError("gamma_best: shape mismatch");
  cplx num(0), den(0);
  for (int k = 0; k < reference.V.cols(); ++k)
    for (int e = 0; e < reference.V.rows(); ++e) {
      num += reference.V(e, k) * reference.V(e, k);  // plain products
      den += reference.V(e, k) * measured.V(e, k);
    }
  if (std::abs(den) < 1e-300) throw NumericalError("gamma_best: zero denominator");
  return num / den;
}

void scale_dn(DiscreteDNMap& map, cplx gb) {
  if (map.scaled) throw ConfigError("scale_dn: map already scaled");
  map.Lmat /= gb;
  map.R *= gb;
  map.gamma_best = gb;
  map.scaled = true;
}

DiscreteDNMap build_map(const forward::CurrentPatternSet& patterns, const VoltageMatrix& v) {
  if (patterns.L() != v.V.rows() || patterns.K() != v.V.cols())
    throw ConfigError("build_map: pattern/voltage shape mismatch");
  DiscreteDNMap m;
  mgs(patterns.C, m.Q, m.S);
  Eigen::MatrixXcd vz = zero_mean_columns(v.V);
  Eigen::MatrixXcd vs = change_basis(vz, m.S);
  m.R = assemble_nd(vs, m.Q);
  m.Lmat = assemble_dn(m.R);
  m.layout_hash = v.layout_hash;
  return m;
}

}  // namespace eit3d::dnmap
