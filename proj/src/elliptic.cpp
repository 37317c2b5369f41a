#include "eit3d/elliptic.hpp"

#include <cmath>
#include <cstring>

#include "eit3d/errors.hpp"
#include "eit3d/kernels.hpp"
#include "eit3d/parallel.hpp"

namespace eit3d::elliptic {

namespace {

const int kOff[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

// 7-band sparse operator on the active node set: A u = diag.u + sum band.u
struct BandedOp {
  const BallNodes* bn;
  std::vector<cplx> diag;                    // per unknown
  std::vector<std::array<std::int32_t, 6>> nbr;  // unknown ids or -1
  std::vector<std::array<cplx, 6>> coef;

  void apply(const cplx* x, cplx* y) const {
    const std::size_t n = diag.size();
    parallel_for(n, [&](std::size_t r) {
      cplx s = diag[r] * x[r];
      for (int d = 0; d < 6; ++d)
        if (nbr[r][d] >= 0) s += coef[r][d] * x[nbr[r][d]];
      y[r] = s;
    });
  }
};

double znorm(const std::vector<cplx>& v) {
  return std::sqrt(kern::active().nrm2sq(reinterpret_cast<const double*>(v.data()), 2 * v.size()));
}

cplx zdot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double re, im;
  kern::active().zdotc(reinterpret_cast<const double*>(a.data()),
                       reinterpret_cast<const double*>(b.data()), a.size(), &re, &im);
  return {re, im};
}

void zaxpy(std::vector<cplx>& y, const std::vector<cplx>& x, cplx a) {
  kern::active().caxpy(reinterpret_cast<double*>(y.data()),
                       reinterpret_cast<const double*>(x.data()), a.real(), a.imag(), y.size());
}

void project_mean(std::vector<cplx>& v) {
  cplx m(0);
  for (cplx x : v) m += x;
  m /= double(v.size());
  for (cplx& x : v) x -= m;
}

// Jacobi-preconditioned CG for Hermitian positive (semi)definite systems.
// project_constants removes the nullspace of the pure-Neumann operator.
SolveReport pcg(const BandedOp& A, const std::vector<cplx>& b, std::vector<cplx>& x,
                const SolveOptions& opts, bool project_constants) {
  const std::size_t n = b.size();
  SolveReport rep;
  std::vector<cplx> r = b, z(n), p(n), Ap(n);
  x.assign(n, cplx(0));
  if (project_constants) project_mean(r);
  const double bnorm = znorm(r);
  if (bnorm == 0) return rep;
  auto precond = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] / A.diag[i];
    if (project_constants) project_mean(out);
  };
  precond(r, z);
  p = z;
  cplx rz = zdot(r, z);
  const int max_iter = opts.max_iter_factor * std::max({A.bn->spec.n[0], A.bn->spec.n[1], A.bn->spec.n[2]});
  for (int it = 0; it < max_iter; ++it) {
    A.apply(p.data(), Ap.data());
    if (project_constants) project_mean(Ap);
    cplx pAp = zdot(p, Ap);
    if (pAp == cplx(0)) throw NumericalError("pcg: breakdown (pAp = 0)");
    cplx alpha = rz / pAp;
    zaxpy(x, p, alpha);
    zaxpy(r, Ap, -alpha);
    double rn = znorm(r) / bnorm;
    if (opts.record_residuals) rep.history.push_back(rn);
    rep.iterations = it + 1;
    rep.residual = rn;
    if (rn < opts.tol) return rep;
    precond(r, z);
    cplx rz_new = zdot(r, z);
    cplx beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw NumericalError("pcg: no convergence after " + std::to_string(rep.iterations) +
                       " iterations (residual " + std::to_string(rep.residual) + ")");
}

// Jacobi-preconditioned BiCGStab for general (complex, nonsymmetric) systems.
SolveReport bicgstab(const BandedOp& A, const std::vector<cplx>& b, std::vector<cplx>& x,
                     const SolveOptions& opts, bool project_constants) {
  const std::size_t n = b.size();
  SolveReport rep;
  std::vector<cplx> r = b, r0, p(n), v(n), s(n), t(n), ph(n), sh(n);
  x.assign(n, cplx(0));
  if (project_constants) project_mean(r);
  const double bnorm = znorm(r);
  if (bnorm == 0) return rep;
  r0 = r;
  cplx rho(1), alpha(1), omega(1);
  std::fill(p.begin(), p.end(), cplx(0));
  std::fill(v.begin(), v.end(), cplx(0));
  auto precond = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] / A.diag[i];
  };
  const int max_iter = opts.max_iter_factor * std::max({A.bn->spec.n[0], A.bn->spec.n[1], A.bn->spec.n[2]});
  for (int it = 0; it < max_iter; ++it) {
    cplx rho_new = zdot(r0, r);
    if (rho_new == cplx(0)) throw NumericalError("bicgstab: breakdown (rho = 0)");
    cplx beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    precond(p, ph);
    if (project_constants) project_mean(ph);
    A.apply(ph.data(), v.data());
    if (project_constants) project_mean(v);
    alpha = rho / zdot(r0, v);
    s = r;
    zaxpy(s, v, -alpha);
    if (znorm(s) / bnorm < opts.tol) {
      zaxpy(x, ph, alpha);
      rep.iterations = it + 1;
      rep.residual = znorm(s) / bnorm;
      return rep;
    }
    precond(s, sh);
    if (project_constants) project_mean(sh);
    A.apply(sh.data(), t.data());
    if (project_constants) project_mean(t);
    omega = zdot(t, s) / zdot(t, t);
    zaxpy(x, ph, alpha);
    zaxpy(x, sh, omega);
    r = s;
    zaxpy(r, t, -omega);
    double rn = znorm(r) / bnorm;
    if (opts.record_residuals) rep.history.push_back(rn);
    rep.iterations = it + 1;
    rep.residual = rn;
    if (rn < opts.tol) return rep;
    if (omega == cplx(0)) throw NumericalError("bicgstab: breakdown (omega = 0)");
  }
  throw NumericalError("bicgstab: no convergence after " + std::to_string(rep.iterations) +
                       " iterations (residual " + std::to_string(rep.residual) + ")");
}

bool is_real(const std::vector<cplx>& v) {
  for (cplx x : v)
    if (x.imag() != 0) return false;
  return true;
}

}  // namespace

namespace {
BandedOp assemble_conductivity(const VolumeGrid& gamma, double radius, const BallNodes& bn);
}  // namespace

std::vector<cplx> apply_conductivity_operator(const VolumeGrid& gamma, double radius,
                                              const std::vector<cplx>& u) {
  BallNodes bn = ball_nodes(gamma.spec, radius);
  BandedOp A = assemble_conductivity(gamma, radius, bn);
  std::vector<cplx> xin(bn.count), xout(bn.count);
  for (int r = 0; r < bn.count; ++r) xin[r] = u[bn.node[r]];
  A.apply(xin.data(), xout.data());
  std::vector<cplx> out(gamma.spec.size(), cplx(0));
  for (int r = 0; r < bn.count; ++r) out[bn.node[r]] = xout[r];
  return out;
}

BallNodes ball_nodes(const GridSpec& spec, double radius) {
  BallNodes bn;
  bn.spec = spec;
  bn.radius = radius;
  bn.id.assign(spec.size(), -1);
  const double r2 = radius * radius;
  for (int i = 0; i < spec.n[0]; ++i)
    for (int j = 0; j < spec.n[1]; ++j)
      for (int k = 0; k < spec.n[2]; ++k) {
        std::size_t f = spec.flat(i, j, k);
        if (spec.point(i, j, k).squaredNorm() < r2) {
          bn.id[f] = bn.count++;
          bn.node.push_back(f);
        }
      }
  return bn;
}

namespace {
BandedOp assemble_conductivity(const VolumeGrid& gamma, double radius, const BallNodes& bn) {
  (void)radius;
  const GridSpec& spec = gamma.spec;
  const double h = spec.step(0);
  const double inv_h2 = 1.0 / (h * h);
  BandedOp A;
  A.bn = &bn;
  A.diag.assign(bn.count, cplx(0));
  A.nbr.assign(bn.count, {-1, -1, -1, -1, -1, -1});
  A.coef.assign(bn.count, {});
  for (int r = 0; r < bn.count; ++r) {
    std::size_t f = bn.node[r];
    int i = int(f / (std::size_t(spec.n[1]) * spec.n[2]));
    int j = int((f / spec.n[2]) % spec.n[1]);
    int k = int(f % spec.n[2]);
    cplx gi = gamma.data[f];
    for (int d = 0; d < 6; ++d) {
      int ii = i + kOff[d][0], jj = j + kOff[d][1], kk = k + kOff[d][2];
      if (ii < 0 || jj < 0 || kk < 0 || ii >= spec.n[0] || jj >= spec.n[1] || kk >= spec.n[2])
        continue;
      std::size_t fn = spec.flat(ii, jj, kk);
      if (bn.id[fn] < 0) continue;  // insulating staircase face
      cplx gj = gamma.data[fn];
      cplx gf = 2.0 * gi * gj / (gi + gj);  // harmonic mean
      A.nbr[r][d] = bn.id[fn];
      A.coef[r][d] = -gf * inv_h2;
      A.diag[r] += gf * inv_h2;
    }
  }
  return A;
}
}  // namespace

VolumeGrid solve_conductivity(const VolumeGrid& gamma, double radius,
                              const std::vector<cplx>& node_current, const SolveOptions& opts,
                              SolveReport* report) {
  const GridSpec& spec = gamma.spec;
  if (node_current.size() != spec.size())
    throw ConfigError("solve_conductivity: node_current size mismatch");
  if (std::abs(spec.step(0) - spec.step(1)) > 1e-14 || std::abs(spec.step(0) - spec.step(2)) > 1e-14)
    throw ConfigError("solve_conductivity: grid must be isotropic");
  const double h = spec.step(0);
  BallNodes bn = ball_nodes(spec, radius);
  if (bn.count == 0) throw ConfigError("solve_conductivity: no active nodes");

  BandedOp A = assemble_conductivity(gamma, radius, bn);
  std::vector<cplx> b(bn.count, cplx(0));
  cplx total(0);
  for (int r = 0; r < bn.count; ++r) {
    b[r] = node_current[bn.node[r]] / (h * h * h);
    total += node_current[bn.node[r]];
  }
  double inmag = 0;
  for (const cplx& c : node_current) inmag = std::max(inmag, std::abs(c));
  if (std::abs(total) > 1e-9 * std::max(inmag, 1e-300) * bn.count)
    throw ConfigError("solve_conductivity: injected currents must sum to zero");

  std::vector<cplx> x;
  SolveReport rep = is_real(gamma.data) && is_real(node_current)
                        ? pcg(A, b, x, opts, true)
                        : bicgstab(A, b, x, opts, true);
  project_mean(x);
  if (report) *report = rep;

  VolumeGrid out;
  out.spec = spec;
  out.radius_domain = radius;
  out.data.assign(spec.size(), cplx(0));
  for (int r = 0; r < bn.count; ++r) out.data[bn.node[r]] = x[r];
  out.init_mask();
  return out;
}

VolumeGrid solve_schrodinger(const VolumeGrid& q, double radius, const SolveOptions& opts,
                             SolveReport* report) {
  const GridSpec& spec = q.spec;
  if (std::abs(spec.step(0) - spec.step(1)) > 1e-14 || std::abs(spec.step(0) - spec.step(2)) > 1e-14)
    throw ConfigError("solve_schrodinger: grid must be isotropic");
  const double h = spec.step(0);
  BallNodes bn = ball_nodes(spec, radius);
  if (bn.count == 0) throw ConfigError("solve_schrodinger: no active nodes");

  BandedOp A;
  A.bn = &bn;
  A.diag.assign(bn.count, cplx(0));
  A.nbr.assign(bn.count, {-1, -1, -1, -1, -1, -1});
  A.coef.assign(bn.count, {});
  std::vector<cplx> b(bn.count, cplx(0));
  const double inv_h2 = 1.0 / (h * h);
  const double r2 = radius * radius;
  constexpr double theta_min = 1e-3;  // Shortley-Weller arm clamp

  for (int r = 0; r < bn.count; ++r) {
    std::size_t f = bn.node[r];
    int i = int(f / (std::size_t(spec.n[1]) * spec.n[2]));
    int j = int((f / spec.n[2]) % spec.n[1]);
    int k = int(f % spec.n[2]);
    Eigen::Vector3d x = spec.point(i, j, k);
    // per axis: theta+ and theta- arm fractions (1 for regular arms)
    for (int axis = 0; axis < 3; ++axis) {
      double th[2] = {1.0, 1.0};
      int nb[2] = {-1, -1};
      for (int s = 0; s < 2; ++s) {
        int d = 2 * axis + s;  // + then -
        int ii = i + kOff[d][0], jj = j + kOff[d][1], kk = k + kOff[d][2];
        bool inside = ii >= 0 && jj >= 0 && kk >= 0 && ii < spec.n[0] && jj < spec.n[1] &&
                      kk < spec.n[2] && bn.id[spec.flat(ii, jj, kk)] >= 0;
        if (inside) {
          nb[s] = bn.id[spec.flat(ii, jj, kk)];
        } else {
          // boundary crossing along the arm: |x + t*e|^2 = radius^2
          double a = (s == 0) ? x[axis] : -x[axis];
          double disc = a * a + r2 - x.squaredNorm();
          double t = -a + std::sqrt(std::max(disc, 0.0));
          th[s] = std::max(t / h, theta_min);
        }
      }
      double tp = th[0], tm = th[1];
      A.diag[r] += 2.0 * inv_h2 / (tp * tm);
      for (int s = 0; s < 2; ++s) {
        double tt = (s == 0) ? tp : tm;
        double c = 2.0 * inv_h2 / (tt * (tp + tm));
        if (nb[s] >= 0) {
          A.nbr[r][2 * axis + s] = nb[s];
          A.coef[r][2 * axis + s] = -c;
        } else {
          b[r] += c * 1.0;  // Dirichlet value 1 at the boundary crossing
        }
      }
    }
    A.diag[r] += q.data[f];
  }

  std::vector<cplx> x;
  SolveReport rep = bicgstab(A, b, x, opts, false);
  if (report) *report = rep;

  VolumeGrid out;
  out.spec = spec;
  out.radius_domain = radius;
  out.data.assign(spec.size(), cplx(1.0));  // u = 1 on and outside the sphere
  for (int r = 0; r < bn.count; ++r) out.data[bn.node[r]] = x[r];
  out.init_mask();
  return out;
}

}  // namespace eit3d::elliptic
