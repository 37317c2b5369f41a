#include "eit3d/dbar.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "eit3d/elliptic.hpp"
#include "eit3d/errors.hpp"
#include "eit3d/forward.hpp"
#include "eit3d/kernels.hpp"
#include "eit3d/parallel.hpp"

namespace eit3d::dbar {

namespace {
constexpr double kPi = std::numbers::pi;

// Simpson weights on n (odd) nodes over an interval of half-width T
std::vector<double> simpson_weights(int n, double T) {
  if (n < 3 || n % 2 == 0) throw ConfigError("Simpson rule needs an odd node count >= 3");
  double h = 2.0 * T / (n - 1);
  std::vector<double> w(n, h / 3.0);
  for (int i = 1; i < n - 1; ++i) w[i] *= (i % 2) ? 4.0 : 2.0;
  return w;
}
}  // namespace

ZetaFrame zeta_from_xi(const Vec3& xi, double kappa) {
  const double n = xi.norm();
  if (n == 0) throw ConfigError("zeta_from_xi: xi must be nonzero");
  if (kappa < n / 2 * (1 - 1e-12)) throw ConfigError("zeta_from_xi: kappa < |xi|/2");
  ZetaFrame f;
  f.xi = xi;
  f.kappa = kappa;
  int amin = 0;
  double best = std::abs(xi[0]);
  for (int a = 1; a < 3; ++a)
    if (std::abs(xi[a]) < best) {
      best = std::abs(xi[a]);
      amin = a;
    }
  Vec3 e = Vec3::Zero();
  e[amin] = 1.0;
  f.xi_perp = e.cross(xi).normalized();
  f.xi_perpperp = (xi.cross(f.xi_perp)).normalized();
  double root = std::sqrt(std::max(0.0, kappa * kappa - n * n / 4.0));
  f.zeta = (-0.5 * xi + root * f.xi_perp).cast<cplx>() +
           cplx(0, 1) * kappa * f.xi_perpperp.cast<cplx>();
  return f;
}

namespace {

// shared evaluation core: t(xi) for one node given the sandwich matrix M
cplx texp_node(const Vec3& xi, double kappa_mult, double weight,
               const std::vector<Vec3>& positions, const Eigen::MatrixXcd& M) {
  ZetaFrame zf = zeta_from_xi(xi, kappa_mult * xi.norm() / 2.0);
  const int L = int(positions.size());
  Eigen::VectorXcd e1(L), e2(L);
  for (int e = 0; e < L; ++e) {
    cplx p1 = cplx(0, 1) * (positions[e].cast<cplx>().dot(zf.zeta));
    cplx p2 = cplx(0, -1) * (positions[e].cast<cplx>().dot(zf.zeta + xi.cast<cplx>()));
    e1[e] = std::exp(p1);
    e2[e] = std::exp(p2);
  }
  return weight * (e2.transpose() * (M * e1))(0);  // non-conjugate transpose
}

}  // namespace

FourierVolume texp_volume(const dnmap::DiscreteDNMap& map_gamma,
                          const dnmap::DiscreteDNMap& map_ref, const ElectrodeLayout& layout,
                          const TexpOptions& opts) {
  if (!map_gamma.scaled || !map_ref.scaled)
    throw ConfigError("texp_volume: DN maps must be gamma_best-scaled first");
  if (map_gamma.layout_hash != map_ref.layout_hash)
    throw ConfigError("texp_volume: DN maps come from different layouts");
  if (opts.n_xi < 3 || opts.n_xi % 2 == 0)
    throw ConfigError("texp_volume: n_xi must be odd and >= 3");

  const Eigen::MatrixXcd M =
      map_gamma.Q * (map_gamma.Lmat - map_ref.Lmat) * map_gamma.Q.transpose();
  std::vector<Vec3> pos(layout.L());
  for (int e = 0; e < layout.L(); ++e) pos[e] = layout.radius_domain * layout.centers[e];

  FourierVolume t;
  t.T = opts.T_xi;
  t.n = opts.n_xi;
  t.data.assign(std::size_t(t.n) * t.n * t.n, cplx(0));
  const int n = t.n;
  parallel_for(std::size_t(n) * n, [&](std::size_t ij) {
    int i = int(ij / n), j = int(ij % n);
    for (int k = 0; k < n; ++k) {
      Vec3 xi(t.coord(i), t.coord(j), t.coord(k));
      double r = xi.norm();
      if (r < 1e-12 || r > t.T) continue;  // t(0) = 0 and clipping
      t.data[t.flat(i, j, k)] = texp_node(xi, opts.kappa_mult, opts.weight, pos, M);
    }
  });
  return t;
}

FourierVolume texp_analytic(const RadialLayers& layers, const TexpOptions& opts, int lmax) {
  const Eigen::VectorXcd lam = forward::dn_eigenvalues(layers, lmax);
  Eigen::VectorXcd dl(lmax + 1);
  for (int l = 0; l <= lmax; ++l) dl[l] = lam[l] - double(l);

  FourierVolume t;
  t.T = opts.T_xi;
  t.n = opts.n_xi;
  t.data.assign(std::size_t(t.n) * t.n * t.n, cplx(0));
  const int n = t.n;
  parallel_for(std::size_t(n) * n, [&](std::size_t ij) {
    int i = int(ij / n), j = int(ij % n);
    for (int k = 0; k < n; ++k) {
      Vec3 xi(t.coord(i), t.coord(j), t.coord(k));
      double r = xi.norm();
      if (r < 1e-12 || r > t.T) continue;
      ZetaFrame zf = zeta_from_xi(xi, opts.kappa_mult * r / 2.0);
      // e^{-ix.(xi+zeta)} = e^{v1.x}, e^{ix.zeta} = e^{v2.x}; both null
      Eigen::Vector3cd v1 = cplx(0, -1) * (xi.cast<cplx>() + zf.zeta);
      Eigen::Vector3cd v2 = cplx(0, 1) * zf.zeta;
      auto c1 = geom::exp_null_coeffs(v1, lmax);
      auto c2 = geom::exp_null_coeffs(v2, lmax);
      cplx acc(0);
      for (int l = 1; l <= lmax; ++l) {
        if (std::abs(dl[l]) < 1e-300) continue;
        cplx s(0);
        for (int m = -l; m <= l; ++m) {
          double sgn = (m % 2) ? -1.0 : 1.0;
          // int e^{v1.x} Y_lm dS = (-1)^m c1(l,-m)
          s += sgn * c1.at(l, -m) * c2.at(l, m);
        }
        acc += s * dl[l];
      }
      t.data[t.flat(i, j, k)] = acc;
    }
  });
  return t;
}

namespace {

// One separable pass: out[(r, m)] += sum_j in[(j, r)] * E[(j, m)], complex.
// in: J x R (j slowest), E: J x M, out: R x M. Rotates the axes so three
// passes transform a cube.
void ft_pass(const std::vector<cplx>& in, int J, std::size_t R, const std::vector<cplx>& E, int M,
             std::vector<cplx>& out) {
  out.assign(R * M, cplx(0));
  const auto& K = kern::active();
  parallel_for(R, [&](std::size_t r) {
    double* orow = reinterpret_cast<double*>(out.data() + r * M);
    for (int j = 0; j < J; ++j) {
      cplx c = in[std::size_t(j) * R + r];
      if (c == cplx(0)) continue;
      K.caxpy(orow, reinterpret_cast<const double*>(E.data() + std::size_t(j) * M), c.real(),
              c.imag(), M);
    }
  });
}

VolumeGrid ift_cartesian(const FourierVolume& t, const GridSpec& xgrid,
                         const std::function<cplx(std::size_t, double)>& weight_fn) {
  const int n = t.n;
  std::vector<double> w = simpson_weights(n, t.T);
  std::vector<cplx> cur(t.data.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        std::size_t f = t.flat(i, j, k);
        Vec3 xi(t.coord(i), t.coord(j), t.coord(k));
        cur[f] = weight_fn(f, xi.norm()) * w[i] * w[j] * w[k];
      }
  // three passes, axes cycle (j1,j2,j3) -> (j2,j3,m1) -> (j3,m1,m2) -> (m1,m2,m3)
  std::vector<cplx> next;
  for (int axis = 0; axis < 3; ++axis) {
    const int M = xgrid.n[axis];
    std::vector<cplx> E(std::size_t(n) * M);
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < M; ++m) {
        double ph = xgrid.coord(axis, m) * t.coord(j);
        E[std::size_t(j) * M + m] = cplx(std::cos(ph), std::sin(ph));
      }
    std::size_t R = cur.size() / n;
    ft_pass(cur, n, R, E, M, next);
    cur.swap(next);
  }
  VolumeGrid out;
  out.spec = xgrid;
  out.radius_domain = 1.0;
  out.data.resize(xgrid.size());
  const double scale = 1.0 / std::pow(2.0 * kPi, 3);
  for (std::size_t i = 0; i < cur.size(); ++i) out.data[i] = scale * cur[i];
  out.init_mask();
  return out;
}

}  // namespace

VolumeGrid inverse_fourier_cartesian(const FourierVolume& t, const GridSpec& xgrid) {
  return ift_cartesian(t, xgrid, [&t](std::size_t f, double) { return t.data[f]; });
}

VolumeGrid reconstruct_dbar(const VolumeGrid& q_exp, cplx gamma_best,
                            const ReconstructOptions& opts) {
  elliptic::SolveOptions sopts;
  sopts.tol = opts.solver_tol;
  VolumeGrid u = elliptic::solve_schrodinger(q_exp, opts.radius, sopts);
  VolumeGrid sigma;
  sigma.spec = u.spec;
  sigma.radius_domain = opts.radius;
  sigma.data.resize(u.data.size());
  for (std::size_t i = 0; i < u.data.size(); ++i)
    sigma.data[i] = gamma_best * u.data[i] * u.data[i];
  sigma.init_mask();
  if (sigma.spec == opts.output) return sigma;
  return phantom::resample(sigma, opts.output);
}

VolumeGrid reconstruct_texp_calderon(const FourierVolume& t, cplx gamma_best,
                                     const GridSpec& solver_grid, const ReconstructOptions& opts) {
  VolumeGrid integral = ift_cartesian(t, solver_grid, [&t](std::size_t f, double r) {
    if (r < 1e-12) return cplx(0);  // |xi|=0 node excluded
    return t.data[f] / (r * r);
  });
  VolumeGrid sigma;
  sigma.spec = integral.spec;
  sigma.radius_domain = opts.radius;
  sigma.data.resize(integral.data.size());
  for (std::size_t i = 0; i < integral.data.size(); ++i)
    sigma.data[i] = gamma_best * (1.0 - 2.0 * integral.data[i]);
  sigma.init_mask();
  if (sigma.spec == opts.output) return sigma;
  return phantom::resample(sigma, opts.output);
}

double auto_truncation_radius(const dnmap::DiscreteDNMap& map_gamma,
                              const dnmap::DiscreteDNMap& map_ref, const ElectrodeLayout& layout,
                              double T_lo, double T_hi, double kappa_mult, double blowup_factor) {
  const Eigen::MatrixXcd M =
      map_gamma.Q * (map_gamma.Lmat - map_ref.Lmat) * map_gamma.Q.transpose();
  std::vector<Vec3> pos(layout.L());
  for (int e = 0; e < layout.L(); ++e) pos[e] = layout.radius_domain * layout.centers[e];
  // fixed shell directions (golden spiral)
  const int nd = 48;
  std::vector<Vec3> dirs;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < nd; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / nd;
    double r = std::sqrt(std::max(0.0, 1 - z * z));
    dirs.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
  }
  // grow T while the new shell's peak stays within blowup_factor of the
  // median magnitude accumulated over all accepted shells
  double best = T_lo;
  std::vector<double> accum;
  for (double T = T_lo; T <= T_hi + 1e-9; T += 1.0) {
    std::vector<double> mag(nd);
    for (int i = 0; i < nd; ++i)
      mag[i] = std::abs(texp_node(T * dirs[i], kappa_mult, 1.0, pos, M));
    double mx = *std::max_element(mag.begin(), mag.end());
    if (!accum.empty()) {
      std::vector<double> sorted = accum;
      std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
      double med = sorted[sorted.size() / 2];
      if (med > 0 && mx > blowup_factor * med) break;
    }
    best = T;
    accum.insert(accum.end(), mag.begin(), mag.end());
  }
  return best;
}

}  // namespace eit3d::dbar
