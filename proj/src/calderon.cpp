#include "eit3d/calderon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "eit3d/errors.hpp"
#include "eit3d/forward.hpp"
#include "eit3d/kernels.hpp"
#include "eit3d/parallel.hpp"

namespace eit3d::calderon {

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<double> simpson_weights(int n, double len) {
  if (n < 3 || n % 2 == 0)
    throw ConfigError("SphericalZGrid: Simpson node counts must be odd and >= 3");
  double h = len / (n - 1);
  std::vector<double> w(n, h / 3.0);
  for (int i = 1; i < n - 1; ++i) w[i] *= (i % 2) ? 4.0 : 2.0;
  return w;
}
}  // namespace

Vec3 SphericalZGrid::zvec(int i, int j, int k) const {
  double rr = r(i), tt = theta(j), pp = phi(k);
  return Vec3(rr * std::cos(pp) * std::sin(tt), rr * std::sin(pp) * std::sin(tt),
              rr * std::cos(tt));
}

void SphericalZGrid::check_parity() const {
  if (nr < 3 || nr % 2 == 0 || nth < 3 || nth % 2 == 0 || nph < 3 || nph % 2 == 0)
    throw ConfigError("SphericalZGrid: node counts must be odd and >= 3 per axis");
}

ZAFrame za_frame(const Vec3& z) {
  const double n = z.norm();
  if (n == 0) throw ConfigError("za_frame: z must be nonzero");
  const double ct = std::clamp(z.z() / n, -1.0, 1.0);
  const double tt = std::acos(ct);
  const double pp = std::atan2(z.y(), z.x());
  ZAFrame f;
  f.z = z;
  f.a = n * Vec3(std::cos(pp) * std::cos(tt), std::sin(pp) * std::cos(tt), -std::sin(tt));
  f.a_perp = z.cross(f.a) / n;
  return f;
}

namespace {

// alternative weight: (min polar spacing * min azimuthal spacing) / A_e
double paper_weight_value(const ElectrodeLayout& layout) {
  const int L = layout.L();
  double dth = 2 * kPi, dph = 2 * kPi;
  std::vector<double> th(L), ph(L);
  for (int e = 0; e < L; ++e) {
    th[e] = std::acos(std::clamp(layout.centers[e].z(), -1.0, 1.0));
    ph[e] = std::atan2(layout.centers[e].y(), layout.centers[e].x());
  }
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j) {
      double a = std::abs(th[i] - th[j]);
      if (a > 1e-9) dth = std::min(dth, a);
      double b = std::abs(ph[i] - ph[j]);
      b = std::min(b, 2 * kPi - b);
      if (b > 1e-9) dph = std::min(dph, b);
    }
  return dth * dph / layout.cap_area();
}

}  // namespace

SphericalZGrid fhat_electrode(const dnmap::DiscreteDNMap& map_gamma,
                              const dnmap::DiscreteDNMap& map_ref, const ElectrodeLayout& layout,
                              const SphericalZGrid& grid_spec, const FhatOptions& opts) {
  if (!map_gamma.scaled || !map_ref.scaled)
    throw ConfigError("fhat_electrode: DN maps must be gamma_best-scaled first");
  if (map_gamma.layout_hash != map_ref.layout_hash)
    throw ConfigError("fhat_electrode: DN maps come from different layouts");
  if (std::abs(layout.radius_domain - 1.0) > 1e-12)
    throw ConfigError("fhat_electrode: spherical-parametrization path assumes unit domain radius");
  grid_spec.check_parity();

  const double w = opts.paper_weight ? paper_weight_value(layout) : opts.weight;
  const Eigen::MatrixXcd M =
      map_gamma.Q * (map_gamma.Lmat - map_ref.Lmat) * map_gamma.Q.transpose();
  const int L = layout.L();

  SphericalZGrid out = grid_spec;
  out.data.assign(std::size_t(out.nr) * out.nth * out.nph, cplx(0));
  parallel_for(std::size_t(out.nr) * out.nth, [&](std::size_t ij) {
    int i = int(ij / out.nth), j = int(ij % out.nth);
    if (i == 0) return;  // |z| = 0 stays 0
    Eigen::VectorXcd U1(L), U2(L);
    for (int k = 0; k < out.nph; ++k) {
      Vec3 z = out.zvec(i, j, k);
      ZAFrame fr = za_frame(z);
      cplx acc(0);
      for (int it = 1; it <= opts.n_theta; ++it) {
        double Theta = 2.0 * kPi * it / opts.n_theta;
        Vec3 wv = std::cos(Theta) * fr.a + std::sin(Theta) * fr.a_perp;
        for (int e = 0; e < L; ++e) {
          const Vec3& x = layout.centers[e];
          cplx expo1 = cplx(0, kPi * z.dot(x)) + kPi * wv.dot(x);
          cplx expo2 = cplx(0, kPi * z.dot(x)) - kPi * wv.dot(x);
          U1[e] = std::exp(expo1);
          U2[e] = std::exp(expo2);
        }
        acc += (U1.transpose() * (M * U2))(0);
      }
      acc *= w / double(opts.n_theta);
      double r2 = z.squaredNorm();
      out.data[out.flat(i, j, k)] = -acc / (2.0 * kPi * kPi * r2);
    }
  });
  return out;
}

SphericalZGrid fhat_analytic(const RadialLayers& layers, const SphericalZGrid& grid_spec,
                             int n_theta, int lmax) {
  grid_spec.check_parity();
  if (std::abs(layers.domain_radius() - 1.0) > 1e-12)
    throw ConfigError("fhat_analytic: unit domain radius required");
  const Eigen::VectorXcd lam = forward::dn_eigenvalues(layers, lmax);

  SphericalZGrid out = grid_spec;
  out.data.assign(std::size_t(out.nr) * out.nth * out.nph, cplx(0));

  // radially symmetric layers give direction-independent F; evaluate per |z|
  std::vector<cplx> Fr(out.nr, cplx(0));
  // tail monitor: magnitude of the last-l term relative to the sum
  double tail_ratio = 0;
  for (int i = 1; i < out.nr; ++i) {
    Vec3 z(0, 0, out.r(i));
    ZAFrame fr = za_frame(z);
    cplx acc(0);
    cplx last_term(0);
    for (int it = 1; it <= n_theta; ++it) {
      double Theta = 2.0 * kPi * it / n_theta;
      auto pair = geom::expand_exponentials(fr.z, fr.a, fr.a_perp, Theta, lmax);
      for (int l = 1; l <= lmax; ++l) {
        cplx dl = lam[l] - double(l);
        if (std::abs(dl) < 1e-300) continue;
        cplx s(0);
        for (int m = -l; m <= l; ++m) s += pair.a_star.at(l, m) * pair.b.at(l, m);
        acc += s * dl;
        if (l == lmax) last_term = s * dl;
      }
    }
    acc /= double(n_theta);
    Fr[i] = -acc / (2.0 * kPi * kPi * out.r(i) * out.r(i));
    if (std::abs(acc) > 0) tail_ratio = std::max(tail_ratio, std::abs(last_term) / std::abs(acc));
  }
  if (tail_ratio > 1e-8)
    std::fprintf(stderr,
                 "fhat_analytic: warning: bandlimit lmax=%d may be insufficient "
                 "(last-term share %.2e)\n",
                 lmax, tail_ratio);
  for (int i = 0; i < out.nr; ++i)
    for (int j = 0; j < out.nth; ++j)
      for (int k = 0; k < out.nph; ++k) out.data[out.flat(i, j, k)] = Fr[i];
  return out;
}

double mollifier_value(const Vec3& z, double t) {
  if (t < 0) throw ConfigError("mollifier_value: t must be >= 0");
  return std::exp(-kPi * t * z.squaredNorm());
}

VolumeGrid inverse_fourier_spherical(const SphericalZGrid& fhat, const GridSpec& xgrid) {
  fhat.check_parity();
  const std::vector<double> wr = simpson_weights(fhat.nr, fhat.Tz);
  const std::vector<double> wt = simpson_weights(fhat.nth, kPi);
  const std::vector<double> wp = simpson_weights(fhat.nph, 2.0 * kPi);

  // collect contributing modes: z vector and total complex weight
  struct Mode {
    Vec3 z;
    cplx c;
  };
  std::vector<Mode> modes;
  modes.reserve(fhat.data.size());
  for (int i = 1; i < fhat.nr; ++i)
    for (int j = 0; j < fhat.nth; ++j)
      for (int k = 0; k < fhat.nph; ++k) {
        cplx F = fhat.data[fhat.flat(i, j, k)];
        if (F == cplx(0)) continue;
        double rr = fhat.r(i), tt = fhat.theta(j);
        Vec3 z = fhat.zvec(i, j, k);
        double w = wr[i] * wt[j] * wp[k] * rr * rr * std::sin(tt) * mollifier_value(z, fhat.moll_t);
        if (w == 0) continue;
        modes.push_back({z, w * F});
      }

  VolumeGrid out;
  out.spec = xgrid;
  out.radius_domain = 1.0;
  out.data.assign(xgrid.size(), cplx(0));
  const std::size_t nm = modes.size();
  const auto& K = kern::active();
  // accumulate along the fastest axis (k / x3) with the rotation kernel
  const int n3 = xgrid.n[2];
  parallel_for(std::size_t(xgrid.n[0]) * xgrid.n[1], [&](std::size_t ij) {
    int i = int(ij / xgrid.n[1]), j = int(ij % xgrid.n[1]);
    std::vector<double> t0(nm), dp(nm), cr(nm), ci(nm);
    Vec3 x0 = xgrid.point(i, j, 0);
    for (std::size_t m = 0; m < nm; ++m) {
      t0[m] = -2.0 * kPi * x0.dot(modes[m].z);
      dp[m] = -2.0 * kPi * xgrid.step(2) * modes[m].z.z();
      cr[m] = modes[m].c.real();
      ci[m] = modes[m].c.imag();
    }
    K.phase_accum(reinterpret_cast<double*>(out.data.data() + xgrid.flat(i, j, 0)), n3, t0.data(),
                  dp.data(), cr.data(), ci.data(), nm);
  });
  out.init_mask();
  return out;
}

VolumeGrid reconstruct_calderon(const VolumeGrid& dsig, cplx gamma_best, const GridSpec& output) {
  VolumeGrid sigma = dsig;
  for (auto& v : sigma.data) v += gamma_best;
  if (sigma.spec == output) return sigma;
  return phantom::resample(sigma, output);
}

double auto_truncation_radius(const dnmap::DiscreteDNMap& map_gamma,
                              const dnmap::DiscreteDNMap& map_ref, const ElectrodeLayout& layout,
                              double T_lo, double T_hi, int n_theta, double blowup_factor) {
  const int nd = 24;
  double best = T_lo;
  std::vector<double> accum;
  for (double T = T_lo; T <= T_hi + 1e-9; T += 0.5) {
    SphericalZGrid shell;
    shell.Tz = T;
    shell.nr = 3;  // nodes at 0, T/2, T; we read the outer shell
    shell.nth = 3;
    shell.nph = nd + (nd % 2 ? 0 : 1);
    FhatOptions fo;
    fo.n_theta = n_theta;
    SphericalZGrid F = fhat_electrode(map_gamma, map_ref, layout, shell, fo);
    std::vector<double> mag;
    for (int j = 0; j < F.nth; ++j)
      for (int k = 0; k < F.nph; ++k) mag.push_back(std::abs(F.data[F.flat(F.nr - 1, j, k)]));
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

}  // namespace eit3d::calderon
