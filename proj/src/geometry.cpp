#include "eit3d/geometry.hpp"

#include <cmath>
#include <numbers>

#include "eit3d/errors.hpp"
#include "eit3d/rng.hpp"

namespace eit3d::geom {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;
}  // namespace

double ElectrodeLayout::cap_area(bool exact_spherical) const {
  if (exact_spherical)
    return 2.0 * kPi * radius_domain * radius_domain * (1.0 - std::cos(cap_angle()));
  return kPi * radius_electrode * radius_electrode;
}

std::uint64_t ElectrodeLayout::hash() const {
  std::uint64_t h = fnv1a(&radius_domain, sizeof(double));
  h = fnv1a(&radius_electrode, sizeof(double), h);
  for (const auto& c : centers) h = fnv1a(c.data(), 3 * sizeof(double), h);
  return h;
}

ElectrodeLayout place_electrodes(int L, double r_domain, double r_elec) {
  if (L < 2) throw ConfigError("place_electrodes: L must be >= 2");
  if (r_domain <= 0 || r_elec <= 0) throw ConfigError("place_electrodes: radii must be positive");

  ElectrodeLayout lay;
  lay.radius_domain = r_domain;
  lay.radius_electrode = r_elec;
  lay.centers.reserve(L);
  if (L == 2) {
    lay.centers.push_back(Vec3(0, 0, 1));
    lay.centers.push_back(Vec3(0, 0, -1));
  } else {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < L; ++i) {
      double z = 1.0 - 2.0 * i / (L - 1.0);  // pole-inclusive spiral
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double phi = golden * i;
      lay.centers.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
  }

  // disjointness: great-circle distance between centers must exceed 2*cap angle
  const double min_sep = 2.0 * lay.cap_angle();
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j) {
      double d = std::acos(std::clamp(lay.centers[i].dot(lay.centers[j]), -1.0, 1.0));
      if (d <= min_sep)
        throw ConfigError("place_electrodes: electrode caps overlap (r_elec too large for L)");
    }
  return lay;
}

Vec3 SphereQuadrature::direction(std::size_t node) const {
  std::size_t it = node / phi.size(), ip = node % phi.size();
  double st = std::sin(theta[it]);
  return Vec3(st * std::cos(phi[ip]), st * std::sin(phi[ip]), std::cos(theta[it]));
}

SphereQuadrature dh_quadrature(int bandlimit) {
  if (bandlimit < 0) throw ConfigError("dh_quadrature: bandlimit must be >= 0");
  const int B = bandlimit + 1;
  SphereQuadrature q;
  q.bandlimit = bandlimit;
  q.theta.resize(2 * B);
  q.phi.resize(2 * B);
  q.wtheta.resize(2 * B);
  q.wphi = 2.0 * kPi / (2 * B);
  for (int j = 0; j < 2 * B; ++j) {
    q.theta[j] = kPi * (2 * j + 1) / (4.0 * B);
    double s = 0;
    for (int l = 0; l < B; ++l) s += std::sin((2 * l + 1) * q.theta[j]) / (2 * l + 1);
    q.wtheta[j] = (2.0 / B) * std::sin(q.theta[j]) * s;
  }
  for (int k = 0; k < 2 * B; ++k) q.phi[k] = q.wphi * k;
  return q;
}

LegendreTable legendre_normalized(int lmax, double x) {
  LegendreTable t;
  t.lmax = lmax;
  t.v.resize((lmax + 1) * (lmax + 2) / 2);
  const double sx = std::sqrt(std::max(0.0, 1.0 - x * x));
  t.v[0] = 1.0 / std::sqrt(kFourPi);
  for (int m = 1; m <= lmax; ++m)
    t.v[LegendreTable::index(m, m)] =
        -std::sqrt((2.0 * m + 1) / (2.0 * m)) * sx * t.v[LegendreTable::index(m - 1, m - 1)];
  for (int m = 0; m < lmax; ++m)
    t.v[LegendreTable::index(m + 1, m)] =
        std::sqrt(2.0 * m + 3) * x * t.v[LegendreTable::index(m, m)];
  for (int m = 0; m <= lmax; ++m)
    for (int l = m + 2; l <= lmax; ++l) {
      double a = std::sqrt((4.0 * l * l - 1) / (double(l) * l - double(m) * m));
      double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) /
                           (4.0 * double(l - 1) * (l - 1) - 1));
      t.v[LegendreTable::index(l, m)] =
          a * (x * t.v[LegendreTable::index(l - 1, m)] - b * t.v[LegendreTable::index(l - 2, m)]);
    }
  return t;
}

void sph_harm_row(int lmax, const Vec3& dir, std::vector<cplx>& out) {
  out.assign((lmax + 1) * (lmax + 1), cplx(0));
  const double ct = std::clamp(dir.z() / dir.norm(), -1.0, 1.0);
  const double phi = std::atan2(dir.y(), dir.x());
  LegendreTable t = legendre_normalized(lmax, ct);
  for (int m = 0; m <= lmax; ++m) {
    cplx e(std::cos(m * phi), std::sin(m * phi));
    double sgn = (m % 2) ? -1.0 : 1.0;
    for (int l = m; l <= lmax; ++l) {
      cplx y = t.at(l, m) * e;
      out[SphericalHarmonicField::index(l, m)] = y;
      if (m) out[SphericalHarmonicField::index(l, -m)] = sgn * std::conj(y);
    }
  }
}

SphericalHarmonicField sh_analyze(const std::vector<cplx>& samples,
                                  const SphereQuadrature& quad, int lmax) {
  if (quad.bandlimit < lmax)
    throw ConfigError("sh_analyze: quadrature bandlimit below requested lmax");
  const std::size_t nth = quad.theta.size(), nph = quad.phi.size();
  if (samples.size() != nth * nph) throw ConfigError("sh_analyze: sample count mismatch");

  SphericalHarmonicField f;
  f.lmax = lmax;
  f.coeff = Eigen::VectorXcd::Zero((lmax + 1) * (lmax + 1));

  // per-row azimuthal DFT: g[it][m] = sum_ip samples * exp(-i m phi), |m|<=lmax
  std::vector<cplx> g(nth * (2 * lmax + 1));
  for (std::size_t it = 0; it < nth; ++it)
    for (int m = -lmax; m <= lmax; ++m) {
      cplx s(0);
      for (std::size_t ip = 0; ip < nph; ++ip) {
        double ang = -m * quad.phi[ip];
        s += samples[it * nph + ip] * cplx(std::cos(ang), std::sin(ang));
      }
      g[it * (2 * lmax + 1) + (m + lmax)] = s;
    }
  // Legendre contraction: c_{lm} = sum_it w_it * conj(P̄ e^{imphi}) aggregated
  for (std::size_t it = 0; it < nth; ++it) {
    LegendreTable t = legendre_normalized(lmax, std::cos(quad.theta[it]));
    double w = quad.wtheta[it] * quad.wphi;
    for (int m = -lmax; m <= lmax; ++m) {
      cplx gm = g[it * (2 * lmax + 1) + (m + lmax)];
      int am = std::abs(m);
      double sgn = (m < 0 && (am % 2)) ? -1.0 : 1.0;  // P̄ for |m|, conj handles sign
      for (int l = am; l <= lmax; ++l)
        f.coeff[SphericalHarmonicField::index(l, m)] += w * sgn * t.at(l, am) * gm;
    }
  }
  return f;
}

std::vector<cplx> sh_synthesize(const SphericalHarmonicField& f,
                                const std::vector<Vec3>& directions) {
  std::vector<cplx> out(directions.size());
  std::vector<cplx> row;
  for (std::size_t i = 0; i < directions.size(); ++i) {
    sph_harm_row(f.lmax, directions[i], row);
    cplx s(0);
    for (int k = 0; k < f.coeff.size(); ++k) s += f.coeff[k] * row[k];
    out[i] = s;
  }
  return out;
}

namespace {

// Null solid harmonics S_{lm}(u) for u.u = 0: the r^2 terms of the standard
// recurrences vanish, leaving a diagonal recursion in l.
void null_solid_harmonics(const CVec3& u, int lmax, Eigen::MatrixXcd& S) {
  S.setZero(lmax + 1, 2 * lmax + 1);  // S(l, m+lmax)
  S(0, lmax) = 1.0 / std::sqrt(kFourPi);
  for (int l = 1; l <= lmax; ++l) {
    S(l, lmax + l) = -std::sqrt((2.0 * l + 1) / (2.0 * l)) * (u(0) + cplx(0, 1) * u(1)) *
                     S(l - 1, lmax + l - 1);
    S(l, lmax - l) = std::sqrt((2.0 * l + 1) / (2.0 * l)) * (u(0) - cplx(0, 1) * u(1)) *
                     S(l - 1, lmax - (l - 1));
    for (int m = -(l - 1); m <= l - 1; ++m) {
      double a = std::sqrt((4.0 * l * l - 1) / (double(l) * l - double(m) * m));
      S(l, lmax + m) = a * u(2) * S(l - 1, lmax + m);
    }
  }
}

}  // namespace

SphericalHarmonicField exp_null_coeffs(const CVec3& v, int lmax) {
  SphericalHarmonicField f;
  f.lmax = lmax;
  f.coeff = Eigen::VectorXcd::Zero((lmax + 1) * (lmax + 1));

  const Vec3 re = v.real();
  const double tau = re.norm();
  if (tau < 1e-300) {
    f.coeff[0] = std::sqrt(kFourPi);
    return f;
  }
  const CVec3 u = v / tau;
  Eigen::MatrixXcd S;
  null_solid_harmonics(u, lmax, S);

  // c_{lm} = 4*pi / (2l+1)!! * tau^l * (-1)^m * S_{l,-m}(u)
  double dfact = 1.0, tl = 1.0;
  for (int l = 0; l <= lmax; ++l) {
    if (l > 0) {
      dfact *= (2.0 * l + 1);
      tl *= tau;
    }
    double scale = kFourPi / dfact * tl;
    for (int m = -l; m <= l; ++m) {
      double sgn = (m % 2) ? -1.0 : 1.0;
      f.coeff[SphericalHarmonicField::index(l, m)] = scale * sgn * S(l, lmax - m);
    }
  }
  return f;
}

ExpCoeffPair expand_exponentials(const Vec3& z, const Vec3& a, const Vec3& a_perp,
                                 double Theta, int lmax) {
  const double n = z.norm();
  const double tol = 1e-10 * (1.0 + n * n);
  if (std::abs(a.norm() - n) > tol || std::abs(a_perp.norm() - n) > tol ||
      std::abs(z.dot(a)) > tol || std::abs(z.dot(a_perp)) > tol || std::abs(a.dot(a_perp)) > tol)
    throw ConfigError("expand_exponentials: z, a, a_perp must be mutually orthogonal with equal norms");

  const Vec3 w = std::cos(Theta) * a + std::sin(Theta) * a_perp;
  const CVec3 v1 = kPi * (w.cast<cplx>() + cplx(0, 1) * z.cast<cplx>());
  const CVec3 v2 = kPi * (-w.cast<cplx>() + cplx(0, 1) * z.cast<cplx>());

  ExpCoeffPair out;
  out.b = exp_null_coeffs(v2, lmax);
  // a_star(l,m) = int U1 Y_lm dS = (-1)^m c_{l,-m}(v1)
  SphericalHarmonicField c1 = exp_null_coeffs(v1, lmax);
  out.a_star.lmax = lmax;
  out.a_star.coeff = Eigen::VectorXcd::Zero((lmax + 1) * (lmax + 1));
  for (int l = 0; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) {
      double sgn = (m % 2) ? -1.0 : 1.0;
      out.a_star.at(l, m) = sgn * c1.at(l, -m);
    }
  return out;
}

}  // namespace eit3d::geom
