#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace eit3d::geom {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

// Electrode caps on a sphere. Centers are stored as unit vectors; physical
// positions are radius_domain * center.
struct ElectrodeLayout {
  double radius_domain = 1.0;   // m
  double radius_electrode = 0.05;  // m, geodesic cap radius
  std::vector<Vec3> centers;    // unit vectors

  int L() const { return static_cast<int>(centers.size()); }
  // cap angular radius (radians on the unit sphere)
  double cap_angle() const { return radius_electrode / radius_domain; }
  // flat-disk cap area; exact spherical-cap area behind the flag
  double cap_area(bool exact_spherical = false) const;
  std::uint64_t hash() const;
};

// Quasi-uniform golden-angle spiral placement. Deterministic; L=2 gives the
// poles. Throws ConfigError when the caps cannot be pairwise disjoint.
ElectrodeLayout place_electrodes(int L, double r_domain, double r_elec);

// Bandlimited field on the sphere: f = sum c_{lm} Y_l^m, l<=lmax.
// Packed index: l*(l+1)+m.
struct SphericalHarmonicField {
  int lmax = 0;
  Eigen::VectorXcd coeff;  // size (lmax+1)^2

  static int index(int l, int m) { return l * (l + 1) + m; }
  cplx& at(int l, int m) { return coeff[index(l, m)]; }
  cplx at(int l, int m) const { return coeff[index(l, m)]; }
};

// Equiangular Driscoll-Healy product grid with exact bandlimited weights:
// 2B x 2B nodes for B = bandlimit+1, sum of weights = 4*pi, exact for
// integrands of degree <= 2*bandlimit+1.
struct SphereQuadrature {
  int bandlimit = 0;
  std::vector<double> theta;     // 2B colatitudes
  std::vector<double> phi;       // 2B azimuths
  std::vector<double> wtheta;    // per-row weights a_j (sum = 2)
  double wphi = 0;               // uniform azimuth weight
  // node ordering: (i_theta * nphi + i_phi); weight = wtheta[i]*wphi
  std::size_t size() const { return theta.size() * phi.size(); }
  Vec3 direction(std::size_t node) const;
  double weight(std::size_t node) const { return wtheta[node / phi.size()] * wphi; }
};

SphereQuadrature dh_quadrature(int bandlimit);

// Fully-normalized associated Legendre values P̄_l^m(cos theta) for all
// 0<=m<=l<=lmax, packed row-major by (l,m), m<=l. Y_l^m = P̄_l^m e^{im phi},
// Y_l^{-m} = (-1)^m conj(Y_l^m).
struct LegendreTable {
  int lmax;
  std::vector<double> v;  // size (lmax+1)(lmax+2)/2
  static int index(int l, int m) { return l * (l + 1) / 2 + m; }
  double at(int l, int m) const { return v[index(l, m)]; }
};
LegendreTable legendre_normalized(int lmax, double cos_theta);

// Evaluate Y_l^m for all (l,m) up to lmax at one direction.
void sph_harm_row(int lmax, const Vec3& dir, std::vector<cplx>& out);

// Forward transform: samples on the quadrature grid -> coefficients.
// Requires quad.bandlimit >= lmax.
SphericalHarmonicField sh_analyze(const std::vector<cplx>& samples,
                                  const SphereQuadrature& quad, int lmax);

// Pointwise synthesis at arbitrary unit directions.
std::vector<cplx> sh_synthesize(const SphericalHarmonicField& f,
                                const std::vector<Vec3>& directions);

// Coefficients of e^{v.x} on the unit sphere for an isotropic (null) complex
// vector v (v.v = 0), in the Y basis: e^{v.x} = sum c_{lm} Y_l^m. Exact
// closed form via null solid harmonics; cost O(lmax^2).
SphericalHarmonicField exp_null_coeffs(const CVec3& v, int lmax);

// Expansion coefficients of the Calderon exponentials
//   U1 = exp(pi*i z.x + pi*(cos(Theta) a + sin(Theta) a_perp).x)
//   U2 = exp(pi*i z.x - pi*(cos(Theta) a + sin(Theta) a_perp).x)
// a_star(l,m) = int U1 Y_lm dS (U1 in the conj(Y) basis), b(l,m) = Y-basis
// coefficient of U2, matching the pairing sum_lm a_star*b*[lambda_l - l].
// Preconditions: |z|=|a|=|a_perp| and mutual orthogonality within 1e-10.
struct ExpCoeffPair {
  SphericalHarmonicField a_star;
  SphericalHarmonicField b;
};
ExpCoeffPair expand_exponentials(const Vec3& z, const Vec3& a, const Vec3& a_perp,
                                 double Theta, int lmax);

}  // namespace eit3d::geom
