#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>

#include "eit3d/dnmap.hpp"
#include "eit3d/geometry.hpp"
#include "eit3d/phantom.hpp"

namespace eit3d::calderon {

using cplx = std::complex<double>;
using geom::ElectrodeLayout;
using geom::Vec3;
using phantom::GridSpec;
using phantom::RadialLayers;
using phantom::VolumeGrid;

// Frame (z, a, a_perp) from the spherical parametrization
//   z = |z| (cos fp sin ft, sin fp sin ft, cos ft)
//   a = |z| (cos fp cos ft, sin fp cos ft, -sin ft),  a_perp = (z x a)/|z|.
struct ZAFrame {
  Vec3 z, a, a_perp;
};
ZAFrame za_frame(const Vec3& z);

// Fourier-domain samples F(z) on the spherical product grid
// |z| in [0,Tz] x theta~ in [0,pi] x phi~ in [0,2pi], Simpson nodes per axis
// (odd counts). F is stored 0 at |z| = 0.
struct SphericalZGrid {
  double Tz = 2.7;
  int nr = 11, nth = 9, nph = 15;  // node counts (odd)
  double moll_t = 0.1;             // mollifier parameter
  std::vector<cplx> data;          // nr*nth*nph, phi fastest
  double r(int i) const { return Tz * i / (nr - 1); }
  double theta(int j) const { return std::numbers::pi * j / (nth - 1); }
  double phi(int k) const { return 2.0 * std::numbers::pi * k / (nph - 1); }
  Vec3 zvec(int i, int j, int k) const;
  std::size_t flat(int i, int j, int k) const { return (std::size_t(i) * nth + j) * nph + k; }
  void check_parity() const;
};

struct FhatOptions {
  int n_theta = 30;     // Theta-average sample count
  double weight = 1.0;  // per-electrode surface weight in the boundary form
  bool paper_weight = false;  // use dphi*dtheta/A_e instead (fidelity flag)
};

// Theta-averaged boundary integral from electrode DN maps:
// F(z) = -1/(2 pi^2 |z|^2) avg_Theta U1^T Q (L_gamma - L_ref) Q^T U2.
// Maps must be gamma_best-scaled and share the layout. Unit domain radius.
SphericalZGrid fhat_electrode(const dnmap::DiscreteDNMap& map_gamma,
                              const dnmap::DiscreteDNMap& map_ref, const ElectrodeLayout& layout,
                              const SphericalZGrid& grid_spec, const FhatOptions& opts = {});

// Analytic F for a radially layered admittivity from the DN eigenvalues:
// F(z) = -1/(2 pi^2 |z|^2) avg_Theta sum_lm a*_lm b_lm [lambda_l - l].
SphericalZGrid fhat_analytic(const RadialLayers& layers, const SphericalZGrid& grid_spec,
                             int n_theta = 30, int lmax = 50);

// Gaussian mollifier e^{-pi t |z|^2}.
double mollifier_value(const Vec3& z, double t);

// Truncated mollified spherical inverse transform:
// dsig(x) = Simpson |z|^2 sin(theta~) F(z) e^{-pi t |z|^2} e^{-2 pi i x.z}.
VolumeGrid inverse_fourier_spherical(const SphericalZGrid& fhat, const GridSpec& xgrid);

// sigma = gamma_best + dsig, resampled onto the output grid.
VolumeGrid reconstruct_calderon(const VolumeGrid& dsig, cplx gamma_best, const GridSpec& output);

// Shell heuristic analogous to dbar::auto_truncation_radius, on |F| shells.
double auto_truncation_radius(const dnmap::DiscreteDNMap& map_gamma,
                              const dnmap::DiscreteDNMap& map_ref, const ElectrodeLayout& layout,
                              double T_lo, double T_hi, int n_theta = 30,
                              double blowup_factor = 10.0);

}  // namespace eit3d::calderon
