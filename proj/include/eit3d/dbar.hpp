#pragma once

#include <Eigen/Dense>
#include <complex>

#include "eit3d/dnmap.hpp"
#include "eit3d/geometry.hpp"
#include "eit3d/phantom.hpp"

namespace eit3d::dbar {

using cplx = std::complex<double>;
using geom::ElectrodeLayout;
using geom::Vec3;
using phantom::GridSpec;
using phantom::RadialLayers;
using phantom::VolumeGrid;

// Auxiliary frequency frame: zeta = -xi/2 + sqrt(kappa^2-|xi|^2/4) xi_perp
// + i kappa xi_perpperp, with zeta.zeta = 0 and (xi+zeta).(xi+zeta) = 0.
struct ZetaFrame {
  Vec3 xi;
  double kappa = 0;
  Vec3 xi_perp, xi_perpperp;
  Eigen::Vector3cd zeta;
};

// Deterministic null-space basis: xi_perp = normalize(e_min x xi) with e_min
// the coordinate axis least aligned with xi (lowest index on ties).
// Requires kappa >= |xi|/2 and xi != 0.
ZetaFrame zeta_from_xi(const Vec3& xi, double kappa);

// Scattering data on a symmetric Cartesian cube [-T,T]^3 with odd node
// counts per axis (Simpson parity); samples are identically 0 for |xi| > T.
struct FourierVolume {
  double T = 7.0;
  int n = 15;  // nodes per axis, odd
  std::vector<cplx> data;  // n^3, k fastest
  double coord(int i) const { return -T + 2.0 * T * i / (n - 1); }
  std::size_t flat(int i, int j, int k) const { return (std::size_t(i) * n + j) * n + k; }
};

struct TexpOptions {
  double T_xi = 7.0;
  int n_xi = 15;
  double kappa_mult = 1.0;   // kappa = kappa_mult * |xi|/2
  double weight = 1.0;       // surface weight per electrode in the quadratic form
};

// Born-approximate scattering transform from two discrete DN maps sharing the
// layout and pattern basis. Both maps must be gamma_best-scaled. t(0) = 0.
FourierVolume texp_volume(const dnmap::DiscreteDNMap& map_gamma,
                          const dnmap::DiscreteDNMap& map_ref, const ElectrodeLayout& layout,
                          const TexpOptions& opts);

// Continuum-data scattering transform for a radially layered admittivity,
// evaluated from the DN eigenvalues (no electrodes). Shares the grid/zeta
// conventions with texp_volume; used as its fidelity reference.
FourierVolume texp_analytic(const RadialLayers& layers, const TexpOptions& opts, int lmax = 45);

// q(x) = (2 pi)^-3 Simpson_[-T,T]^3 e^{i x.xi} t(xi) d xi on the target grid.
VolumeGrid inverse_fourier_cartesian(const FourierVolume& t, const GridSpec& xgrid);

struct ReconstructOptions {
  double radius = 1.0;
  double solver_tol = 1e-8;
  GridSpec output;  // final grid (default 128^3 over [-1,1]^3)
  ReconstructOptions() {
    output.n = {128, 128, 128};
    output.lo = {-1, -1, -1};
    output.hi = {1, 1, 1};
  }
};

// Schrodinger step: (-Laplace + q) u = 0, u|_boundary = 1, then
// sigma = gamma_best * u^2, resampled onto the output grid.
VolumeGrid reconstruct_dbar(const VolumeGrid& q_exp, cplx gamma_best,
                            const ReconstructOptions& opts = {});

// Linearized shortcut: sigma(x) = gamma_best*(1 - 2 (2 pi)^-3
// Simpson t(xi)/|xi|^2 e^{i x.xi} d xi); the xi=0 node contributes 0.
VolumeGrid reconstruct_texp_calderon(const FourierVolume& t, cplx gamma_best,
                                     const GridSpec& solver_grid,
                                     const ReconstructOptions& opts = {});

// Truncation-radius heuristic: largest T in [T_lo, T_hi] (step 1) whose
// spherical shell keeps max|t| <= blowup_factor * median|t|.
double auto_truncation_radius(const dnmap::DiscreteDNMap& map_gamma,
                              const dnmap::DiscreteDNMap& map_ref, const ElectrodeLayout& layout,
                              double T_lo, double T_hi, double kappa_mult = 1.0,
                              double blowup_factor = 10.0);

}  // namespace eit3d::dbar
