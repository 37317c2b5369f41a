#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "eit3d/geometry.hpp"
#include "eit3d/phantom.hpp"

namespace eit3d::forward {

using cplx = std::complex<double>;
using geom::ElectrodeLayout;
using phantom::GridSpec;
using phantom::Phantom;
using phantom::RadialLayers;
using phantom::VolumeGrid;

// Applied current patterns, one column per injection (amperes).
struct CurrentPatternSet {
  Eigen::MatrixXd C;   // L x K
  int skip = 0;
  double amplitude = 1e-3;
  int L() const { return int(C.rows()); }
  int K() const { return int(C.cols()); }
};

// Electrode voltages for a pattern set (volts), plus provenance metadata.
struct VoltageMatrix {
  Eigen::MatrixXcd V;  // L x K
  std::uint64_t layout_hash = 0;
  int skip = 0;
  double amplitude = 1e-3;
  double eta = 0.0;          // noise level actually applied
  std::uint64_t seed = 0;
  bool is_reference = false; // homogeneous gamma=1 reference data
};

// Pairwise injection: pattern k drives +amplitude on electrode k and
// -amplitude on electrode k+skip+1 (mod L), k = 1..K with
// K = L - gcd(L, skip+1). K < L-1 (a degenerate protocol) is allowed but
// reported through the optional warning string.
CurrentPatternSet pairwise_patterns(int L, int skip, double amplitude = 1e-3,
                                    std::string* warning = nullptr);

// DN eigenvalues of a radially layered conductivity on the ball of radius
// radii.back() (Prop.-3.6-style recursion, complex layers allowed):
// lambda_0 = 0 and for l >= 1 the closed recursion over C_j, rho_j,
// beta_l = (l+1)/l, w_j = r_j^-(2l+1), scaled by the outermost value and the
// domain radius. Throws NumericalError on the sigma_{j+1} rho_j = sigma_j
// degeneracy (perturb a layer value to avoid it).
Eigen::VectorXcd dn_eigenvalues(const RadialLayers& layers, int lmax);

// Zonal cap smoothing factors: beta[l] = (cap mean of Y_l over a cap of
// angular radius alpha) / Y_l(center) = 2*pi*I_l/A_cap with
// I_l = (P_{l-1} - P_{l+1})(cos alpha)/(2l+1); beta[0] = 1.
std::vector<double> cap_smoothing(int lmax, double alpha);

struct RadialForwardOptions {
  int lmax_kernel = 4000;  // spherical-harmonic order of the transfer kernel
};

// Gap-model voltages for a radially layered admittivity: the cap flux is
// expanded in spherical harmonics (exact zonal coefficients), divided by the
// DN eigenvalues, and cap-averaged back, which resums into the L x L
// electrode transfer kernel
//   K(e,e') = sum_l beta_l^2 (2l+1) P_l(c_e.c_e') / (4 pi r lambda_l A-ratio)
// evaluated by Legendre recursion. Voltages are grounded to column mean zero.
VoltageMatrix synth_voltages_radial(const RadialLayers& layers, const ElectrodeLayout& layout,
                                    const CurrentPatternSet& patterns,
                                    const RadialForwardOptions& opts = {});

// The same electrode transfer kernel, exposed for tests and reuse.
Eigen::MatrixXcd radial_transfer_kernel(const RadialLayers& layers, const ElectrodeLayout& layout,
                                        int lmax_kernel);

struct FDForwardOptions {
  int grid_n = 64;            // solver nodes per axis over the bounding cube
  int surface_samples = 200000;  // flux apportionment resolution
  double tol = 1e-8;
};

// Gap-model voltages for a general phantom via the finite-difference
// conductivity solver. Cap fluxes are apportioned onto boundary nodes from a
// dense, deterministic surface sampling; the voltage readout reuses the same
// weights (cap mean), which keeps the synthesized transfer matrix reciprocal.
VoltageMatrix synth_voltages_general(const Phantom& p, const ElectrodeLayout& layout,
                                     const CurrentPatternSet& patterns,
                                     const FDForwardOptions& opts = {});

// Relative-mean Gaussian noise, fresh per pattern: V_j += eta*mean(|V_j|)*N_j.
// Complex data receives independent draws on the real and imaginary parts.
// Deterministic in (seed, pattern index, electrode index).
VoltageMatrix add_noise(const VoltageMatrix& v, double eta, std::uint64_t seed);

}  // namespace eit3d::forward
