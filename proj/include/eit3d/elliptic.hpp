#pragma once

#include <complex>
#include <vector>

#include "eit3d/phantom.hpp"

namespace eit3d::elliptic {

using cplx = std::complex<double>;
using phantom::GridSpec;
using phantom::VolumeGrid;

struct SolveOptions {
  double tol = 1e-8;        // relative residual
  int max_iter_factor = 20; // max iterations = factor * n (n = nodes per axis)
  bool record_residuals = false;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0;                 // final relative residual
  std::vector<double> history;         // per-iteration, when recorded
};

// Conductivity equation div(gamma grad u) = 0 on the ball |x| <= radius with
// Neumann data given as injected current per boundary node (amperes; must sum
// to zero). Node-centered finite volumes with harmonic-mean face coefficients
// and an insulating staircase boundary. Returns the zero-mean potential on
// the grid (0 outside the ball). Jacobi-PCG for real gamma, BiCGStab for
// complex.
VolumeGrid solve_conductivity(const VolumeGrid& gamma, double radius,
                              const std::vector<cplx>& node_current,
                              const SolveOptions& opts = {}, SolveReport* report = nullptr);

// Schrodinger problem (-Laplace + q) u = 0 inside |x| < radius with u = 1 on
// the sphere, discretized with Shortley-Weller ghost interpolation at the
// embedded boundary. Returns u on the grid with u = 1 outside the ball.
VolumeGrid solve_schrodinger(const VolumeGrid& q, double radius,
                             const SolveOptions& opts = {}, SolveReport* report = nullptr);

// Apply the assembled conductivity operator to a full-grid vector (zeros
// outside the ball); test hook for symmetry/nullspace checks.
std::vector<cplx> apply_conductivity_operator(const VolumeGrid& gamma, double radius,
                                              const std::vector<cplx>& u);

// Active-node index map shared by forward synthesis (flux apportionment).
struct BallNodes {
  GridSpec spec;
  double radius = 1.0;
  std::vector<std::int32_t> id;    // flat node -> unknown id or -1
  std::vector<std::size_t> node;   // unknown id -> flat node
  int count = 0;
};
BallNodes ball_nodes(const GridSpec& spec, double radius);  // |x| < radius

}  // namespace eit3d::elliptic
