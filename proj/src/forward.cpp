#include "eit3d/forward.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "eit3d/elliptic.hpp"
#include "eit3d/errors.hpp"
#include "eit3d/parallel.hpp"
#include "eit3d/rng.hpp"

namespace eit3d::forward {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;
}  // namespace

CurrentPatternSet pairwise_patterns(int L, int skip, double amplitude, std::string* warning) {
  if (L < 2) throw ConfigError("pairwise_patterns: L must be >= 2");
  if (skip < 0 || skip >= L) throw ConfigError("pairwise_patterns: skip out of range");
  const int g = std::gcd(L, skip + 1);
  const int K = L - g;
  if (g != 1 && warning)
    *warning = "skip-" + std::to_string(skip) + " protocol on L=" + std::to_string(L) +
               " is degenerate: only " + std::to_string(K) + " independent patterns (L-gcd)";
  CurrentPatternSet ps;
  ps.skip = skip;
  ps.amplitude = amplitude;
  ps.C = Eigen::MatrixXd::Zero(L, K);
  for (int k = 0; k < K; ++k) {
    ps.C(k, k) = amplitude;
    ps.C((k + skip + 1) % L, k) = -amplitude;
  }
  return ps;
}

Eigen::VectorXcd dn_eigenvalues(const RadialLayers& layers_in, int lmax) {
  layers_in.validate();
  // merge adjacent identical layers; else the recursion hits 0/0
  RadialLayers layers;
  layers.radii.push_back(0.0);
  for (std::size_t j = 0; j < layers_in.values.size(); ++j) {
    if (!layers.values.empty() && layers.values.back() == layers_in.values[j])
      layers.radii.back() = layers_in.radii[j + 1];
    else {
      layers.values.push_back(layers_in.values[j]);
      layers.radii.push_back(layers_in.radii[j + 1]);
    }
  }
  const int N = int(layers.values.size());
  const double R = layers.domain_radius();
  const cplx sigN = layers.values.back();
  // normalized interface radii r_j/R, j = 1..N-1
  std::vector<double> r(N - 1);
  for (int j = 0; j < N - 1; ++j) r[j] = layers.radii[j + 1] / R;
  std::vector<cplx> s(N);
  for (int j = 0; j < N; ++j) s[j] = layers.values[j] / sigN;

  Eigen::VectorXcd lam(lmax + 1);
  lam[0] = 0.0;
  for (int l = 1; l <= lmax; ++l) {
    cplx lam_norm;
    if (N == 1) {
      lam_norm = double(l);
    } else {
      const double beta = double(l + 1) / l;
      // D_j = C_j / w_j stays O(1); w ratios (r_j/r_{j+1})^(2l+1) stay in (0,1)
      cplx rho = 1.0;
      cplx D;
      for (int j = 0; j < N - 1; ++j) {
        if (j > 0) {
          double wr = std::pow(r[j - 1] / r[j], 2 * l + 1);
          rho = (D + wr) / (D - beta * wr);
        }
        cplx den = s[j + 1] * rho - s[j];
        if (std::abs(den) < 1e-300)
          throw NumericalError(
              "dn_eigenvalues: degenerate interface (sigma_{j+1} rho_j = sigma_j); perturb a "
              "layer value");
        D = (beta * s[j + 1] * rho + s[j]) / den;
      }
      // 1/(1+C_{N-1}) = t/(t+D) with t = r_{N-1}^(2l+1) (underflows safely)
      double t = std::pow(r[N - 2], 2 * l + 1);
      lam_norm = double(l) - double(2 * l + 1) * t / (t + D);
    }
    lam[l] = sigN * lam_norm / R;
  }
  return lam;
}

std::vector<double> cap_smoothing(int lmax, double alpha) {
  std::vector<double> beta(lmax + 1, 1.0);
  const double c = std::cos(alpha);
  const double area = 2.0 * kPi * (1.0 - c);
  // Legendre values at cos(alpha) up to lmax+1
  std::vector<double> P(lmax + 2);
  P[0] = 1.0;
  if (lmax + 1 >= 1) P[1] = c;
  for (int l = 1; l <= lmax; ++l) P[l + 1] = ((2 * l + 1) * c * P[l] - l * P[l - 1]) / (l + 1);
  for (int l = 1; l <= lmax; ++l) {
    double Il = (P[l - 1] - P[l + 1]) / (2 * l + 1);
    beta[l] = 2.0 * kPi * Il / area;
  }
  return beta;
}

Eigen::MatrixXcd radial_transfer_kernel(const RadialLayers& layers, const ElectrodeLayout& layout,
                                        int lmax_kernel) {
  if (std::abs(layers.domain_radius() - layout.radius_domain) > 1e-12)
    throw ConfigError("radial_transfer_kernel: layer and layout domain radii differ");
  const int L = layout.L();
  const Eigen::VectorXcd lam = dn_eigenvalues(layers, lmax_kernel);
  const std::vector<double> beta = cap_smoothing(lmax_kernel, layout.cap_angle());
  const double r2 = layout.radius_domain * layout.radius_domain;

  // series coefficient per l; beta^2 handles both injection and cap-mean readout
  Eigen::VectorXcd coef(lmax_kernel + 1);
  coef[0] = 0.0;
  for (int l = 1; l <= lmax_kernel; ++l)
    coef[l] = beta[l] * beta[l] * double(2 * l + 1) / (kFourPi * r2 * lam[l]);

  Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(L, L);
  parallel_for(L, [&](std::size_t e) {
    for (int f = int(e); f < L; ++f) {
      double t = std::clamp(layout.centers[e].dot(layout.centers[f]), -1.0, 1.0);
      // Legendre recursion fused with the series sum
      double Pm1 = 1.0, P0 = t;
      cplx acc = coef[1] * P0;
      for (int l = 1; l < lmax_kernel; ++l) {
        double P1 = ((2 * l + 1) * t * P0 - l * Pm1) / (l + 1);
        acc += coef[l + 1] * P1;
        Pm1 = P0;
        P0 = P1;
      }
      K(e, f) = acc;
    }
  });
  for (int e = 0; e < L; ++e)
    for (int f = 0; f < int(e); ++f) K(e, f) = K(f, e);
  return K;
}

namespace {
VoltageMatrix ground_and_pack(Eigen::MatrixXcd V, const ElectrodeLayout& layout,
                              const CurrentPatternSet& patterns) {
  V.rowwise() -= V.colwise().mean();  // per-pattern zero-mean grounding
  VoltageMatrix out;
  out.V = std::move(V);
  out.layout_hash = layout.hash();
  out.skip = patterns.skip;
  out.amplitude = patterns.amplitude;
  return out;
}
}  // namespace

VoltageMatrix synth_voltages_radial(const RadialLayers& layers, const ElectrodeLayout& layout,
                                    const CurrentPatternSet& patterns,
                                    const RadialForwardOptions& opts) {
  if (patterns.L() != layout.L())
    throw ConfigError("synth_voltages_radial: pattern/layout electrode count mismatch");
  Eigen::MatrixXcd K = radial_transfer_kernel(layers, layout, opts.lmax_kernel);
  return ground_and_pack(K * patterns.C, layout, patterns);
}

namespace {

// Deterministic surface sampling: each cap's area-uniform sample points are
// pulled one cell inward and spread over the surrounding interior nodes with
// trilinear weights; per-electrode weights sum to the cap area. Using the
// same weights for injection and readout keeps the transfer matrix exactly
// reciprocal.
struct CapWeights {
  std::vector<std::vector<std::pair<int, double>>> per_electrode;  // (unknown id, weight)
  double cap_area = 0;
};

CapWeights apportion_caps(const ElectrodeLayout& layout, const elliptic::BallNodes& bn,
                          int surface_samples) {
  const int L = layout.L();
  const double R = layout.radius_domain;
  const double alpha = layout.cap_angle();
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  const GridSpec& spec = bn.spec;
  const double h = spec.step(0);

  CapWeights cw;
  cw.per_electrode.resize(L);
  // per-cap spiral sampling (area-uniform on the spherical cap)
  int ns = std::max(64, surface_samples / std::max(L, 1));
  const double dA = 2.0 * kPi * R * R * (1.0 - std::cos(alpha)) / ns;
  cw.cap_area = ns * dA;
  for (int e = 0; e < L; ++e) {
    // local frame at the cap center
    Eigen::Vector3d n = layout.centers[e];
    Eigen::Vector3d t1 = n.cross(std::abs(n.z()) < 0.9 ? Eigen::Vector3d(0, 0, 1)
                                                       : Eigen::Vector3d(1, 0, 0))
                             .normalized();
    Eigen::Vector3d t2 = n.cross(t1);
    std::vector<std::pair<int, double>>& acc = cw.per_electrode[e];
    auto add = [&](int id, double w) {
      for (auto& [nid, ww] : acc)
        if (nid == id) {
          ww += w;
          return;
        }
      acc.emplace_back(id, w);
    };
    for (int s = 0; s < ns; ++s) {
      double ct = 1.0 - (s + 0.5) / ns * (1.0 - std::cos(alpha));
      double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      double ph = golden * s;
      Eigen::Vector3d dir = ct * n + st * (std::cos(ph) * t1 + std::sin(ph) * t2);
      // trilinear weights in the surface cell, renormalized over the interior
      // corners; pull inward only when no corner is interior
      bool placed = false;
      for (double depth = 0.0; depth < 32 && !placed; depth += 0.5) {
        Eigen::Vector3d p = dir * (R - depth * h);
        int c[3];
        double f[3];
        bool in_grid = true;
        for (int a = 0; a < 3; ++a) {
          double t = (p[a] - spec.lo[a]) / h;
          c[a] = std::clamp(int(std::floor(t)), 0, spec.n[a] - 2);
          f[a] = std::clamp(t - c[a], 0.0, 1.0);
          if (t < -0.5 || t > spec.n[a] - 0.5) in_grid = false;
        }
        if (!in_grid) continue;
        double wsum = 0;
        int ids[8];
        double ws[8];
        int m = 0;
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj)
            for (int dk = 0; dk < 2; ++dk) {
              int id = bn.id[spec.flat(c[0] + di, c[1] + dj, c[2] + dk)];
              if (id < 0) continue;
              double w = (di ? f[0] : 1 - f[0]) * (dj ? f[1] : 1 - f[1]) * (dk ? f[2] : 1 - f[2]);
              ids[m] = id;
              ws[m] = w;
              ++m;
              wsum += w;
            }
        if (m == 0 || wsum < 1e-12) continue;
        for (int t = 0; t < m; ++t) add(ids[t], dA * ws[t] / wsum);
        placed = true;
      }
      if (!placed)
        throw NumericalError("apportion_caps: no interior cell near surface sample");
    }
  }
  return cw;
}

}  // namespace

VoltageMatrix synth_voltages_general(const Phantom& p, const ElectrodeLayout& layout,
                                     const CurrentPatternSet& patterns,
                                     const FDForwardOptions& opts) {
  if (patterns.L() != layout.L())
    throw ConfigError("synth_voltages_general: pattern/layout electrode count mismatch");
  if (std::abs(p.domain_radius - layout.radius_domain) > 1e-12)
    throw ConfigError("synth_voltages_general: phantom and layout radii differ");

  GridSpec spec;
  spec.n = {opts.grid_n, opts.grid_n, opts.grid_n};
  const double R = layout.radius_domain;
  spec.lo = {-R, -R, -R};
  spec.hi = {R, R, R};
  VolumeGrid gamma = eval_phantom(p, spec);
  elliptic::BallNodes bn = elliptic::ball_nodes(spec, R);
  CapWeights cw = apportion_caps(layout, bn, opts.surface_samples);

  const int L = layout.L(), K = patterns.K();
  Eigen::MatrixXcd V(L, K);
  elliptic::SolveOptions sopts;
  sopts.tol = opts.tol;
  for (int k = 0; k < K; ++k) {
    std::vector<cplx> current(spec.size(), cplx(0));
    for (int e = 0; e < L; ++e) {
      double Ie = patterns.C(e, k);
      if (Ie == 0.0) continue;
      for (const auto& [id, w] : cw.per_electrode[e])
        current[bn.node[id]] += Ie * (w / cw.cap_area);
    }
    VolumeGrid u = elliptic::solve_conductivity(gamma, R, current, sopts);
    for (int e = 0; e < L; ++e) {
      cplx mean(0);
      for (const auto& [id, w] : cw.per_electrode[e]) mean += u.data[bn.node[id]] * w;
      V(e, k) = mean / cw.cap_area;
    }
  }
  return ground_and_pack(std::move(V), layout, patterns);
}

VoltageMatrix add_noise(const VoltageMatrix& v, double eta, std::uint64_t seed) {
  if (eta < 0) throw ConfigError("add_noise: eta must be >= 0");
  VoltageMatrix out = v;
  out.eta = eta;
  out.seed = seed;
  if (eta == 0) return out;
  const int L = int(v.V.rows()), K = int(v.V.cols());
  const bool complex_data = v.V.imag().cwiseAbs().maxCoeff() > 0;
  for (int k = 0; k < K; ++k) {
    double m = v.V.col(k).cwiseAbs().mean();
    for (int e = 0; e < L; ++e) {
      double dre = gaussian_at(seed, std::uint64_t(k), std::uint64_t(e));
      double dim = complex_data ? gaussian_at(seed, std::uint64_t(k), std::uint64_t(e) + (1ull << 32)) : 0.0;
      out.V(e, k) += eta * m * cplx(dre, dim);
    }
  }
  return out;
}

}  // namespace eit3d::forward
