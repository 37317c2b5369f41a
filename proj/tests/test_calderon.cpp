#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "eit3d/calderon.hpp"
#include "eit3d/dnmap.hpp"
#include "eit3d/errors.hpp"
#include "eit3d/forward.hpp"

using namespace eit3d;
using namespace eit3d::calderon;
using forward::pairwise_patterns;
using forward::synth_voltages_radial;
using geom::place_electrodes;
using phantom::GridSpec;
using phantom::RadialLayers;

namespace {
constexpr double kPi = std::numbers::pi;
std::mt19937_64 rng(31);
double urand(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

RadialLayers homog(double s) {
  RadialLayers l;
  l.radii = {0.0, 1.0};
  l.values = {cplx(s)};
  return l;
}
RadialLayers t1() {
  RadialLayers l;
  l.radii = {0.0, 0.5, 1.0};
  l.values = {cplx(2.0), cplx(1.0)};
  return l;
}

// closed form for radially layered targets:
// F(|z|) = -1/(2 pi^2 |z|^2) sum_l (lambda_l - l) 4 pi (-2 pi^2 |z|^2)^l / ((2l+1)!! l!)
double fhat_radial_closed(const Eigen::VectorXcd& lam, double zr, int lmax) {
  double s = 0, dfact = 1, fact = 1, pw = 1;
  const double x = -2 * kPi * kPi * zr * zr;
  for (int l = 1; l <= lmax; ++l) {
    dfact *= (2 * l + 1);
    fact *= l;
    pw *= x;
    s += (lam[l].real() - l) * 4 * kPi * pw / (dfact * fact);
  }
  return -s / (2 * kPi * kPi * zr * zr);
}

GridSpec cube(int n, double half = 1.0) {
  GridSpec s;
  s.n = {n, n, n};
  s.lo = {-half, -half, -half};
  s.hi = {half, half, half};
  return s;
}

SphericalZGrid grid_of(double Tz, int ir, int it, int ip, double mt) {
  SphericalZGrid g;
  g.Tz = Tz;
  g.nr = ir + 1;
  g.nth = it + 1;
  g.nph = ip + 1;
  g.moll_t = mt;
  return g;
}
}  // namespace

TEST_CASE("za frame") {
  SUBCASE("z = e3 gives a = e1, a_perp = e2") {
    auto f = za_frame({0, 0, 1});
    CHECK((f.a - Vec3(1, 0, 0)).norm() < 1e-14);
    CHECK((f.a_perp - Vec3(0, 1, 0)).norm() < 1e-14);
  }
  SUBCASE("random sweep: equal norms and mutual orthogonality") {
    for (int trial = 0; trial < 200; ++trial) {
      Vec3 z(urand(-3, 3), urand(-3, 3), urand(-3, 3));
      if (z.norm() < 1e-3) continue;
      auto f = za_frame(z);
      double tol = 1e-12 * (1 + z.squaredNorm());
      CHECK(std::abs(f.a.norm() - z.norm()) < tol);
      CHECK(std::abs(f.a_perp.norm() - z.norm()) < tol);
      CHECK(std::abs(f.a.dot(z)) < tol);
      CHECK(std::abs(f.a_perp.dot(z)) < tol);
      CHECK(std::abs(f.a.dot(f.a_perp)) < tol);
    }
  }
  SUBCASE("z = 0 rejected") { CHECK_THROWS_AS(za_frame({0, 0, 0}), ConfigError); }
  SUBCASE("Theta = 2 pi reproduces the Theta -> 0+ integrand") {
    Vec3 z(0.3, -0.4, 0.8);
    auto f = za_frame(z);
    auto p0 = geom::expand_exponentials(f.z, f.a, f.a_perp, 1e-12, 10);
    auto p1 = geom::expand_exponentials(f.z, f.a, f.a_perp, 2 * kPi, 10);
    CHECK((p0.a_star.coeff - p1.a_star.coeff).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("mollifier") {
  CHECK(mollifier_value({0.3, 0.1, -2.0}, 0.0) == 1.0);
  CHECK(mollifier_value({0, 0, 0}, 0.7) == 1.0);
  CHECK(mollifier_value({1, 0, 0}, 0.1) == doctest::Approx(std::exp(-0.1 * kPi)));
  CHECK(mollifier_value({1, 0, 0}, 0.1) == doctest::Approx(0.73040).epsilon(1e-4));
  CHECK_THROWS_AS(mollifier_value({1, 0, 0}, -0.1), ConfigError);
}

TEST_CASE("analytic Fhat") {
  SUBCASE("homogeneous layers give F = 0") {
    auto F = fhat_analytic(homog(1.0), grid_of(2.7, 10, 8, 14, 0.1), 8, 30);
    for (auto v : F.data) CHECK(std::abs(v) == 0.0);
  }
  SUBCASE("matches the closed-form radial oracle, and is real") {
    auto lam = forward::dn_eigenvalues(t1(), 50);
    auto F = fhat_analytic(t1(), grid_of(2.7, 10, 8, 14, 0.1), 30, 50);
    for (int i = 1; i < F.nr; ++i) {
      double oracle = fhat_radial_closed(lam, F.r(i), 50);
      cplx v = F.data[F.flat(i, 3, 5)];
      CHECK(std::abs(v.real() - oracle) < 1e-10 * std::max(1.0, std::abs(oracle)));
      CHECK(std::abs(v.imag()) < 1e-12);
    }
  }
  SUBCASE("small-|z| limit: the exact T1 value is 4 pi / 31") {
    // the volume integral of the perturbation is pi/6 ~ 0.5236; the exact
    // DN data linearizes to 4 pi/31 ~ 0.4054 at z -> 0 (Born gap 24/31)
    auto F = fhat_analytic(t1(), grid_of(0.05, 2, 2, 2, 0.0), 8, 40);
    double v = F.data[F.flat(2, 1, 1)].real();  // |z| = 0.05
    CHECK(v == doctest::Approx(4 * kPi / 31).epsilon(2e-3));
    CHECK(std::abs(v - kPi / 6) / (kPi / 6) > 0.2);  // the pi/6 oracle is 23% off
  }
  SUBCASE("Theta-average is exactly invariant for radial targets") {
    auto F30 = fhat_analytic(t1(), grid_of(2.0, 4, 2, 2, 0.0), 30, 40);
    auto F60 = fhat_analytic(t1(), grid_of(2.0, 4, 2, 2, 0.0), 60, 40);
    for (std::size_t i = 0; i < F30.data.size(); ++i)
      CHECK(std::abs(F30.data[i] - F60.data[i]) < 1e-10);
  }
}

TEST_CASE("electrode Fhat") {
  const int L = 32;
  auto layout = place_electrodes(L, 1.0, 0.05);
  auto ps = pairwise_patterns(L, 0);
  auto v1 = synth_voltages_radial(homog(1.0), layout, ps);
  auto vg = synth_voltages_radial(t1(), layout, ps);
  auto m1 = dnmap::build_map(ps, v1);
  auto mg = dnmap::build_map(ps, vg);
  cplx gb = dnmap::gamma_best(v1, vg);
  dnmap::scale_dn(mg, gb);
  dnmap::scale_dn(m1, 1.0);

  SUBCASE("identical maps give F = 0") {
    auto F = fhat_electrode(m1, m1, layout, grid_of(2.0, 4, 2, 4, 0.0));
    for (auto v : F.data) CHECK(std::abs(v) == 0.0);
  }
  SUBCASE("unscaled maps rejected") {
    auto raw = dnmap::build_map(ps, vg);
    CHECK_THROWS_AS(fhat_electrode(raw, raw, layout, grid_of(2.0, 4, 2, 4, 0.0)), ConfigError);
  }
  SUBCASE("nearly real for the radial target, positive at low |z|") {
    // the quasi-uniform layout is not exactly rotation-symmetric, which
    // leaves a few-percent imaginary residue (measured 9% worst-case at
    // the weakest |z| <= 1 nodes for L=32)
    auto F = fhat_electrode(mg, m1, layout, grid_of(1.0, 4, 2, 4, 0.0), {});
    for (int i = 1; i < F.nr; ++i) {
      cplx v = F.data[F.flat(i, 1, 2)];
      CHECK(std::abs(v.imag()) < 0.10 * std::abs(v));
      CHECK(v.real() > 0);
    }
  }
  SUBCASE("Theta-average converges: doubling N_Theta changes F by < 1%") {
    auto Fa = fhat_electrode(mg, m1, layout, grid_of(1.3, 4, 2, 4, 0.0), {.n_theta = 30});
    auto Fb = fhat_electrode(mg, m1, layout, grid_of(1.3, 4, 2, 4, 0.0), {.n_theta = 60});
    for (std::size_t i = 0; i < Fa.data.size(); ++i) {
      if (std::abs(Fa.data[i]) == 0) continue;
      CHECK(std::abs(Fa.data[i] - Fb.data[i]) < 0.01 * std::abs(Fa.data[i]));
    }
  }
}

TEST_CASE("spherical inverse Fourier transform") {
  SUBCASE("F = 0 gives dsig = 0") {
    auto g = grid_of(2.0, 4, 4, 4, 0.0);
    g.data.assign(std::size_t(g.nr) * g.nth * g.nph, cplx(0));
    auto d = inverse_fourier_spherical(g, cube(9));
    for (auto v : d.data) CHECK(std::abs(v) == 0.0);
  }
  SUBCASE("self-reciprocal Gaussian within 1e-3") {
    auto g = grid_of(3.0, 48, 24, 48, 0.0);
    g.data.resize(std::size_t(g.nr) * g.nth * g.nph);
    for (int i = 0; i < g.nr; ++i)
      for (int j = 0; j < g.nth; ++j)
        for (int k = 0; k < g.nph; ++k)
          g.data[g.flat(i, j, k)] = std::exp(-kPi * g.r(i) * g.r(i));
    auto d = inverse_fourier_spherical(g, cube(9));
    GridSpec spec = cube(9);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j)
        for (int k = 0; k < 9; ++k) {
          double expect = std::exp(-kPi * spec.point(i, j, k).squaredNorm());
          CHECK(std::abs(d.at(i, j, k).real() - expect) < 1e-3);
          CHECK(std::abs(d.at(i, j, k).imag()) < 1e-3);
        }
  }
  SUBCASE("parity violations rejected") {
    SphericalZGrid g;
    g.nr = 4;  // even
    g.nth = 5;
    g.nph = 5;
    g.data.assign(4 * 5 * 5, cplx(0));
    CHECK_THROWS_AS(inverse_fourier_spherical(g, cube(5)), ConfigError);
  }
}

TEST_CASE("T1 analytic reconstruction: central peak over a flat background") {
  // T_z = 2.7, t = 0.1, lmax = 50 with a finer angular grid; coarse x grid
  auto F = fhat_analytic(t1(), grid_of(2.7, 10, 16, 28, 0.1), 30, 50);
  auto d = inverse_fourier_spherical(F, cube(17));
  auto s = reconstruct_calderon(d, 1.0, cube(17));
  double center = s.at(8, 8, 8).real();
  CHECK(center > 1.6);
  CHECK(center < 2.4);
  // background ring
  GridSpec spec = cube(17);
  for (int i = 0; i < 17; ++i)
    for (int j = 0; j < 17; ++j)
      for (int k = 0; k < 17; ++k) {
        double r = spec.point(i, j, k).norm();
        if (r > 0.8 && r < 0.95) {
          CHECK(s.at(i, j, k).real() > 0.9);
          CHECK(s.at(i, j, k).real() < 1.1);
        }
      }
}

TEST_CASE("mollifier monotonicity on T1") {
  // increasing t lowers the peak and widens the bump; width is measured by
  // the second moment of the positive part (robust against Gibbs ringing)
  GridSpec spec = cube(13);
  auto run = [&](double t) {
    auto F = fhat_analytic(t1(), grid_of(2.7, 10, 8, 14, t), 8, 50);
    auto d = inverse_fourier_spherical(F, spec);
    double peak = 0, m0 = 0, m2 = 0;
    for (int i = 0; i < 13; ++i)
      for (int j = 0; j < 13; ++j)
        for (int k = 0; k < 13; ++k) {
          double v = d.at(i, j, k).real();
          peak = std::max(peak, std::abs(v));
          if (v > 0) {
            m0 += v;
            m2 += v * spec.point(i, j, k).squaredNorm();
          }
        }
    return std::make_pair(peak, m2 / m0);
  };
  auto [p1, w1] = run(0.05);
  auto [p2, w2] = run(0.3);
  CHECK(p2 < p1);
  CHECK(w2 > w1);
}

TEST_CASE("truncation monotonicity on noise-free analytic data") {
  auto lam = forward::dn_eigenvalues(t1(), 50);
  auto truth = phantom::eval_phantom(phantom::make_phantom(phantom::BuiltinPhantom::T1), cube(13));
  double prev = 1e9;
  for (double Tz : {0.9, 1.8, 2.7}) {
    auto F = fhat_analytic(t1(), grid_of(Tz, 10, 8, 14, 0.1), 8, 50);
    auto d = inverse_fourier_spherical(F, cube(13));
    auto s = reconstruct_calderon(d, 1.0, cube(13));
    double err = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < s.data.size(); ++i) {
      if (!truth.mask[i]) continue;
      err += std::norm(s.data[i] - truth.data[i]);
      ++cnt;
    }
    err = std::sqrt(err / cnt);
    MESSAGE("Tz=", Tz, " rms err=", err);
    CHECK(err <= prev * 1.02);  // non-increasing within quadrature noise
    prev = err;
  }
}

TEST_CASE("reconstruct_calderon trivials") {
  GridSpec spec = cube(9);
  phantom::VolumeGrid d;
  d.spec = spec;
  d.radius_domain = 1.0;
  d.data.assign(spec.size(), cplx(0));
  d.init_mask();
  auto s0 = reconstruct_calderon(d, cplx(1.5, -0.2), spec);
  for (auto v : s0.data) CHECK(std::abs(v - cplx(1.5, -0.2)) < 1e-15);
  d.data.assign(spec.size(), cplx(0.25));
  auto s1 = reconstruct_calderon(d, cplx(1.0), spec);
  for (auto v : s1.data) CHECK(std::abs(v - cplx(1.25)) < 1e-15);
}
