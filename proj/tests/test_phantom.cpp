#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <filesystem>
#include <random>

#include "eit3d/errors.hpp"
#include "eit3d/phantom.hpp"

using namespace eit3d;
using namespace eit3d::phantom;

TEST_CASE("built-in phantom parameters") {
  auto t1 = make_phantom(BuiltinPhantom::T1);
  CHECK(t1.background == cplx(1.0));
  REQUIRE(t1.inclusions.size() == 1);
  CHECK(t1.inclusions[0].semi[0] == doctest::Approx(0.5));
  CHECK(t1.inclusions[0].value == cplx(2.0));

  auto t2a = make_phantom(BuiltinPhantom::T2A);
  CHECK(t2a.background == cplx(0.8, 0.3));
  CHECK(t2a.inclusions[0].value == cplx(2.0, 0.6));   // heart
  CHECK(t2a.inclusions[1].value == cplx(0.5, 0.2));   // lungs
  CHECK(t2a.inclusions[2].value == cplx(0.5, 0.2));

  auto t3 = make_phantom(BuiltinPhantom::T3);
  CHECK(t3.inclusions[0].value == cplx(1.5));
  CHECK(t3.inclusions[0].semi[0] == doctest::Approx(0.3));
  CHECK(t3.inclusions[0].center.y() == 0.0);  // conductor on the x1 axis
  CHECK(t3.inclusions[1].value == cplx(0.1));
  CHECK(t3.inclusions[1].semi[0] == doctest::Approx(0.2));
  CHECK(t3.inclusions[1].center.x() == 0.0);  // resistor on the x2 axis

  CHECK_THROWS_AS(phantom_by_name("T9"), ConfigError);
  CHECK(phantom_by_name("t2-b") == BuiltinPhantom::T2B);
}

TEST_CASE("phantom evaluation") {
  auto t1 = make_phantom(BuiltinPhantom::T1);
  CHECK(t1.value_at({0, 0, 0}) == cplx(2.0));
  CHECK(t1.value_at({0, 0, 1.5}) == cplx(1.0));  // outside ball: background
  auto t3 = make_phantom(BuiltinPhantom::T3);
  CHECK(t3.value_at({0, 0.9, 0}) == cplx(1.0));  // outside both inclusions

  SUBCASE("interface points take the inclusion value") {
    CHECK(t1.value_at({0.5, 0, 0}) == cplx(2.0));
  }

  SUBCASE("T1 evaluation is rotation invariant away from the interface") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::Vector3d x(u(rng), u(rng), u(rng));
      if (std::abs(x.norm() - 0.5) < 0.02) continue;
      Eigen::Vector3d axis(u(rng), u(rng), u(rng));
      axis.normalize();
      Eigen::Vector3d y = Eigen::AngleAxisd(u(rng) * 3.0, axis) * x;
      CHECK(t1.value_at(x) == t1.value_at(y));
    }
  }

  SUBCASE("grid sampling: outside-ball nodes take the background") {
    GridSpec spec;
    spec.n = {17, 17, 17};
    auto g = eval_phantom(t1, spec);
    CHECK(g.at(0, 0, 0) == cplx(1.0));     // corner, outside ball
    CHECK(g.at(8, 8, 8) == cplx(2.0));     // center
    CHECK(g.mask[spec.flat(8, 8, 8)] == 1);
    CHECK(g.mask[spec.flat(0, 0, 0)] == 0);
  }

  SUBCASE("axis relabeling commutes for the axisymmetric T1") {
    GridSpec spec;
    spec.n = {9, 9, 9};
    auto g = eval_phantom(t1, spec);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j)
        for (int k = 0; k < 9; ++k) CHECK(g.at(i, j, k) == g.at(k, i, j));
  }
}

TEST_CASE("radial profile") {
  auto t1 = make_phantom(BuiltinPhantom::T1);
  auto layers = radial_profile(t1);
  REQUIRE(layers.radii.size() == 3);
  CHECK(layers.radii[1] == doctest::Approx(0.5));
  CHECK(layers.radii[2] == doctest::Approx(1.0));
  CHECK(layers.values[0] == cplx(2.0));
  CHECK(layers.values[1] == cplx(1.0));

  Phantom homog;
  homog.background = cplx(3.0, 0.5);
  auto single = radial_profile(homog);
  CHECK(single.values.size() == 1);
  CHECK(single.values[0] == cplx(3.0, 0.5));

  CHECK_THROWS_AS(radial_profile(make_phantom(BuiltinPhantom::T2B)), ConfigError);
}

TEST_CASE("scene file round trip") {
  auto t2a = make_phantom(BuiltinPhantom::T2A);
  auto path = std::filesystem::temp_directory_path() / "eit3d_test_phantom.txt";
  save_phantom(t2a, path.string());
  auto back = load_phantom(path.string());
  CHECK(back.background == t2a.background);
  REQUIRE(back.inclusions.size() == t2a.inclusions.size());
  for (std::size_t i = 0; i < back.inclusions.size(); ++i) {
    CHECK(back.inclusions[i].value == t2a.inclusions[i].value);
    CHECK((back.inclusions[i].center - t2a.inclusions[i].center).norm() == 0.0);
    CHECK((back.inclusions[i].semi - t2a.inclusions[i].semi).norm() == 0.0);
  }
  std::filesystem::remove(path);
}

TEST_CASE("resample reproduces trilinear data") {
  // a trilinear function is reproduced exactly by trilinear interpolation
  GridSpec src;
  src.n = {9, 9, 9};
  VolumeGrid g;
  g.spec = src;
  g.radius_domain = 1.0;
  g.data.resize(src.size());
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      for (int k = 0; k < 9; ++k) {
        auto p = src.point(i, j, k);
        g.data[src.flat(i, j, k)] = cplx(1 + 2 * p.x() - p.y() + 0.5 * p.z(), p.x());
      }
  g.init_mask();
  GridSpec dst;
  dst.n = {16, 16, 16};
  auto r = resample(g, dst);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      for (int k = 0; k < 16; ++k) {
        auto p = dst.point(i, j, k);
        cplx expect(1 + 2 * p.x() - p.y() + 0.5 * p.z(), p.x());
        CHECK(std::abs(r.at(i, j, k) - expect) < 1e-12);
      }
}
