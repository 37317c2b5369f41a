#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

namespace eit3d::phantom {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;

// Rectangular sampling grid with the embedded-ball mask. Nodes are
// node-centered: x_i = lo + i*(hi-lo)/(n-1).
struct GridSpec {
  std::array<int, 3> n{64, 64, 64};
  std::array<double, 3> lo{-1, -1, -1};
  std::array<double, 3> hi{1, 1, 1};

  std::size_t size() const { return std::size_t(n[0]) * n[1] * n[2]; }
  double step(int axis) const { return (hi[axis] - lo[axis]) / (n[axis] - 1); }
  double coord(int axis, int i) const { return lo[axis] + i * step(axis); }
  std::size_t flat(int i, int j, int k) const { return (std::size_t(i) * n[1] + j) * n[2] + k; }
  Vec3 point(int i, int j, int k) const {
    return Vec3(coord(0, i), coord(1, j), coord(2, k));
  }
  bool operator==(const GridSpec&) const = default;
};

// Complex scalar field on a GridSpec plus the |x| <= r_domain mask.
struct VolumeGrid {
  GridSpec spec;
  double radius_domain = 1.0;
  std::vector<cplx> data;           // spec.size(), k fastest
  std::vector<std::uint8_t> mask;   // 1 where |x| <= radius_domain

  void init_mask();
  cplx& at(int i, int j, int k) { return data[spec.flat(i, j, k)]; }
  cplx at(int i, int j, int k) const { return data[spec.flat(i, j, k)]; }
};

// Concentric piecewise-constant profile: value[j] on r in [radii[j], radii[j+1])
// with radii = (0, r_1, ..., r_N = domain radius).
struct RadialLayers {
  std::vector<double> radii;   // N+1 entries, strictly increasing, radii[0]=0
  std::vector<cplx> values;    // N entries, Re > 0
  double domain_radius() const { return radii.back(); }
  void validate() const;
};

struct Inclusion {
  enum class Kind { Ball, Ellipsoid };
  Kind kind = Kind::Ball;
  Vec3 center{0, 0, 0};
  Vec3 semi{0.5, 0.5, 0.5};  // ball: all equal
  cplx value{1.0, 0.0};
  bool contains(const Vec3& x) const;  // boundary points count as inside
};

// Piecewise-constant admittivity scene on a ball.
struct Phantom {
  cplx background{1.0, 0.0};
  double domain_radius = 1.0;
  std::vector<Inclusion> inclusions;  // later entries override earlier ones

  cplx value_at(const Vec3& x) const;  // outside the ball: background
  void validate() const;               // coercivity + containment
};

enum class BuiltinPhantom { T1, T2A, T2B, T3 };
BuiltinPhantom phantom_by_name(const std::string& name);

// The four test targets. Organ geometry for T2 and target positions for T3
// follow the canonical placement documented in the README.
Phantom make_phantom(BuiltinPhantom which);

// Sample a phantom on a grid. Outside-ball nodes take the background value.
VolumeGrid eval_phantom(const Phantom& p, const GridSpec& spec);

// Exact layer representation of a radially symmetric phantom (origin-centered
// balls only). Throws ConfigError otherwise.
RadialLayers radial_profile(const Phantom& p);

// Scene-file round trip (structured text; see io.cpp for the format).
Phantom load_phantom(const std::string& path);
void save_phantom(const Phantom& p, const std::string& path);

// Trilinear resample of src onto dst_spec (values outside src clamp to edge).
VolumeGrid resample(const VolumeGrid& src, const GridSpec& dst_spec);

}  // namespace eit3d::phantom
