#include "eit3d/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <fstream>
#include <sstream>

#include "eit3d/errors.hpp"

namespace eit3d::phantom {

void VolumeGrid::init_mask() {
  mask.assign(spec.size(), 0);
  const double r2 = radius_domain * radius_domain;
  for (int i = 0; i < spec.n[0]; ++i)
    for (int j = 0; j < spec.n[1]; ++j)
      for (int k = 0; k < spec.n[2]; ++k)
        if (spec.point(i, j, k).squaredNorm() <= r2) mask[spec.flat(i, j, k)] = 1;
}

void RadialLayers::validate() const {
  if (radii.size() < 2 || values.size() + 1 != radii.size())
    throw ConfigError("RadialLayers: need N+1 radii for N layer values");
  if (radii.front() != 0.0) throw ConfigError("RadialLayers: radii must start at 0");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] <= radii[i - 1]) throw ConfigError("RadialLayers: radii must increase strictly");
  for (cplx v : values)
    if (v.real() <= 0) throw ConfigError("RadialLayers: Re(value) must be positive");
}

bool Inclusion::contains(const Vec3& x) const {
  Vec3 d = x - center;
  if (kind == Kind::Ball) return d.squaredNorm() <= semi[0] * semi[0];
  double s = 0;
  for (int a = 0; a < 3; ++a) s += (d[a] / semi[a]) * (d[a] / semi[a]);
  return s <= 1.0;
}

cplx Phantom::value_at(const Vec3& x) const {
  if (x.squaredNorm() > domain_radius * domain_radius) return background;
  cplx v = background;
  for (const auto& inc : inclusions)
    if (inc.contains(x)) v = inc.value;
  return v;
}

void Phantom::validate() const {
  if (background.real() <= 0) throw ConfigError("Phantom: Re(background) must be positive");
  for (const auto& inc : inclusions) {
    if (inc.value.real() <= 0) throw ConfigError("Phantom: Re(inclusion value) must be positive");
    double reach;
    if (inc.kind == Inclusion::Kind::Ball) {
      reach = inc.center.norm() + inc.semi[0];
    } else {
      // farthest surface point of the ellipsoid, by golden-spiral sampling
      reach = 0;
      const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
      for (int s = 0; s < 2048; ++s) {
        double z = 1.0 - 2.0 * (s + 0.5) / 2048;
        double r = std::sqrt(std::max(0.0, 1 - z * z));
        Vec3 u(r * std::cos(ga * s), r * std::sin(ga * s), z);
        reach = std::max(reach, (inc.center + inc.semi.cwiseProduct(u)).norm());
      }
    }
    if (reach > domain_radius * (1 + 1e-9))
      throw ConfigError("Phantom: inclusion extends outside the domain ball");
  }
}

BuiltinPhantom phantom_by_name(const std::string& name) {
  std::string s;
  for (char c : name) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "t1") return BuiltinPhantom::T1;
  if (s == "t2a" || s == "t2-a") return BuiltinPhantom::T2A;
  if (s == "t2b" || s == "t2-b") return BuiltinPhantom::T2B;
  if (s == "t3") return BuiltinPhantom::T3;
  throw ConfigError("unknown phantom name: " + name);
}

Phantom make_phantom(BuiltinPhantom which) {
  Phantom p;
  p.domain_radius = 1.0;
  auto ball = [](Vec3 c, double r, cplx v) {
    Inclusion inc;
    inc.kind = Inclusion::Kind::Ball;
    inc.center = c;
    inc.semi = Vec3(r, r, r);
    inc.value = v;
    return inc;
  };
  auto ellipsoid = [](Vec3 c, Vec3 semi, cplx v) {
    Inclusion inc;
    inc.kind = Inclusion::Kind::Ellipsoid;
    inc.center = c;
    inc.semi = semi;
    inc.value = v;
    return inc;
  };
  switch (which) {
    case BuiltinPhantom::T1:
      p.background = 1.0;
      p.inclusions.push_back(ball({0, 0, 0}, 0.5, 2.0));
      break;
    case BuiltinPhantom::T2A:
      p.background = cplx(0.8, 0.3);
      p.inclusions.push_back(ball({0.3, 0, 0.1}, 0.25, cplx(2.0, 0.6)));               // heart
      p.inclusions.push_back(ellipsoid({-0.35, 0.45, 0}, {0.25, 0.35, 0.5}, cplx(0.5, 0.2)));   // lung 1
      p.inclusions.push_back(ellipsoid({-0.35, -0.45, 0}, {0.20, 0.30, 0.45}, cplx(0.5, 0.2))); // lung 2
      break;
    case BuiltinPhantom::T2B:
      p.background = 1.0;
      p.inclusions.push_back(ball({0.3, 0, 0.1}, 0.25, 2.0));
      p.inclusions.push_back(ellipsoid({-0.35, 0.45, 0}, {0.25, 0.35, 0.5}, 0.5));
      p.inclusions.push_back(ellipsoid({-0.35, -0.45, 0}, {0.20, 0.30, 0.45}, 0.5));
      break;
    case BuiltinPhantom::T3:
      p.background = 1.0;
      p.inclusions.push_back(ball({0.5, 0, 0}, 0.3, 1.5));   // conductor on x1 axis
      p.inclusions.push_back(ball({0, 0.5, 0}, 0.2, 0.1));   // resistor on x2 axis
      break;
  }
  p.validate();
  return p;
}

VolumeGrid eval_phantom(const Phantom& p, const GridSpec& spec) {
  VolumeGrid g;
  g.spec = spec;
  g.radius_domain = p.domain_radius;
  g.data.resize(spec.size());
  for (int i = 0; i < spec.n[0]; ++i)
    for (int j = 0; j < spec.n[1]; ++j)
      for (int k = 0; k < spec.n[2]; ++k)
        g.data[spec.flat(i, j, k)] = p.value_at(spec.point(i, j, k));
  g.init_mask();
  return g;
}

RadialLayers radial_profile(const Phantom& p) {
  struct Shell {
    double r;
    cplx v;
  };
  std::vector<Shell> shells;
  for (const auto& inc : p.inclusions) {
    if (inc.kind != Inclusion::Kind::Ball || inc.center.norm() > 1e-14 ||
        std::abs(inc.semi[0] - inc.semi[1]) > 1e-14 || std::abs(inc.semi[0] - inc.semi[2]) > 1e-14)
      throw ConfigError("radial_profile: phantom is not radially symmetric");
    shells.push_back({inc.semi[0], inc.value});
  }
  std::sort(shells.begin(), shells.end(), [](const Shell& a, const Shell& b) { return a.r < b.r; });

  RadialLayers layers;
  layers.radii.push_back(0.0);
  for (const auto& s : shells) {
    if (s.r >= p.domain_radius)
      throw ConfigError("radial_profile: inclusion reaches the domain boundary");
    // innermost shells win per painter's order; sorted balls are nested
    layers.radii.push_back(s.r);
    layers.values.push_back(s.v);
  }
  layers.radii.push_back(p.domain_radius);
  layers.values.push_back(p.background);
  // later-listed inclusions override earlier: for nested origin balls the value
  // inside radius r_j is the innermost listed; recompute by sampling midpoints
  for (std::size_t j = 0; j + 1 < layers.radii.size(); ++j) {
    double rm = 0.5 * (layers.radii[j] + layers.radii[j + 1]);
    layers.values[j] = p.value_at(Vec3(rm, 0, 0));
  }
  // merge equal adjacent layers
  RadialLayers out;
  out.radii.push_back(0.0);
  for (std::size_t j = 0; j < layers.values.size(); ++j) {
    if (!out.values.empty() && out.values.back() == layers.values[j])
      out.radii.back() = layers.radii[j + 1];
    else {
      out.values.push_back(layers.values[j]);
      out.radii.push_back(layers.radii[j + 1]);
    }
  }
  out.validate();
  return out;
}

Phantom load_phantom(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IOError("cannot open phantom file: " + path);
  Phantom p;
  std::string line;
  bool have_bg = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "background") {
      double re, im = 0;
      ss >> re >> im;
      p.background = cplx(re, im);
      have_bg = true;
    } else if (tok == "domain_radius") {
      ss >> p.domain_radius;
    } else if (tok == "ball") {
      Inclusion inc;
      inc.kind = Inclusion::Kind::Ball;
      double r, re, im = 0;
      ss >> inc.center.x() >> inc.center.y() >> inc.center.z() >> r >> re >> im;
      inc.semi = Vec3(r, r, r);
      inc.value = cplx(re, im);
      p.inclusions.push_back(inc);
    } else if (tok == "ellipsoid") {
      Inclusion inc;
      inc.kind = Inclusion::Kind::Ellipsoid;
      double re, im = 0;
      ss >> inc.center.x() >> inc.center.y() >> inc.center.z() >> inc.semi.x() >> inc.semi.y() >>
          inc.semi.z() >> re >> im;
      inc.value = cplx(re, im);
      p.inclusions.push_back(inc);
    } else {
      throw IOError("phantom file: unknown token '" + tok + "'");
    }
    if (ss.fail()) throw IOError("phantom file: malformed line: " + line);
  }
  if (!have_bg) throw IOError("phantom file: missing background");
  p.validate();
  return p;
}

void save_phantom(const Phantom& p, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IOError("cannot write phantom file: " + path);
  f.precision(17);
  f << "# eit3d phantom scene\n";
  f << "background " << p.background.real() << " " << p.background.imag() << "\n";
  f << "domain_radius " << p.domain_radius << "\n";
  for (const auto& inc : p.inclusions) {
    if (inc.kind == Inclusion::Kind::Ball)
      f << "ball " << inc.center.x() << " " << inc.center.y() << " " << inc.center.z() << " "
        << inc.semi[0] << " " << inc.value.real() << " " << inc.value.imag() << "\n";
    else
      f << "ellipsoid " << inc.center.x() << " " << inc.center.y() << " " << inc.center.z() << " "
        << inc.semi.x() << " " << inc.semi.y() << " " << inc.semi.z() << " " << inc.value.real()
        << " " << inc.value.imag() << "\n";
  }
}

VolumeGrid resample(const VolumeGrid& src, const GridSpec& dst_spec) {
  VolumeGrid out;
  out.spec = dst_spec;
  out.radius_domain = src.radius_domain;
  out.data.resize(dst_spec.size());
  const auto& s = src.spec;
  for (int i = 0; i < dst_spec.n[0]; ++i)
    for (int j = 0; j < dst_spec.n[1]; ++j)
      for (int k = 0; k < dst_spec.n[2]; ++k) {
        Vec3 x = dst_spec.point(i, j, k);
        double f[3];
        int c[3];
        for (int a = 0; a < 3; ++a) {
          double t = (x[a] - s.lo[a]) / s.step(a);
          t = std::clamp(t, 0.0, double(s.n[a] - 1));
          c[a] = std::min(int(t), s.n[a] - 2);
          f[a] = t - c[a];
        }
        cplx v(0);
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj)
            for (int dk = 0; dk < 2; ++dk) {
              double w = (di ? f[0] : 1 - f[0]) * (dj ? f[1] : 1 - f[1]) * (dk ? f[2] : 1 - f[2]);
              v += w * src.data[s.flat(c[0] + di, c[1] + dj, c[2] + dk)];
            }
        out.data[dst_spec.flat(i, j, k)] = v;
      }
  out.init_mask();
  return out;
}

}  // namespace eit3d::phantom
