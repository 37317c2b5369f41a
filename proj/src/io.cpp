#include "eit3d/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "eit3d/errors.hpp"

namespace eit3d::io {

using phantom::cplx;

namespace {

void expect_magic(std::istream& f, const std::string& magic, const std::string& path) {
  std::string line;
  if (!std::getline(f, line) || line != magic)
    throw IOError(path + ": expected header '" + magic + "'");
}

std::string next_field(std::istream& f, const std::string& key, const std::string& path) {
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok != key) throw IOError(path + ": expected field '" + key + "', got '" + tok + "'");
    std::string rest;
    std::getline(ss, rest);
    std::size_t p = rest.find_first_not_of(' ');
    return p == std::string::npos ? "" : rest.substr(p);
  }
  throw IOError(path + ": missing field '" + key + "'");
}

void write_f64le(std::ostream& f, const double* p, std::size_t n) {
  // this codebase targets little-endian hosts; assert at build time
  static_assert(std::endian::native == std::endian::little);
  f.write(reinterpret_cast<const char*>(p), std::streamsize(n * sizeof(double)));
}

void read_f64le(std::istream& f, double* p, std::size_t n, const std::string& path) {
  f.read(reinterpret_cast<char*>(p), std::streamsize(n * sizeof(double)));
  if (!f) throw IOError(path + ": truncated binary body");
}

}  // namespace

void atomic_write_text(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IOError("cannot write " + tmp);
    f << content;
  }
  std::filesystem::rename(tmp, path);
}

void save_layout(const geom::ElectrodeLayout& lay, const std::string& path) {
  std::ostringstream f;
  f.precision(17);
  f << "eit3d-layout v1\n";
  f << "domain_radius " << lay.radius_domain << "\n";
  f << "electrode_radius " << lay.radius_electrode << "\n";
  f << "L " << lay.L() << "\n";
  for (const auto& c : lay.centers) f << c.x() << " " << c.y() << " " << c.z() << "\n";
  atomic_write_text(path, f.str());
}

geom::ElectrodeLayout load_layout(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IOError("cannot open " + path);
  expect_magic(f, "eit3d-layout v1", path);
  geom::ElectrodeLayout lay;
  lay.radius_domain = std::stod(next_field(f, "domain_radius", path));
  lay.radius_electrode = std::stod(next_field(f, "electrode_radius", path));
  int L = std::stoi(next_field(f, "L", path));
  lay.centers.resize(L);
  for (int e = 0; e < L; ++e) {
    if (!(f >> lay.centers[e].x() >> lay.centers[e].y() >> lay.centers[e].z()))
      throw IOError(path + ": truncated center list");
    double n = lay.centers[e].norm();
    if (std::abs(n - 1.0) > 1e-9) throw IOError(path + ": center not a unit vector");
  }
  return lay;
}

void save_voltages(const forward::VoltageMatrix& v, const std::string& path) {
  std::ostringstream f;
  f.precision(17);
  const int L = int(v.V.rows()), K = int(v.V.cols());
  bool cplx_body = v.V.imag().cwiseAbs().maxCoeff() > 0;
  f << "eit3d-voltages v1\n";
  f << "L " << L << "\nK " << K << "\n";
  f << "protocol skip" << v.skip << "\n";
  f << "amplitude " << v.amplitude << "\n";
  f << "eta " << v.eta << "\n";
  f << "seed " << v.seed << "\n";
  f << "layout_hash " << v.layout_hash << "\n";
  f << "reference " << (v.is_reference ? 1 : 0) << "\n";
  f << "complex " << (cplx_body ? 1 : 0) << "\n";
  for (int k = 0; k < K; ++k)
    for (int e = 0; e < L; ++e) {
      f << v.V(e, k).real();
      if (cplx_body) f << " " << v.V(e, k).imag();
      f << "\n";
    }
  atomic_write_text(path, f.str());
}

forward::VoltageMatrix load_voltages(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IOError("cannot open " + path);
  expect_magic(f, "eit3d-voltages v1", path);
  forward::VoltageMatrix v;
  int L = std::stoi(next_field(f, "L", path));
  int K = std::stoi(next_field(f, "K", path));
  std::string proto = next_field(f, "protocol", path);
  if (proto.rfind("skip", 0) != 0) throw IOError(path + ": bad protocol tag");
  v.skip = std::stoi(proto.substr(4));
  v.amplitude = std::stod(next_field(f, "amplitude", path));
  v.eta = std::stod(next_field(f, "eta", path));
  v.seed = std::stoull(next_field(f, "seed", path));
  v.layout_hash = std::stoull(next_field(f, "layout_hash", path));
  v.is_reference = std::stoi(next_field(f, "reference", path)) != 0;
  bool cplx_body = std::stoi(next_field(f, "complex", path)) != 0;
  if (L < 2 || K < 1) throw IOError(path + ": bad dimensions");
  v.V.resize(L, K);
  for (int k = 0; k < K; ++k)
    for (int e = 0; e < L; ++e) {
      double re, im = 0;
      if (!(f >> re)) throw IOError(path + ": truncated body (column count mismatch?)");
      if (cplx_body && !(f >> im)) throw IOError(path + ": truncated complex body");
      v.V(e, k) = {re, im};
    }
  double extra;
  if (f >> extra) throw IOError(path + ": trailing values (column count mismatch)");
  return v;
}

void save_volume(const phantom::VolumeGrid& g, const std::string& path, std::uint64_t config_hash,
                 const std::string& params) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IOError("cannot write " + tmp);
    f.precision(17);
    f << "eit3d-volume v1\n";
    f << "n " << g.spec.n[0] << " " << g.spec.n[1] << " " << g.spec.n[2] << "\n";
    f << "lo " << g.spec.lo[0] << " " << g.spec.lo[1] << " " << g.spec.lo[2] << "\n";
    f << "hi " << g.spec.hi[0] << " " << g.spec.hi[1] << " " << g.spec.hi[2] << "\n";
    f << "domain_radius " << g.radius_domain << "\n";
    f << "fields re im\n";
    f << "config_hash " << config_hash << "\n";
    if (!params.empty()) f << "params " << params << "\n";
    f << "end_header\n";
    std::vector<double> buf(g.data.size());
    for (std::size_t i = 0; i < g.data.size(); ++i) buf[i] = g.data[i].real();
    write_f64le(f, buf.data(), buf.size());
    for (std::size_t i = 0; i < g.data.size(); ++i) buf[i] = g.data[i].imag();
    write_f64le(f, buf.data(), buf.size());
  }
  std::filesystem::rename(tmp, path);
}

phantom::VolumeGrid load_volume(const std::string& path, std::uint64_t* config_hash,
                                std::string* params) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IOError("cannot open " + path);
  expect_magic(f, "eit3d-volume v1", path);
  phantom::VolumeGrid g;
  {
    std::istringstream ss(next_field(f, "n", path));
    ss >> g.spec.n[0] >> g.spec.n[1] >> g.spec.n[2];
  }
  {
    std::istringstream ss(next_field(f, "lo", path));
    ss >> g.spec.lo[0] >> g.spec.lo[1] >> g.spec.lo[2];
  }
  {
    std::istringstream ss(next_field(f, "hi", path));
    ss >> g.spec.hi[0] >> g.spec.hi[1] >> g.spec.hi[2];
  }
  g.radius_domain = std::stod(next_field(f, "domain_radius", path));
  if (next_field(f, "fields", path) != "re im") throw IOError(path + ": unexpected field list");
  std::uint64_t h = std::stoull(next_field(f, "config_hash", path));
  if (config_hash) *config_hash = h;
  std::string line;
  std::getline(f, line);
  if (line.rfind("params ", 0) == 0) {
    if (params) *params = line.substr(7);
    std::getline(f, line);
  }
  if (line != "end_header") throw IOError(path + ": missing end_header");
  g.data.resize(g.spec.size());
  std::vector<double> buf(g.data.size());
  read_f64le(f, buf.data(), buf.size(), path);
  for (std::size_t i = 0; i < buf.size(); ++i) g.data[i] = buf[i];
  read_f64le(f, buf.data(), buf.size(), path);
  for (std::size_t i = 0; i < buf.size(); ++i) g.data[i] += cplx(0, buf[i]);
  g.init_mask();
  return g;
}

void save_fourier_cartesian(const dbar::FourierVolume& t, const std::string& path) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IOError("cannot write " + tmp);
    f.precision(17);
    f << "eit3d-scattering-cartesian v1\n";
    f << "T " << t.T << "\nn " << t.n << "\nend_header\n";
    write_f64le(f, reinterpret_cast<const double*>(t.data.data()), 2 * t.data.size());
  }
  std::filesystem::rename(tmp, path);
}

dbar::FourierVolume load_fourier_cartesian(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IOError("cannot open " + path);
  expect_magic(f, "eit3d-scattering-cartesian v1", path);
  dbar::FourierVolume t;
  t.T = std::stod(next_field(f, "T", path));
  t.n = std::stoi(next_field(f, "n", path));
  if (t.n < 3 || t.n % 2 == 0) throw IOError(path + ": node count must be odd");
  std::string line;
  std::getline(f, line);
  if (line != "end_header") throw IOError(path + ": missing end_header");
  t.data.resize(std::size_t(t.n) * t.n * t.n);
  read_f64le(f, reinterpret_cast<double*>(t.data.data()), 2 * t.data.size(), path);
  return t;
}

void save_fourier_spherical(const calderon::SphericalZGrid& g, const std::string& path) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IOError("cannot write " + tmp);
    f.precision(17);
    f << "eit3d-scattering-spherical v1\n";
    f << "Tz " << g.Tz << "\nnodes " << g.nr << " " << g.nth << " " << g.nph << "\n";
    f << "moll_t " << g.moll_t << "\nend_header\n";
    write_f64le(f, reinterpret_cast<const double*>(g.data.data()), 2 * g.data.size());
  }
  std::filesystem::rename(tmp, path);
}

calderon::SphericalZGrid load_fourier_spherical(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IOError("cannot open " + path);
  expect_magic(f, "eit3d-scattering-spherical v1", path);
  calderon::SphericalZGrid g;
  g.Tz = std::stod(next_field(f, "Tz", path));
  {
    std::istringstream ss(next_field(f, "nodes", path));
    ss >> g.nr >> g.nth >> g.nph;
  }
  g.moll_t = std::stod(next_field(f, "moll_t", path));
  g.check_parity();
  std::string line;
  std::getline(f, line);
  if (line != "end_header") throw IOError(path + ": missing end_header");
  g.data.resize(std::size_t(g.nr) * g.nth * g.nph);
  read_f64le(f, reinterpret_cast<double*>(g.data.data()), 2 * g.data.size(), path);
  return g;
}

namespace {

// blue-white-red diverging map on [-1, 1]
void colormap(double t, unsigned char rgb[3]) {
  t = std::clamp(t, -1.0, 1.0);
  double r, g, b;
  if (t < 0) {
    r = 1.0 + t;
    g = 1.0 + t;
    b = 1.0;
  } else {
    r = 1.0;
    g = 1.0 - t;
    b = 1.0 - t;
  }
  rgb[0] = static_cast<unsigned char>(std::lround(255 * r));
  rgb[1] = static_cast<unsigned char>(std::lround(255 * g));
  rgb[2] = static_cast<unsigned char>(std::lround(255 * b));
}

void write_ppm(const std::string& path, const std::vector<double>& img, int w, int h,
               double center, double halfspan) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IOError("cannot write " + tmp);
    f << "P6\n" << w << " " << h << "\n255\n";
    for (int row = 0; row < h; ++row)
      for (int col = 0; col < w; ++col) {
        unsigned char rgb[3];
        colormap((img[std::size_t(row) * w + col] - center) / halfspan, rgb);
        f.write(reinterpret_cast<char*>(rgb), 3);
      }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void save_slices(const phantom::VolumeGrid& g, bool imag_part, double center,
                 const std::string& path_prefix) {
  const auto& n = g.spec.n;
  auto value = [&](int i, int j, int k) {
    return imag_part ? g.at(i, j, k).imag() : g.at(i, j, k).real();
  };
  double halfspan = 1e-12;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (g.mask[i])
      halfspan = std::max(halfspan, std::abs((imag_part ? g.data[i].imag() : g.data[i].real()) -
                                             center));
  // planes through the node nearest the volume center
  int ci = n[0] / 2, cj = n[1] / 2, ck = n[2] / 2;
  struct Plane {
    const char* tag;
    int w, h;
  };
  std::vector<double> img;
  // x1x2 plane (k = ck)
  img.assign(std::size_t(n[0]) * n[1], 0.0);
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j) img[std::size_t(j) * n[0] + i] = value(i, j, ck);
  write_ppm(path_prefix + "_x1x2.ppm", img, n[0], n[1], center, halfspan);
  // x1x3 plane (j = cj)
  img.assign(std::size_t(n[0]) * n[2], 0.0);
  for (int i = 0; i < n[0]; ++i)
    for (int k = 0; k < n[2]; ++k) img[std::size_t(k) * n[0] + i] = value(i, cj, k);
  write_ppm(path_prefix + "_x1x3.ppm", img, n[0], n[2], center, halfspan);
  // x2x3 plane (i = ci)
  img.assign(std::size_t(n[1]) * n[2], 0.0);
  for (int j = 0; j < n[1]; ++j)
    for (int k = 0; k < n[2]; ++k) img[std::size_t(k) * n[1] + j] = value(ci, j, k);
  write_ppm(path_prefix + "_x2x3.ppm", img, n[1], n[2], center, halfspan);

  std::ostringstream side;
  side.precision(17);
  side << "color scale: diverging blue-white-red, symmetric about " << center << "\n";
  side << "limits " << center - halfspan << " " << center + halfspan << "\n";
  side << "planes x1x2(k=" << ck << ") x1x3(j=" << cj << ") x2x3(i=" << ci << ")\n";
  atomic_write_text(path_prefix + "_slices.txt", side.str());
}

namespace {
std::string fmt_paired(const std::vector<metrics::PairedMetric>& v, const char* cls,
                       const std::vector<std::string>& labels) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::string label = i < labels.size() ? labels[i] : (std::string(cls) + std::to_string(i + 1));
    s << "  " << cls << " " << label << " LE ";
    if (v[i].le)
      s << *v[i].le;
    else
      s << "N/A";
    s << " RVR ";
    if (v[i].rvr)
      s << *v[i].rvr;
    else
      s << "N/A";
    s << "\n";
  }
  return s.str();
}
}  // namespace

std::string format_report(const metrics::MetricsReport& rep) {
  std::ostringstream f;
  f.precision(10);
  f << "eit3d-metrics v1\n";
  f << "method " << rep.method << "\n";
  f << "phantom " << rep.phantom_name << "\n";
  f << "L " << rep.L << "\neta " << rep.eta << "\n";
  f << "config_hash " << rep.config_hash << "\n";
  auto channel = [&](const metrics::ChannelReport& c, const char* tag) {
    f << "channel " << tag << "\n";
    f << "  DR ";
    if (c.dr_valid)
      f << c.dr << " %";
    else
      f << "N/A";
    f << "\n  MSE " << c.mse << "\n  MS-SSIM " << c.msssim << "\n";
    // truth-derived labels: conductive ordered by volume, resistive likewise
    std::vector<std::string> clab, rlab;
    if (rep.phantom_name == "T2A" || rep.phantom_name == "T2B") {
      clab = {"heart"};
      rlab = {"lung1", "lung2"};
    } else if (rep.phantom_name == "T3") {
      clab = {"conductor"};
      rlab = {"resistor"};
    } else {
      clab = {"target"};
      rlab = {"target"};
    }
    f << fmt_paired(c.conductive, "conductive", clab);
    f << fmt_paired(c.resistive, "resistive", rlab);
  };
  channel(rep.real_part, "re");
  if (rep.imag_part) channel(*rep.imag_part, "im");
  return f.str();
}

void save_report(const metrics::MetricsReport& rep, const std::string& path) {
  atomic_write_text(path, format_report(rep));
}

void dump_dnmap(const dnmap::DiscreteDNMap& map, const std::string& path_prefix) {
  auto dump = [&](const Eigen::MatrixXcd& m, const char* tag) {
    std::ostringstream f;
    f.precision(17);
    f << "eit3d-matrix v1\nname " << tag << "\nrows " << m.rows() << "\ncols " << m.cols()
      << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        f << m(i, j).real() << " " << m(i, j).imag() << (j + 1 < m.cols() ? " " : "");
      f << "\n";
    }
    atomic_write_text(path_prefix + "_" + tag + ".txt", f.str());
  };
  dump(map.Q, "Q");
  dump(map.S, "S");
  dump(map.R, "R");
  dump(map.Lmat, "L");
}

}  // namespace eit3d::io
