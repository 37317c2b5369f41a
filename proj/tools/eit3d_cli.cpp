// eit3d command line: synth | recon | metrics | pipeline
#include <CLI11.hpp>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "eit3d/dbar.hpp"
#include "eit3d/calderon.hpp"
#include "eit3d/dnmap.hpp"
#include "eit3d/errors.hpp"
#include "eit3d/forward.hpp"
#include "eit3d/io.hpp"
#include "eit3d/metrics.hpp"
#include "eit3d/parallel.hpp"
#include "eit3d/rng.hpp"

namespace fs = std::filesystem;
using namespace eit3d;
using cplx = std::complex<double>;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIO = 4;

struct SynthConfig {
  std::string phantom = "T1";
  std::string phantom_file;
  int L = 32;
  int skip = 0;
  double amplitude = 1e-3;
  double r_domain = 1.0;
  double r_elec = 0.05;
  double eta = 0.0;
  std::uint64_t seed = 1;
  std::string forward_model = "auto";  // auto | radial | fd
  int fd_grid = 64;
  int lmax_kernel = 4000;
  std::string out = ".";
};

struct ReconConfig {
  std::string method = "dbar";  // dbar | calderon | texp-calderon
  std::string data_dir = ".";
  std::string out = ".";
  // dbar family
  double txi = 7.5;
  int nxi = 15;
  double kappa_mult = 1.0;
  // calderon
  double tz = 1.3;
  double moll_t = 0.1;
  int ntheta = 30;
  std::string zgrid = "default";  // Simpson intervals; 10,8,14 real / 10,10,20 complex
  // shared
  int solver_grid = 64;
  int output_grid = 128;
  bool auto_trunc = false;
  bool save_scattering = false;
  bool dump_dnmap = false;
  bool paper_weight = false;
  double weight = 1.0;
  double tol = 1e-8;
};

std::uint64_t hash_text(const std::string& s) { return fnv1a(s.data(), s.size()); }

phantom::Phantom resolve_phantom(const std::string& name, const std::string& file) {
  if (!file.empty()) return phantom::load_phantom(file);
  return phantom::make_phantom(phantom::phantom_by_name(name));
}

std::string canonical_synth(const SynthConfig& c) {
  std::ostringstream s;
  s << "synth phantom=" << c.phantom << " file=" << c.phantom_file << " L=" << c.L
    << " skip=" << c.skip << " amplitude=" << c.amplitude << " r_domain=" << c.r_domain
    << " r_elec=" << c.r_elec << " eta=" << c.eta << " seed=" << c.seed
    << " forward=" << c.forward_model << " fd_grid=" << c.fd_grid
    << " lmax_kernel=" << c.lmax_kernel;
  return s.str();
}

std::string canonical_recon(const ReconConfig& c) {
  std::ostringstream s;
  s << "recon method=" << c.method << " txi=" << c.txi << " nxi=" << c.nxi
    << " kappa_mult=" << c.kappa_mult << " tz=" << c.tz << " moll_t=" << c.moll_t
    << " ntheta=" << c.ntheta << " zgrid=" << c.zgrid << " solver_grid=" << c.solver_grid
    << " output_grid=" << c.output_grid << " weight=" << c.weight
    << " paper_weight=" << c.paper_weight;
  return s.str();
}

int run_synth(const SynthConfig& cfg) {
  fs::create_directories(cfg.out);
  auto layout = geom::place_electrodes(cfg.L, cfg.r_domain, cfg.r_elec);
  io::save_layout(layout, (fs::path(cfg.out) / "layout.txt").string());
  auto patterns = forward::pairwise_patterns(cfg.L, cfg.skip, cfg.amplitude);

  phantom::Phantom ph = resolve_phantom(cfg.phantom, cfg.phantom_file);
  bool radial_ok = true;
  phantom::RadialLayers layers;
  try {
    layers = phantom::radial_profile(ph);
  } catch (const Error&) {
    radial_ok = false;
  }
  std::string fw = cfg.forward_model;
  if (fw == "auto") fw = radial_ok ? "radial" : "fd";
  if (fw == "radial" && !radial_ok)
    throw ConfigError("synth: radial forward requested for a non-radial phantom");

  forward::VoltageMatrix vg, v1;
  phantom::RadialLayers ref_layers;
  ref_layers.radii = {0.0, cfg.r_domain};
  ref_layers.values = {cplx(1.0)};
  if (fw == "radial") {
    forward::RadialForwardOptions opts;
    opts.lmax_kernel = cfg.lmax_kernel;
    vg = forward::synth_voltages_radial(layers, layout, patterns, opts);
    v1 = forward::synth_voltages_radial(ref_layers, layout, patterns, opts);
  } else {
    forward::FDForwardOptions opts;
    opts.grid_n = cfg.fd_grid;
    vg = forward::synth_voltages_general(ph, layout, patterns, opts);
    phantom::Phantom ref;
    ref.background = 1.0;
    ref.domain_radius = cfg.r_domain;
    v1 = forward::synth_voltages_general(ref, layout, patterns, opts);
  }
  // the homogeneous reference is never noised
  v1.is_reference = true;
  v1.seed = cfg.seed;
  if (cfg.eta > 0) vg = forward::add_noise(vg, cfg.eta, cfg.seed);
  vg.seed = cfg.seed;

  io::save_voltages(vg, (fs::path(cfg.out) / "v_meas.txt").string());
  io::save_voltages(v1, (fs::path(cfg.out) / "v_ref.txt").string());
  std::printf("synth: wrote %s/{layout.txt,v_meas.txt,v_ref.txt} (forward=%s, config %016llx)\n",
              cfg.out.c_str(), fw.c_str(),
              static_cast<unsigned long long>(hash_text(canonical_synth(cfg))));
  return 0;
}

phantom::GridSpec cube_grid(int n, double half) {
  phantom::GridSpec g;
  g.n = {n, n, n};
  g.lo = {-half, -half, -half};
  g.hi = {half, half, half};
  return g;
}

struct ReconResult {
  double used_trunc = 0;
};

ReconResult run_recon(const ReconConfig& cfg) {
  ReconResult result;
  fs::create_directories(cfg.out);
  auto layout = io::load_layout((fs::path(cfg.data_dir) / "layout.txt").string());
  auto vg = io::load_voltages((fs::path(cfg.data_dir) / "v_meas.txt").string());
  auto v1 = io::load_voltages((fs::path(cfg.data_dir) / "v_ref.txt").string());
  if (vg.layout_hash != layout.hash() || v1.layout_hash != layout.hash())
    throw ConfigError("recon: voltage files do not match layout.txt");
  auto patterns = forward::pairwise_patterns(layout.L(), vg.skip, vg.amplitude);

  cplx gb = dnmap::gamma_best(v1, vg);
  auto mg = dnmap::build_map(patterns, vg);
  auto m1 = dnmap::build_map(patterns, v1);
  dnmap::scale_dn(mg, gb);
  dnmap::scale_dn(m1, cplx(1.0));
  std::printf("recon: gamma_best = %.6g%+.6gi\n", gb.real(), gb.imag());
  if (cfg.dump_dnmap) {
    io::dump_dnmap(mg, (fs::path(cfg.out) / "dnmap_gamma").string());
    io::dump_dnmap(m1, (fs::path(cfg.out) / "dnmap_ref").string());
  }

  const std::uint64_t chash = hash_text(canonical_recon(cfg));
  phantom::GridSpec solver = cube_grid(cfg.solver_grid, layout.radius_domain);
  phantom::GridSpec output = cube_grid(cfg.output_grid, layout.radius_domain);
  phantom::VolumeGrid sigma;
  const bool complex_data = vg.V.imag().cwiseAbs().maxCoeff() > 0;

  if (cfg.method == "dbar" || cfg.method == "texp-calderon") {
    dbar::TexpOptions topts;
    topts.T_xi = cfg.txi;
    topts.n_xi = cfg.nxi;
    topts.kappa_mult = cfg.kappa_mult;
    topts.weight = cfg.weight;
    if (cfg.auto_trunc) {
      topts.T_xi = dbar::auto_truncation_radius(mg, m1, layout, 3.0, 16.0, cfg.kappa_mult);
      std::printf("recon: auto-truncation chose T_xi = %.1f\n", topts.T_xi);
    }
    result.used_trunc = topts.T_xi;
    auto t = dbar::texp_volume(mg, m1, layout, topts);
    if (cfg.save_scattering)
      io::save_fourier_cartesian(t, (fs::path(cfg.out) / "scattering.bin").string());
    dbar::ReconstructOptions ropts;
    ropts.radius = layout.radius_domain;
    ropts.solver_tol = cfg.tol;
    ropts.output = output;
    if (cfg.method == "dbar") {
      auto q = dbar::inverse_fourier_cartesian(t, solver);
      sigma = dbar::reconstruct_dbar(q, gb, ropts);
    } else {
      sigma = dbar::reconstruct_texp_calderon(t, gb, solver, ropts);
    }
  } else if (cfg.method == "calderon") {
    calderon::SphericalZGrid zg;
    // complex admittivity data defaults to the finer (10,10,20) z-grid
    std::string zspec = cfg.zgrid;
    if (zspec == "default") zspec = complex_data ? "10,10,20" : "10,8,14";
    int i1, i2, i3;
    if (std::sscanf(zspec.c_str(), "%d,%d,%d", &i1, &i2, &i3) != 3)
      throw ConfigError("recon: --zgrid expects three comma-separated interval counts");
    zg.nr = i1 + 1;
    zg.nth = i2 + 1;
    zg.nph = i3 + 1;
    zg.Tz = cfg.tz;
    zg.moll_t = cfg.moll_t;
    if (cfg.auto_trunc) {
      zg.Tz = calderon::auto_truncation_radius(mg, m1, layout, 1.0, 3.0, cfg.ntheta);
      std::printf("recon: auto-truncation chose T_z = %.1f\n", zg.Tz);
    }
    result.used_trunc = zg.Tz;
    calderon::FhatOptions fo;
    fo.n_theta = cfg.ntheta;
    fo.weight = cfg.weight;
    fo.paper_weight = cfg.paper_weight;
    auto F = calderon::fhat_electrode(mg, m1, layout, zg, fo);
    if (cfg.save_scattering)
      io::save_fourier_spherical(F, (fs::path(cfg.out) / "scattering.bin").string());
    auto dsig = calderon::inverse_fourier_spherical(F, solver);
    sigma = calderon::reconstruct_calderon(dsig, gb, output);
  } else {
    throw ConfigError("recon: unknown method '" + cfg.method + "'");
  }

  std::string volpath = (fs::path(cfg.out) / ("recon_" + cfg.method + ".vol")).string();
  io::save_volume(sigma, volpath, chash, canonical_recon(cfg));
  io::save_slices(sigma, false, gb.real(), (fs::path(cfg.out) / ("recon_" + cfg.method)).string());
  bool has_imag = false;
  for (auto v : sigma.data)
    if (v.imag() != 0) {
      has_imag = true;
      break;
    }
  if (has_imag)
    io::save_slices(sigma, true, gb.imag(),
                    (fs::path(cfg.out) / ("recon_" + cfg.method + "_imag")).string());
  std::printf("recon: wrote %s (config %016llx)\n", volpath.c_str(),
              static_cast<unsigned long long>(chash));
  return result;
}

int run_metrics(const std::string& recon_path, const std::string& phantom_name,
                const std::string& phantom_file, double thr_c, double thr_r,
                const std::string& out) {
  std::uint64_t chash = 0;
  auto recon = io::load_volume(recon_path, &chash);
  phantom::Phantom ph = resolve_phantom(phantom_name, phantom_file);
  auto truth = phantom::eval_phantom(ph, recon.spec);
  // background estimate for fills/segmentation: ball mean of the reconstruction
  cplx gb(0);
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < recon.data.size(); ++i)
    if (recon.mask[i]) {
      gb += recon.data[i];
      ++cnt;
    }
  gb /= double(cnt);
  metrics::MetricsOptions mopts;
  mopts.thr_conductive = thr_c;
  mopts.thr_resistive = thr_r;
  auto rep = metrics::evaluate(recon, truth, gb, ph.background, mopts);
  rep.method = "volume";
  rep.phantom_name = phantom_name;
  rep.L = 0;
  rep.config_hash = chash;
  io::save_report(rep, out);
  std::printf("%s", io::format_report(rep).c_str());
  return 0;
}

struct PipelineCell {
  int L;
  double eta;
  std::string method;
  double txi, tz;
};

int run_pipeline(const std::string& phantom_name, const std::vector<int>& electrodes,
                 const std::vector<double>& noises, const std::vector<std::string>& methods,
                 const std::vector<double>& txis, const std::vector<double>& tzs,
                 std::uint64_t seed, int fd_grid, bool auto_trunc, const std::string& out) {
  fs::create_directories(out);
  // one sweep axis: noise when more than one eta is given, else electrodes
  std::vector<PipelineCell> cells;
  bool noise_sweep = noises.size() > 1 || electrodes.size() == 1;
  std::size_t naxis = noise_sweep ? noises.size() : electrodes.size();
  for (std::size_t i = 0; i < naxis; ++i)
    for (const auto& m : methods) {
      PipelineCell c;
      c.L = noise_sweep ? electrodes.at(0) : electrodes.at(i);
      c.eta = noise_sweep ? noises.at(i) : noises.at(0);
      c.method = m;
      c.txi = txis.empty() ? 7.5 : txis.at(std::min(i, txis.size() - 1));
      c.tz = tzs.empty() ? 1.3 : tzs.at(std::min(i, tzs.size() - 1));
      cells.push_back(c);
    }

  // synthesize shared data first (serial; the heavy FD runs reuse the cache),
  // then reconstruct/evaluate the cells in a worker pool
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto& cell = cells[ci];
    std::string datadir =
        out + "/data_L" + std::to_string(cell.L) + "_eta" + std::to_string(cell.eta);
    if (fs::exists(datadir + "/v_meas.txt")) continue;
    SynthConfig scfg;
    scfg.phantom = phantom_name;
    scfg.L = cell.L;
    scfg.eta = cell.eta;
    scfg.seed = seed;
    scfg.fd_grid = fd_grid;
    scfg.out = datadir;
    run_synth(scfg);
  }

  std::vector<std::string> rows(cells.size());
  std::atomic<int> failures{0};
  parallel_for(cells.size(), [&](std::size_t ci) {
    const auto& cell = cells[ci];
    try {
      std::string datadir =
          out + "/data_L" + std::to_string(cell.L) + "_eta" + std::to_string(cell.eta);
      ReconConfig rcfg;
      rcfg.method = cell.method;
      rcfg.data_dir = datadir;
      rcfg.out = out + "/cell_" + std::to_string(ci);
      rcfg.txi = cell.txi;
      rcfg.tz = cell.tz;
      rcfg.auto_trunc = auto_trunc;
      ReconResult rres = run_recon(rcfg);
      std::string volpath = rcfg.out + "/recon_" + cell.method + ".vol";
      std::uint64_t chash = 0;
      auto recon = io::load_volume(volpath, &chash);
      auto ph = resolve_phantom(phantom_name, "");
      auto truth = phantom::eval_phantom(ph, recon.spec);
      cplx gb(0);
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < recon.data.size(); ++i)
        if (recon.mask[i]) {
          gb += recon.data[i];
          ++cnt;
        }
      gb /= double(cnt);
      auto rep = metrics::evaluate(recon, truth, gb, ph.background);
      std::ostringstream row;
      row.precision(6);
      row << cell.method << " " << cell.L << " " << cell.eta << " " << rres.used_trunc << " ";
      if (rep.real_part.dr_valid)
        row << rep.real_part.dr;
      else
        row << "N/A";
      row << " " << rep.real_part.mse << " " << rep.real_part.msssim;
      auto emit = [&](const std::vector<metrics::PairedMetric>& v, const char* cls) {
        for (const auto& pm : v) {
          row << " " << cls << ":LE=";
          if (pm.le)
            row << *pm.le;
          else
            row << "N/A";
          row << ",RVR=";
          if (pm.rvr)
            row << *pm.rvr;
          else
            row << "N/A";
        }
      };
      emit(rep.real_part.conductive, "cond");
      emit(rep.real_part.resistive, "res");
      rows[ci] = row.str();
    } catch (const Error& e) {
      rows[ci] = cell.method + " " + std::to_string(cell.L) + " " + std::to_string(cell.eta) +
                 " FAILED: " + e.what();
      ++failures;
    }
  });

  std::ostringstream table;
  table << "eit3d-pipeline v1\nphantom " << phantom_name << "\nseed " << seed << "\n";
  table << "# method L eta trunc DR[%] MSE MS-SSIM targets...\n";
  for (const auto& r : rows) table << r << "\n";
  io::atomic_write_text(out + "/pipeline_table.txt", table.str());
  std::printf("pipeline: %zu cells, %d failures -> %s/pipeline_table.txt\n", cells.size(),
              failures.load(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "3D EIT reconstruction toolkit: direct D-bar and Calderon methods on spherical domains"};
  app.set_config("--config", "", "read options from an INI file");
  app.require_subcommand(1);

  SynthConfig sc;
  auto* synth = app.add_subcommand("synth", "synthesize electrode voltage data");
  synth->add_option("--phantom", sc.phantom, "T1|T2A|T2B|T3");
  synth->add_option("--phantom-file", sc.phantom_file, "scene file (overrides --phantom)");
  synth->add_option("--L", sc.L, "electrode count");
  synth->add_option("--skip", sc.skip, "pairwise skip count");
  synth->add_option("--amplitude", sc.amplitude, "current amplitude (A)");
  synth->add_option("--r-domain", sc.r_domain, "domain radius (m)");
  synth->add_option("--r-elec", sc.r_elec, "electrode radius (m)");
  synth->add_option("--eta", sc.eta, "relative mean Gaussian noise level");
  synth->add_option("--seed", sc.seed, "noise seed");
  synth->add_option("--forward", sc.forward_model, "auto|radial|fd");
  synth->add_option("--fd-grid", sc.fd_grid, "FD solver nodes per axis");
  synth->add_option("--lmax-kernel", sc.lmax_kernel, "radial kernel bandlimit");
  synth->add_option("--out", sc.out, "output directory")->required();

  ReconConfig rc;
  auto* recon = app.add_subcommand("recon", "reconstruct admittivity from voltage files");
  recon->add_option("--method", rc.method, "dbar|calderon|texp-calderon");
  recon->add_option("--data", rc.data_dir, "directory with layout.txt, v_meas.txt, v_ref.txt")
      ->required();
  recon->add_option("--out", rc.out, "output directory")->required();
  recon->add_option("--txi", rc.txi, "scattering truncation radius T_xi");
  recon->add_option("--nxi", rc.nxi, "xi-grid nodes per axis (odd)");
  recon->add_option("--kappa-mult", rc.kappa_mult, "kappa multiplier (>= 1)");
  recon->add_option("--tz", rc.tz, "Fourier truncation radius T_z");
  recon->add_option("--moll-t", rc.moll_t, "mollifier parameter t");
  recon->add_option("--ntheta", rc.ntheta, "Theta-average sample count");
  recon->add_option("--zgrid", rc.zgrid, "z-grid Simpson intervals: nr,ntheta,nphi");
  recon->add_option("--solver-grid", rc.solver_grid, "solver nodes per axis");
  recon->add_option("--output-grid", rc.output_grid, "output nodes per axis");
  recon->add_flag("--auto-trunc", rc.auto_trunc, "choose the truncation radius by shell blow-up");
  recon->add_flag("--save-scattering", rc.save_scattering, "dump the Fourier-domain data");
  recon->add_flag("--dump-dnmap", rc.dump_dnmap, "dump Q, S, R, Lmat as numeric text");
  recon->add_flag("--paper-weight", rc.paper_weight,
                  "use the dphi*dtheta/A_e electrode weight in Calderon's method");
  recon->add_option("--weight", rc.weight, "surface weight per electrode in the quadratic forms");
  recon->add_option("--tol", rc.tol, "elliptic solver tolerance");

  std::string m_recon, m_phantom = "T1", m_phantom_file, m_out = "report.txt";
  double thr_c = 0.5, thr_r = 0.5;
  auto* met = app.add_subcommand("metrics", "evaluate a reconstruction against a phantom");
  met->add_option("--recon", m_recon, "volume file")->required();
  met->add_option("--phantom", m_phantom, "truth phantom name");
  met->add_option("--phantom-file", m_phantom_file, "truth scene file");
  met->add_option("--thr-c", thr_c, "conductive threshold");
  met->add_option("--thr-r", thr_r, "resistive threshold");
  met->add_option("--out", m_out, "report path");

  std::string p_phantom = "T2B";
  std::vector<int> p_electrodes{128};
  std::vector<double> p_noises{0.0};
  std::vector<std::string> p_methods{"dbar", "calderon"};
  std::vector<double> p_txis, p_tzs;
  std::uint64_t p_seed = 1;
  int p_fd_grid = 48;
  bool p_auto_trunc = false;
  std::string p_out = "pipeline_out";
  auto* pipe = app.add_subcommand("pipeline", "run a sweep and aggregate a metric table");
  pipe->add_option("--phantom", p_phantom, "phantom name");
  pipe->add_option("--electrodes", p_electrodes, "electrode sweep")->delimiter(',');
  pipe->add_option("--noise", p_noises, "noise sweep")->delimiter(',');
  pipe->add_option("--methods", p_methods, "methods to run")->delimiter(',');
  pipe->add_option("--txi-list", p_txis, "per-cell T_xi values")->delimiter(',');
  pipe->add_option("--tz-list", p_tzs, "per-cell T_z values")->delimiter(',');
  pipe->add_option("--seed", p_seed, "noise seed");
  pipe->add_option("--fd-grid", p_fd_grid, "FD synthesis grid");
  pipe->add_flag("--auto-trunc", p_auto_trunc, "pick truncation radii by shell blow-up");
  pipe->add_option("--out", p_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_synth(sc);
    if (*recon) {
      run_recon(rc);
      return 0;
    }
    if (*met) return run_metrics(m_recon, m_phantom, m_phantom_file, thr_c, thr_r, m_out);
    if (*pipe)
      return run_pipeline(p_phantom, p_electrodes, p_noises, p_methods, p_txis, p_tzs, p_seed,
                          p_fd_grid, p_auto_trunc, p_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const IOError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIO;
  }
  return 0;
}
