#include "eit3d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eit3d/errors.hpp"

namespace eit3d::metrics {

double dynamic_range(const std::vector<double>& recon, const std::vector<double>& truth,
                     const std::vector<std::uint8_t>& mask) {
  double rmin = std::numeric_limits<double>::infinity(), rmax = -rmin;
  double tmin = rmin, tmax = -rmin;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    rmin = std::min(rmin, recon[i]);
    rmax = std::max(rmax, recon[i]);
    tmin = std::min(tmin, truth[i]);
    tmax = std::max(tmax, truth[i]);
  }
  if (tmax - tmin <= 0) throw NumericalError("dynamic_range: truth channel is constant");
  return (rmax - rmin) / (tmax - tmin) * 100.0;
}

double mse(const std::vector<double>& recon, const std::vector<double>& truth,
           const std::vector<std::uint8_t>& mask, double fill_recon, double fill_truth) {
  if (recon.size() != truth.size() || recon.size() != mask.size())
    throw ConfigError("mse: shape mismatch");
  double s = 0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    double r = mask[i] ? recon[i] : fill_recon;
    double t = mask[i] ? truth[i] : fill_truth;
    s += (r - t) * (r - t);
  }
  return s / double(recon.size());
}

namespace {

struct Vol {
  std::array<int, 3> n;
  std::vector<double> v;
  double& at(int i, int j, int k) { return v[(std::size_t(i) * n[1] + j) * n[2] + k]; }
  double at(int i, int j, int k) const { return v[(std::size_t(i) * n[1] + j) * n[2] + k]; }
};

// separable Gaussian filter, replicate padding
Vol gauss_filter(const Vol& in, const std::vector<double>& kernel) {
  const int r = int(kernel.size() / 2);
  Vol a = in, b = in;
  auto clampi = [](int x, int n) { return std::clamp(x, 0, n - 1); };
  for (int axis = 0; axis < 3; ++axis) {
    const Vol& src = (axis % 2 == 0) ? a : b;
    Vol& dst = (axis % 2 == 0) ? b : a;
    for (int i = 0; i < in.n[0]; ++i)
      for (int j = 0; j < in.n[1]; ++j)
        for (int k = 0; k < in.n[2]; ++k) {
          double s = 0;
          for (int o = -r; o <= r; ++o) {
            int ii = i, jj = j, kk = k;
            if (axis == 0) ii = clampi(i + o, in.n[0]);
            if (axis == 1) jj = clampi(j + o, in.n[1]);
            if (axis == 2) kk = clampi(k + o, in.n[2]);
            s += kernel[o + r] * src.at(ii, jj, kk);
          }
          dst.at(i, j, k) = s;
        }
  }
  return b;  // after 3 passes (a->b, b->a, a->b)
}

Vol downsample2(const Vol& in) {
  Vol out;
  for (int a = 0; a < 3; ++a) out.n[a] = in.n[a] / 2;
  out.v.resize(std::size_t(out.n[0]) * out.n[1] * out.n[2]);
  for (int i = 0; i < out.n[0]; ++i)
    for (int j = 0; j < out.n[1]; ++j)
      for (int k = 0; k < out.n[2]; ++k) {
        double s = 0;
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj)
            for (int dk = 0; dk < 2; ++dk) s += in.at(2 * i + di, 2 * j + dj, 2 * k + dk);
        out.at(i, j, k) = s / 8.0;
      }
  return out;
}

// single-scale SSIM terms: mean luminance l and contrast-structure cs
void ssim_terms(const Vol& x, const Vol& y, double c1, double c2, double& l_out, double& cs_out) {
  std::vector<double> kernel;
  const double sigma = 1.5;
  for (int o = -5; o <= 5; ++o) kernel.push_back(std::exp(-o * o / (2 * sigma * sigma)));
  double ks = 0;
  for (double k : kernel) ks += k;
  for (double& k : kernel) k /= ks;

  Vol mx = gauss_filter(x, kernel), my = gauss_filter(y, kernel);
  Vol xx = x, yy = y, xy = x;
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    xx.v[i] = x.v[i] * x.v[i];
    yy.v[i] = y.v[i] * y.v[i];
    xy.v[i] = x.v[i] * y.v[i];
  }
  Vol sxx = gauss_filter(xx, kernel), syy = gauss_filter(yy, kernel), sxy = gauss_filter(xy, kernel);
  double lsum = 0, cssum = 0;
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    double mux = mx.v[i], muy = my.v[i];
    double vx = std::max(0.0, sxx.v[i] - mux * mux);
    double vy = std::max(0.0, syy.v[i] - muy * muy);
    double cxy = sxy.v[i] - mux * muy;
    lsum += (2 * mux * muy + c1) / (mux * mux + muy * muy + c1);
    cssum += (2 * cxy + c2) / (vx + vy + c2);
  }
  l_out = lsum / double(x.v.size());
  cs_out = cssum / double(x.v.size());
}

}  // namespace

double msssim3(const GridSpec& spec, const std::vector<double>& recon,
               const std::vector<double>& truth, const std::vector<std::uint8_t>& mask,
               double fill_recon, double fill_truth) {
  const int min_dim = std::min({spec.n[0], spec.n[1], spec.n[2]});
  if (min_dim < 16) throw ConfigError("msssim3: volume too small for 3 scales");
  Vol x{spec.n, {}}, y{spec.n, {}};
  x.v.resize(spec.size());
  y.v.resize(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    x.v[i] = mask[i] ? recon[i] : fill_recon;
    y.v[i] = mask[i] ? truth[i] : fill_truth;
  }
  double tmin = *std::min_element(y.v.begin(), y.v.end());
  double tmax = *std::max_element(y.v.begin(), y.v.end());
  double range = (tmax - tmin) > 0 ? (tmax - tmin) : 1.0;
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  // Wang et al. weights for the first three scales, renormalized
  const double w_raw[3] = {0.0448, 0.2856, 0.3001};
  const double wsum = w_raw[0] + w_raw[1] + w_raw[2];

  double result = 1.0;
  for (int s = 0; s < 3; ++s) {
    double l, cs;
    ssim_terms(x, y, c1, c2, l, cs);
    double w = w_raw[s] / wsum;
    if (s == 2)
      result *= std::pow(std::max(l * cs, 0.0), w);  // luminance at the coarsest scale only
    else
      result *= std::pow(std::max(cs, 0.0), w);
    if (s < 2) {
      x = downsample2(x);
      y = downsample2(y);
    }
  }
  return std::clamp(result, 0.0, 1.0);
}

SegmentedTargets segment(const GridSpec& spec, const std::vector<double>& recon,
                         const std::vector<std::uint8_t>& mask, double background, double thr_c,
                         double thr_r) {
  if (thr_c <= 0 || thr_c >= 1 || thr_r <= 0 || thr_r >= 1)
    throw ConfigError("segment: thresholds must lie in (0,1)");
  SegmentedTargets out;
  out.threshold_conductive = thr_c;
  out.threshold_resistive = thr_r;

  double dmax = 0, dmin = 0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (!mask[i]) continue;
    double d = recon[i] - background;
    dmax = std::max(dmax, d);
    dmin = std::min(dmin, d);
  }

  auto components = [&](auto pred) {
    std::vector<TargetComponent> comps;
    std::vector<std::uint8_t> in(spec.size(), 0);
    for (std::size_t i = 0; i < spec.size(); ++i)
      if (mask[i] && pred(recon[i] - background)) in[i] = 1;
    std::vector<std::uint8_t> seen(spec.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < spec.size(); ++start) {
      if (!in[start] || seen[start]) continue;
      TargetComponent tc;
      Eigen::Vector3d csum(0, 0, 0);
      stack.assign(1, start);
      seen[start] = 1;
      while (!stack.empty()) {
        std::size_t f = stack.back();
        stack.pop_back();
        int i = int(f / (std::size_t(spec.n[1]) * spec.n[2]));
        int j = int((f / spec.n[2]) % spec.n[1]);
        int k = int(f % spec.n[2]);
        ++tc.voxels;
        csum += spec.point(i, j, k);
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj)
            for (int dk = -1; dk <= 1; ++dk) {
              if (!di && !dj && !dk) continue;
              int ii = i + di, jj = j + dj, kk = k + dk;
              if (ii < 0 || jj < 0 || kk < 0 || ii >= spec.n[0] || jj >= spec.n[1] ||
                  kk >= spec.n[2])
                continue;
              std::size_t fn = spec.flat(ii, jj, kk);
              if (in[fn] && !seen[fn]) {
                seen[fn] = 1;
                stack.push_back(fn);
              }
            }
      }
      tc.centroid = csum / double(tc.voxels);
      comps.push_back(tc);
    }
    std::sort(comps.begin(), comps.end(),
              [](const TargetComponent& a, const TargetComponent& b) { return a.voxels > b.voxels; });
    // drop components an order of magnitude smaller than the largest
    if (!comps.empty()) {
      std::size_t cutoff = comps.front().voxels / 10;
      comps.erase(std::remove_if(comps.begin(), comps.end(),
                                 [&](const TargetComponent& c) { return c.voxels < cutoff; }),
                  comps.end());
    }
    return comps;
  };

  if (dmax > 0)
    out.conductive = components([&](double d) { return d > thr_c * dmax; });
  if (dmin < 0)
    out.resistive = components([&](double d) { return d < thr_r * dmin; });
  return out;
}

std::vector<PairedMetric> pair_targets(const std::vector<TargetComponent>& recon,
                                       const std::vector<TargetComponent>& truth) {
  std::vector<PairedMetric> out(truth.size());
  for (std::size_t t = 0; t < truth.size(); ++t) out[t].truth_index = int(t);
  std::vector<bool> used_r(recon.size(), false), used_t(truth.size(), false);
  for (std::size_t pairn = 0; pairn < std::min(recon.size(), truth.size()); ++pairn) {
    double best = std::numeric_limits<double>::infinity();
    int br = -1, bt = -1;
    for (std::size_t r = 0; r < recon.size(); ++r) {
      if (used_r[r]) continue;
      for (std::size_t t = 0; t < truth.size(); ++t) {
        if (used_t[t]) continue;
        double d = (recon[r].centroid - truth[t].centroid).norm();
        if (d < best) {
          best = d;
          br = int(r);
          bt = int(t);
        }
      }
    }
    used_r[br] = true;
    used_t[bt] = true;
    out[bt].le = best;
    out[bt].rvr = double(recon[br].voxels) / double(truth[bt].voxels);
  }
  return out;
}

namespace {
ChannelReport evaluate_channel(const GridSpec& spec, const std::vector<double>& recon,
                               const std::vector<double>& truth,
                               const std::vector<std::uint8_t>& mask, double fill_recon,
                               double fill_truth, const MetricsOptions& opts) {
  ChannelReport rep;
  try {
    rep.dr = dynamic_range(recon, truth, mask);
  } catch (const NumericalError&) {
    rep.dr_valid = false;
  }
  rep.mse = mse(recon, truth, mask, fill_recon, fill_truth);
  rep.msssim = msssim3(spec, recon, truth, mask, fill_recon, fill_truth);
  SegmentedTargets sr =
      segment(spec, recon, mask, fill_recon, opts.thr_conductive, opts.thr_resistive);
  SegmentedTargets st = segment(spec, truth, mask, fill_truth, 0.5, 0.5);
  rep.conductive = pair_targets(sr.conductive, st.conductive);
  rep.resistive = pair_targets(sr.resistive, st.resistive);
  return rep;
}
}  // namespace

MetricsReport evaluate(const VolumeGrid& recon, const VolumeGrid& truth, cplx gamma_best,
                       cplx gamma_b, const MetricsOptions& opts) {
  if (!(recon.spec == truth.spec)) throw ConfigError("metrics::evaluate: grid mismatch");
  const std::size_t n = recon.data.size();
  std::vector<double> rr(n), tr(n), ri(n), ti(n);
  for (std::size_t i = 0; i < n; ++i) {
    rr[i] = recon.data[i].real();
    tr[i] = truth.data[i].real();
    ri[i] = recon.data[i].imag();
    ti[i] = truth.data[i].imag();
  }
  MetricsReport rep;
  rep.real_part = evaluate_channel(truth.spec, rr, tr, truth.mask, gamma_best.real(),
                                   gamma_b.real(), opts);
  bool has_imag = false;
  for (std::size_t i = 0; i < n; ++i)
    if (ti[i] != 0) {
      has_imag = true;
      break;
    }
  if (has_imag)
    rep.imag_part = evaluate_channel(truth.spec, ri, ti, truth.mask, gamma_best.imag(),
                                     gamma_b.imag(), opts);
  return rep;
}

}  // namespace eit3d::metrics
