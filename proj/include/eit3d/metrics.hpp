#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "eit3d/phantom.hpp"

namespace eit3d::metrics {

using cplx = std::complex<double>;
using phantom::GridSpec;
using phantom::VolumeGrid;

// One connected component of a thresholded class.
struct TargetComponent {
  Eigen::Vector3d centroid{0, 0, 0};  // meters
  std::size_t voxels = 0;
};

// Threshold segmentation of one scalar channel (26-connectivity components;
// components an order of magnitude smaller than the largest are dropped).
struct SegmentedTargets {
  std::vector<TargetComponent> conductive;  // sorted by volume, descending
  std::vector<TargetComponent> resistive;
  double threshold_conductive = 0.5;
  double threshold_resistive = 0.5;
  bool empty() const { return conductive.empty() && resistive.empty(); }
};

// Ratio of reconstructed to true value range inside the ball mask, percent.
// Throws NumericalError when the truth channel is constant.
double dynamic_range(const std::vector<double>& recon, const std::vector<double>& truth,
                     const std::vector<std::uint8_t>& mask);

// Mean square error over the full rectangular volume; outside-ball voxels are
// replaced by the fill values (gamma_best for recon, gamma_b for truth).
double mse(const std::vector<double>& recon, const std::vector<double>& truth,
           const std::vector<std::uint8_t>& mask, double fill_recon, double fill_truth);

// 3-scale MS-SSIM with an 11^3 Gaussian window (sigma 1.5), standard exponent
// weights renormalized to three scales, replicate-padded filtering, dyadic
// 2x2x2 mean pooling between scales. Outside-ball voxels are filled first.
// Data range is taken from the filled truth channel. Requires min dim >= 16.
double msssim3(const GridSpec& spec, const std::vector<double>& recon,
               const std::vector<double>& truth, const std::vector<std::uint8_t>& mask,
               double fill_recon, double fill_truth);

// recon-bg > thr_c * max(recon-bg) marks conductive; recon-bg < thr_r *
// min(recon-bg) marks resistive. Only inside-ball voxels participate.
SegmentedTargets segment(const GridSpec& spec, const std::vector<double>& recon,
                         const std::vector<std::uint8_t>& mask, double background, double thr_c,
                         double thr_r);

// Greedy nearest-centroid pairing within a class; unmatched entries are N/A.
struct PairedMetric {
  int truth_index = -1;  // index into the truth component list
  std::optional<double> le;   // meters
  std::optional<double> rvr;  // voxel-count ratio
};
std::vector<PairedMetric> pair_targets(const std::vector<TargetComponent>& recon,
                                       const std::vector<TargetComponent>& truth);

// Full per-volume report (real and imaginary channels where applicable).
struct ChannelReport {
  double dr = 0;
  double mse = 0;
  double msssim = 0;
  std::vector<PairedMetric> conductive;  // aligned to truth components
  std::vector<PairedMetric> resistive;
  bool dr_valid = true;  // false when truth channel is constant (N/A)
};

struct MetricsReport {
  std::string method, phantom_name;
  int L = 0;
  double eta = 0;
  ChannelReport real_part;
  std::optional<ChannelReport> imag_part;
  std::uint64_t config_hash = 0;
};

struct MetricsOptions {
  double thr_conductive = 0.5;
  double thr_resistive = 0.5;
};

// Evaluate the whole suite for a reconstruction against the sampled truth.
MetricsReport evaluate(const VolumeGrid& recon, const VolumeGrid& truth, cplx gamma_best,
                       cplx gamma_b, const MetricsOptions& opts = {});

}  // namespace eit3d::metrics
