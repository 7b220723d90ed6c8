#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dotrecon/geometry.hpp"
#include "dotrecon/grid.hpp"

namespace dot {

double mse(const Grid2D& recon, const Grid2D& truth);

// PSNR in dB; identical images carry no finite value.
struct Psnr {
  bool infinite = false;
  double db = 0.0;
};

Psnr psnr_from_mse(double peakval, double mse_value);
// peakval defaults to the maximum of the truth grid.
Psnr psnr(const Grid2D& recon, const Grid2D& truth, std::optional<double> peakval = {});

struct SsimConstants {
  double k1 = 0.01;
  double k2 = 0.03;
};

// Single-window SSIM over the whole image with C1 = (k1 L)^2, C2 = (k2 L)^2
// and unbiased (N-1) sample variances and covariance.
double ssim_global(const Grid2D& x, const Grid2D& y, double dynamic_range,
                   SsimConstants constants = {});

struct Blob {
  Vec2 center;        // cm
  double peak = 0.0;  // map units
  std::size_t cells = 0;
};

struct LocalizeOptions {
  double threshold_fraction = 0.5;
  // Maps whose peak rises less than this fraction above the background
  // level are treated as homogeneous.
  double min_relative_contrast = 0.0;
};

// Background = median of the map. Cells above
// background + fraction * (max - background) are grouped by 8-connectivity;
// each group reports the centroid weighted by (value - background).
// Blobs are returned strongest first. Grid node (r, c) sits at
// (c * extent.x / (cols-1), r * extent.y / (rows-1)).
std::vector<Blob> localize(const Grid2D& map, Vec2 extent, const LocalizeOptions& options = {});

double median(std::vector<double> values);

// Ground truth at depth z sampled on a (rows x cols) node grid covering the
// cross-section bounding box; nodes outside a disk take the background.
Grid2D rasterize_truth(const Phantom& phantom, double depth_z, std::size_t rows,
                       std::size_t cols);

// Distance from each truth centre to its matched blob; unmatched centres get
// +infinity. Only the strongest truth.size() blobs take part, paired greedily
// by distance.
std::vector<double> match_centers(const std::vector<Vec2>& truth, const std::vector<Blob>& found);

struct MetricReport {
  double mse = 0.0;
  Psnr psnr;
  double ssim = 0.0;
  std::vector<Vec2> inclusion_centers_found;
  std::vector<double> center_errors;
  double peak_mu_a = 0.0;
};

// Dynamic range for SSIM is max - min of the truth (its max when flat, 1 when
// all zero).
MetricReport evaluate_map(const Grid2D& recon, const Grid2D& truth, Vec2 extent,
                          const std::vector<Vec2>& truth_centers,
                          const LocalizeOptions& options = {});

// One row of a method-comparison table: strings are rendered verbatim.
struct MetricRow {
  std::string method;
  std::string location;
  std::string mu_a;
  std::string mse;
  std::string ssim;
  std::string psnr;
};

// Header: method,location,mu_a,mse,ssim,psnr (extra trailing columns ignored).
std::vector<MetricRow> parse_metric_rows(const std::string& csv_text);
std::string render_metric_table(const std::vector<MetricRow>& rows);

}  // namespace dot
