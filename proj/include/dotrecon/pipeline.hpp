#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dotrecon/cosamp.hpp"
#include "dotrecon/forward.hpp"
#include "dotrecon/io.hpp"
#include "dotrecon/mbll.hpp"
#include "dotrecon/metrics.hpp"

namespace dot {

// Everything a run depends on; serialised verbatim into provenance hashes.
struct RunConfig {
  std::filesystem::path phantom_path;
  std::size_t n_sources = 12;
  std::size_t n_detectors = 16;
  std::vector<double> depths{1.1};
  ForwardOptions forward;
  ReconConfig recon;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t sparsity_k = kDefaultSparsity;
  std::size_t cosamp_max_iters = 50;
  std::size_t n_planes = kDefaultPlanes;
  bool export_planes = false;
  LocalizeOptions localize;
  std::filesystem::path output_dir = "out";

  // Throws DomainError naming the first out-of-range parameter.
  void validate() const;
};

std::string run_config_to_json(const RunConfig& config);
// Keys absent from the text keep the values already in `base`.
RunConfig run_config_from_json(std::string_view json_text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
std::string config_hash(const RunConfig& config);

// One measurement CSV per configured depth, returned in depth order.
std::vector<std::filesystem::path> cmd_simulate(const RunConfig& config);

// Map CSV, PGM and PGM sidecar for each measurement file.
std::vector<std::filesystem::path> cmd_reconstruct(
    const RunConfig& config, const std::vector<std::filesystem::path>& measurement_files);

// Raw volume plus sidecar (and per-plane PGMs when export_planes is set).
// Needs at least two measurement files at distinct depths.
std::vector<std::filesystem::path> cmd_reconstruct3d(
    const RunConfig& config, const std::vector<std::filesystem::path>& measurement_files);

// Coarse and upsampled CoSaMP maps for one measurement file.
std::vector<std::filesystem::path> cmd_cosamp(const RunConfig& config,
                                              const std::filesystem::path& measurement_file);

// Metric report JSON for a map CSV against the configured phantom.
std::filesystem::path cmd_metrics(const RunConfig& config, const std::filesystem::path& map_file);

// Per-channel curve samples for one measurement file.
std::filesystem::path cmd_paths(const RunConfig& config,
                                const std::filesystem::path& measurement_file);

struct MethodResult {
  std::string method;
  Grid2D map;                  // upsampled, same grid as the truth raster
  MetricReport report;
  std::vector<Blob> reported;  // blobs listed in the location column
};

struct Comparison {
  Grid2D truth;
  std::vector<Vec2> truth_centers;
  MethodResult curved_beam;
  MethodResult cosamp;
  CosampResult cosamp_detail;
};

// Curved-beam back-projection and CoSaMP on the same measurements, both
// scored against the phantom rasterised on the upsampled grid.
Comparison compare_methods(const RunConfig& config, const Phantom& phantom,
                           const MeasurementFile& data);

std::vector<MetricRow> comparison_rows(const Comparison& comparison);
// CSV with columns method,location,mu_a,mse,ssim,psnr,config_hash.
std::string comparison_csv(const Comparison& comparison, std::string_view hash);

std::filesystem::path cmd_compare(const RunConfig& config,
                                  const std::filesystem::path& measurement_file);

}  // namespace dot
