#include "dotrecon/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dotrecon/csv.hpp"
#include "dotrecon/error.hpp"
#include "dotrecon/volume.hpp"
#include "json.hpp"

namespace dot {

using json = nlohmann::ordered_json;

namespace {

template <typename Enum>
struct EnumName {
  Enum value;
  const char* name;
};

constexpr EnumName<CorrectionMode> kCorrection[] = {{CorrectionMode::differential, "differential"},
                                                    {CorrectionMode::corrected, "corrected"}};
constexpr EnumName<ReferenceMode> kReference[] = {{ReferenceMode::per_source, "per_source"},
                                                  {ReferenceMode::global, "global"}};
constexpr EnumName<FillPolicy> kFill[] = {{FillPolicy::min_positive_estimate, "min_positive"},
                                          {FillPolicy::constant, "constant"}};
constexpr EnumName<HelmholtzAbsorption> kAbsorption[] = {
    {HelmholtzAbsorption::physical, "physical"}, {HelmholtzAbsorption::constant, "constant"}};

template <typename Enum, std::size_t N>
const char* name_of(const EnumName<Enum> (&table)[N], Enum v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
Enum value_of(const EnumName<Enum> (&table)[N], const std::string& name, const char* key) {
  for (const auto& e : table) {
    if (name == e.name) return e.value;
  }
  std::string allowed;
  for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : ", ") + e.name;
  throw DomainError(std::string(key) + " must be one of: " + allowed + " (got '" + name + "')");
}

template <typename T>
void read_if(const json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(std::string("run config field '") + key + "': " + e.what());
  }
}

template <typename Enum, std::size_t N>
void read_enum_if(const json& j, const char* key, const EnumName<Enum> (&table)[N], Enum& target) {
  std::string name;
  if (!j.contains(key)) return;
  read_if(j, key, name);
  target = value_of(table, name, key);
}

std::string two_decimals(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string four_significant(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::filesystem::path sibling(const std::filesystem::path& dir, const std::string& prefix,
                              const std::filesystem::path& input, const std::string& ext) {
  return dir / (prefix + input.stem().string() + ext);
}

std::vector<std::filesystem::path> write_map_outputs(const std::filesystem::path& csv_path,
                                                     const MapFile& map) {
  std::filesystem::path pgm = csv_path;
  pgm.replace_extension(".pgm");
  std::filesystem::path sidecar = pgm;
  sidecar += ".json";
  write_text_file(csv_path, map_to_csv(map));
  const PgmImage img = to_pgm(map.map);
  write_text_file(pgm, pgm_bytes(img));
  write_text_file(sidecar, pgm_sidecar_json(img));
  return {csv_path, pgm, sidecar};
}

MethodResult score(std::string method, Grid2D map, const Grid2D& truth, Vec2 extent,
                   const std::vector<Vec2>& truth_centers, const LocalizeOptions& opts) {
  MethodResult r;
  r.method = std::move(method);
  r.report = evaluate_map(map, truth, extent, truth_centers, opts);
  // The table lists one located centre per true target, strongest first.
  auto blobs = localize(map, extent, opts);
  if (blobs.size() > truth_centers.size()) blobs.resize(truth_centers.size());
  r.reported = std::move(blobs);
  r.map = std::move(map);
  return r;
}

MetricRow to_row(const MethodResult& r) {
  MetricRow row;
  row.method = r.method;
  for (std::size_t i = 0; i < r.reported.size(); ++i) {
    if (i) {
      row.location += "; ";
      row.mu_a += "; ";
    }
    row.location += "(" + two_decimals(r.reported[i].center.x) + ", " +
                    two_decimals(r.reported[i].center.y) + ")";
    row.mu_a += two_decimals(r.reported[i].peak);
  }
  row.mse = four_significant(r.report.mse);
  row.ssim = four_significant(r.report.ssim);
  row.psnr = r.report.psnr.infinite ? "inf" : two_decimals(r.report.psnr.db);
  return row;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw DomainError(msg); };
  if (n_sources < 1 || n_detectors < 1) fail("n_sources and n_detectors must be at least 1");
  if (depths.empty()) fail("at least one depth is required");
  if (forward.nx < 16 || forward.ny < 16) fail("grid resolution must be at least 16 nodes");
  if (!(forward.reflection_a > 0.0)) fail("reflection_a must be positive");
  if (!(forward.tolerance > 0.0)) fail("solver tolerance must be positive");
  if (!(recon.kappa > 0.0 && recon.kappa <= 1.0)) fail("kappa must lie in (0, 1]");
  if (recon.n_samples < 3 || recon.n_samples % 2 == 0) fail("n_samples must be odd and >= 3");
  if (recon.upsample_factor < 1) fail("upsample_factor must be at least 1");
  if (noise_sigma < 0.0 || !std::isfinite(noise_sigma)) fail("noise sigma must be >= 0");
  if (sparsity_k < 1) fail("sparsity_k must be at least 1");
  if (n_planes < 2) fail("n_planes must be at least 2");
  if (!(localize.threshold_fraction > 0.0 && localize.threshold_fraction < 1.0)) {
    fail("localize threshold_fraction must lie in (0, 1)");
  }
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["phantom"] = c.phantom_path.generic_string();
  j["n_sources"] = c.n_sources;
  j["n_detectors"] = c.n_detectors;
  j["depths_cm"] = c.depths;
  j["grid_nx"] = c.forward.nx;
  j["grid_ny"] = c.forward.ny;
  j["reflection_a"] = c.forward.reflection_a;
  j["helmholtz_absorption"] = name_of(kAbsorption, c.forward.absorption);
  j["constant_absorption"] = c.forward.constant_absorption;
  j["solver_tolerance"] = c.forward.tolerance;
  j["solver_max_iterations"] = c.forward.max_iterations;
  j["kappa"] = c.recon.kappa;
  j["n_samples"] = c.recon.n_samples;
  j["correction"] = name_of(kCorrection, c.recon.correction);
  j["reference"] = name_of(kReference, c.recon.reference);
  j["clamp_negative"] = c.recon.clamp_negative;
  j["upsample_factor"] = c.recon.upsample_factor;
  j["fill"] = name_of(kFill, c.recon.fill);
  j["fill_value"] = c.recon.fill_value;
  j["noise_sigma"] = c.noise_sigma;
  j["seed"] = c.seed;
  j["sparsity_k"] = c.sparsity_k;
  j["cosamp_max_iters"] = c.cosamp_max_iters;
  j["n_planes"] = c.n_planes;
  j["export_planes"] = c.export_planes;
  j["localize_threshold"] = c.localize.threshold_fraction;
  j["localize_min_contrast"] = c.localize.min_relative_contrast;
  j["output_dir"] = c.output_dir.generic_string();
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(std::string_view json_text, RunConfig c) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::exception& e) {
    throw IoError(std::string("run config: ") + e.what());
  }
  if (!j.is_object()) throw IoError("run config must be a JSON object");
  std::string path;
  if (j.contains("phantom")) {
    read_if(j, "phantom", path);
    c.phantom_path = path;
  }
  read_if(j, "n_sources", c.n_sources);
  read_if(j, "n_detectors", c.n_detectors);
  read_if(j, "depths_cm", c.depths);
  read_if(j, "grid_nx", c.forward.nx);
  read_if(j, "grid_ny", c.forward.ny);
  read_if(j, "reflection_a", c.forward.reflection_a);
  read_enum_if(j, "helmholtz_absorption", kAbsorption, c.forward.absorption);
  read_if(j, "constant_absorption", c.forward.constant_absorption);
  read_if(j, "solver_tolerance", c.forward.tolerance);
  read_if(j, "solver_max_iterations", c.forward.max_iterations);
  read_if(j, "kappa", c.recon.kappa);
  read_if(j, "n_samples", c.recon.n_samples);
  read_enum_if(j, "correction", kCorrection, c.recon.correction);
  read_enum_if(j, "reference", kReference, c.recon.reference);
  read_if(j, "clamp_negative", c.recon.clamp_negative);
  read_if(j, "upsample_factor", c.recon.upsample_factor);
  read_enum_if(j, "fill", kFill, c.recon.fill);
  read_if(j, "fill_value", c.recon.fill_value);
  read_if(j, "noise_sigma", c.noise_sigma);
  read_if(j, "seed", c.seed);
  read_if(j, "sparsity_k", c.sparsity_k);
  read_if(j, "cosamp_max_iters", c.cosamp_max_iters);
  read_if(j, "n_planes", c.n_planes);
  read_if(j, "export_planes", c.export_planes);
  read_if(j, "localize_threshold", c.localize.threshold_fraction);
  read_if(j, "localize_min_contrast", c.localize.min_relative_contrast);
  if (j.contains("output_dir")) {
    read_if(j, "output_dir", path);
    c.output_dir = path;
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  try {
    return run_config_from_json(read_text_file(path), std::move(base));
  } catch (const Error& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

std::string config_hash(const RunConfig& config) {
  return fnv1a_hex(run_config_to_json(config));
}

std::vector<std::filesystem::path> cmd_simulate(const RunConfig& config) {
  config.validate();
  const Phantom phantom = load_phantom(config.phantom_path);
  phantom.validate();
  std::vector<double> depths = config.depths;
  std::sort(depths.begin(), depths.end());
  std::vector<std::filesystem::path> out;
  for (std::size_t k = 0; k < depths.size(); ++k) {
    const OptodeLayout layout =
        build_layout(phantom, config.n_sources, config.n_detectors, depths[k]);
    const NoiseOptions noise{config.noise_sigma, config.seed + k};
    const MeasurementSet set = simulate_measurements(phantom, layout, config.forward, noise);
    const auto path =
        config.output_dir / ("measurements_z" + format_double(depths[k]) + ".csv");
    write_text_file(path, measurements_to_csv(set, layout));
    out.push_back(path);
  }
  return out;
}

std::vector<std::filesystem::path> cmd_reconstruct(
    const RunConfig& config, const std::vector<std::filesystem::path>& measurement_files) {
  config.validate();
  if (measurement_files.empty()) throw DomainError("no measurement files given");
  const Phantom optics = load_phantom(config.phantom_path);
  std::vector<std::filesystem::path> out;
  for (const auto& file : measurement_files) {
    const MeasurementFile data = load_measurements(file);
    const Reconstruction rec =
        reconstruct2d(data.measurements, data.layout, optics, config.recon);
    const MapFile map{rec.map.upsampled, rec.map.extent, rec.map.depth_z};
    for (auto& p : write_map_outputs(sibling(config.output_dir, "map_", file, ".csv"), map)) {
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<std::filesystem::path> cmd_reconstruct3d(
    const RunConfig& config, const std::vector<std::filesystem::path>& measurement_files) {
  config.validate();
  if (measurement_files.size() < 2) {
    throw DimensionError("3-D reconstruction needs at least two measurement files, got " +
                         std::to_string(measurement_files.size()));
  }
  const Phantom optics = load_phantom(config.phantom_path);
  std::vector<DepthSlice> slices;
  Vec2 extent;
  for (const auto& file : measurement_files) {
    const MeasurementFile data = load_measurements(file);
    Reconstruction rec = reconstruct2d(data.measurements, data.layout, optics, config.recon);
    extent = rec.map.extent;
    slices.push_back({rec.map.depth_z, std::move(rec.map.upsampled)});
  }
  const Volume3D volume = stack_and_interpolate(std::move(slices), config.n_planes);
  const auto raw = config.output_dir / "volume.f32";
  const auto sidecar = config.output_dir / "volume.json";
  write_text_file(raw, volume_bytes(volume));
  write_text_file(sidecar, volume_sidecar_json(volume, extent));
  std::vector<std::filesystem::path> out{raw, sidecar};
  if (config.export_planes) {
    for (std::size_t z = 0; z < volume.nz; ++z) {
      const PgmImage img = to_pgm(volume.plane(z));
      const auto pgm = config.output_dir / ("volume_plane_" + std::to_string(z) + ".pgm");
      auto side = pgm;
      side += ".json";
      write_text_file(pgm, pgm_bytes(img));
      write_text_file(side, pgm_sidecar_json(img));
      out.push_back(pgm);
      out.push_back(side);
    }
  }
  return out;
}

std::vector<std::filesystem::path> cmd_cosamp(const RunConfig& config,
                                              const std::filesystem::path& measurement_file) {
  config.validate();
  const Phantom optics = load_phantom(config.phantom_path);
  const MeasurementFile data = load_measurements(measurement_file);
  const Reconstruction rec = reconstruct2d(data.measurements, data.layout, optics, config.recon);
  const SensingSystem sys = build_sensing(rec, optics.mu_a_background, config.sparsity_k);
  const CosampResult res = cosamp_solve(sys, config.cosamp_max_iters);
  const Grid2D coarse = rasterize_coefficients(sys, res);
  const auto coarse_path = sibling(config.output_dir, "cosamp_raw_", measurement_file, ".csv");
  write_text_file(coarse_path, map_to_csv({coarse, rec.map.extent, rec.map.depth_z}));
  std::vector<std::filesystem::path> out{coarse_path};
  const MapFile up{cubic_upsample(coarse, config.recon.upsample_factor), rec.map.extent,
                   rec.map.depth_z};
  for (auto& p :
       write_map_outputs(sibling(config.output_dir, "cosamp_", measurement_file, ".csv"), up)) {
    out.push_back(std::move(p));
  }
  return out;
}

std::filesystem::path cmd_metrics(const RunConfig& config, const std::filesystem::path& map_file) {
  const Phantom phantom = load_phantom(config.phantom_path);
  const MapFile map = load_map(map_file);
  const Grid2D truth = rasterize_truth(phantom, map.depth_z, map.map.rows(), map.map.cols());
  std::vector<Vec2> centers;
  for (const Inclusion& inc : phantom.inclusions) {
    if (inside_inclusion(inc, phantom, inc.center.x, inc.center.y, map.depth_z)) {
      centers.push_back(inc.center);
    }
  }
  const MetricReport rep = evaluate_map(map.map, truth, map.extent, centers, config.localize);
  const auto path = sibling(config.output_dir, "metrics_", map_file, ".json");
  write_text_file(path, metric_report_json(rep));
  return path;
}

std::filesystem::path cmd_paths(const RunConfig& config,
                                const std::filesystem::path& measurement_file) {
  config.validate();
  const Phantom optics = load_phantom(config.phantom_path);
  const MeasurementFile data = load_measurements(measurement_file);
  const Reconstruction rec = reconstruct2d(data.measurements, data.layout, optics, config.recon);
  std::vector<Channel> channels;
  for (std::size_t k : rec.curve_estimate) channels.push_back(rec.estimates[k].channel);
  const auto path = sibling(config.output_dir, "curves_", measurement_file, ".csv");
  write_text_file(path, curves_to_csv(rec.curves, channels));
  return path;
}

Comparison compare_methods(const RunConfig& config, const Phantom& phantom,
                           const MeasurementFile& data) {
  config.validate();
  const Reconstruction rec = reconstruct2d(data.measurements, data.layout, phantom, config.recon);
  const Grid2D& curved = rec.map.upsampled;
  const double z = data.measurements.depth_z;

  Comparison cmp;
  cmp.truth = rasterize_truth(phantom, z, curved.rows(), curved.cols());
  for (const Inclusion& inc : phantom.inclusions) {
    if (inside_inclusion(inc, phantom, inc.center.x, inc.center.y, z)) {
      cmp.truth_centers.push_back(inc.center);
    }
  }
  const SensingSystem sys = build_sensing(rec, phantom.mu_a_background, config.sparsity_k);
  cmp.cosamp_detail = cosamp_solve(sys, config.cosamp_max_iters);
  Grid2D cos_map =
      cubic_upsample(rasterize_coefficients(sys, cmp.cosamp_detail), config.recon.upsample_factor);

  cmp.curved_beam = score("Curved beam", curved, cmp.truth, rec.map.extent, cmp.truth_centers,
                          config.localize);
  cmp.cosamp = score("CoSaMP", std::move(cos_map), cmp.truth, rec.map.extent, cmp.truth_centers,
                     config.localize);
  return cmp;
}

std::vector<MetricRow> comparison_rows(const Comparison& comparison) {
  return {to_row(comparison.curved_beam), to_row(comparison.cosamp)};
}

std::string comparison_csv(const Comparison& comparison, std::string_view hash) {
  std::string out = "method,location,mu_a,mse,ssim,psnr,config_hash\n";
  for (const MetricRow& r : comparison_rows(comparison)) {
    out += quote_csv_field(r.method) + ',' + quote_csv_field(r.location) + ',' +
           quote_csv_field(r.mu_a) + ',' + r.mse + ',' + r.ssim + ',' + r.psnr + ',' +
           std::string(hash) + '\n';
  }
  return out;
}

std::filesystem::path cmd_compare(const RunConfig& config,
                                  const std::filesystem::path& measurement_file) {
  const Phantom phantom = load_phantom(config.phantom_path);
  const MeasurementFile data = load_measurements(measurement_file);
  const Comparison cmp = compare_methods(config, phantom, data);
  const auto path = sibling(config.output_dir, "compare_", measurement_file, ".csv");
  write_text_file(path, comparison_csv(cmp, config_hash(config)));
  return path;
}

}  // namespace dot
