// dotrecon: simulate, reconstruct and score continuous-wave diffuse optical
// tomography runs. Every subcommand reads an optional JSON run config; long
// flags given on the command line take precedence over the file.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dotrecon/error.hpp"
#include "dotrecon/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_file;
  std::optional<std::string> phantom;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> n_sources;
  std::optional<std::size_t> n_detectors;
  std::vector<double> depths;
  std::optional<std::size_t> grid;
  std::optional<double> reflection_a;
  std::optional<std::string> helmholtz;
  std::optional<double> kappa;
  std::optional<std::size_t> n_samples;
  std::optional<std::string> correction;
  std::optional<std::string> reference;
  std::optional<bool> clamp;
  std::optional<std::size_t> upsample;
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sparsity;
  std::optional<std::size_t> planes;
  bool export_planes = false;
  std::optional<double> min_contrast;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_file, "JSON run config; flags override its values")
      ->check(CLI::ExistingFile);
  cmd->add_option("--phantom", o.phantom, "phantom JSON file");
  cmd->add_option("--output-dir", o.output_dir, "directory for outputs");
  cmd->add_option("--sources", o.n_sources, "number of sources");
  cmd->add_option("--detectors", o.n_detectors, "number of detectors");
  cmd->add_option("--depths", o.depths, "measurement depths in cm")->delimiter(',');
  cmd->add_option("--grid", o.grid, "solver nodes per axis");
  cmd->add_option("--reflection-a", o.reflection_a, "Robin boundary reflection parameter");
  cmd->add_option("--helmholtz-absorption", o.helmholtz,
                  "absorption term of the diffusion operator")
      ->check(CLI::IsMember({"physical", "constant"}));
  cmd->add_option("--kappa", o.kappa, "banana bow depth as a fraction of the separation");
  cmd->add_option("--samples", o.n_samples, "samples per banana curve (odd)");
  cmd->add_option("--correction", o.correction, "differential estimate form")
      ->check(CLI::IsMember({"differential", "corrected"}));
  cmd->add_option("--reference", o.reference, "reference channel selection")
      ->check(CLI::IsMember({"per_source", "global"}));
  cmd->add_option("--clamp-negative", o.clamp, "clamp negative estimates at rasterisation");
  cmd->add_option("--upsample", o.upsample, "cubic upsampling factor");
  cmd->add_option("--noise-sigma", o.sigma, "log-normal measurement noise");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--sparsity", o.sparsity, "CoSaMP sparsity level k");
  cmd->add_option("--planes", o.planes, "output planes of the 3-D volume");
  cmd->add_flag("--export-planes", o.export_planes, "also write one PGM per volume plane");
  cmd->add_option("--min-contrast", o.min_contrast,
                  "relative peak contrast below which a map has no inclusion");
}

dot::RunConfig resolve(const Overrides& o) {
  dot::RunConfig c;
  if (!o.config_file.empty()) c = dot::load_run_config(o.config_file);
  // A JSON fragment keeps the string-to-enum mapping in one place.
  std::string patch = "{";
  auto add = [&patch](const std::string& key, const std::string& value) {
    if (patch.size() > 1) patch += ',';
    patch += "\"" + key + "\":\"" + value + "\"";
  };
  if (o.helmholtz) add("helmholtz_absorption", *o.helmholtz);
  if (o.correction) add("correction", *o.correction);
  if (o.reference) add("reference", *o.reference);
  c = dot::run_config_from_json(patch + "}", std::move(c));
  if (o.phantom) c.phantom_path = *o.phantom;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.n_sources) c.n_sources = *o.n_sources;
  if (o.n_detectors) c.n_detectors = *o.n_detectors;
  if (!o.depths.empty()) c.depths = o.depths;
  if (o.grid) c.forward.nx = c.forward.ny = *o.grid;
  if (o.reflection_a) c.forward.reflection_a = *o.reflection_a;
  if (o.kappa) c.recon.kappa = *o.kappa;
  if (o.n_samples) c.recon.n_samples = *o.n_samples;
  if (o.clamp) c.recon.clamp_negative = *o.clamp;
  if (o.upsample) c.recon.upsample_factor = *o.upsample;
  if (o.sigma) c.noise_sigma = *o.sigma;
  if (o.seed) c.seed = *o.seed;
  if (o.sparsity) c.sparsity_k = *o.sparsity;
  if (o.planes) c.n_planes = *o.planes;
  if (o.export_planes) c.export_planes = true;
  if (o.min_contrast) c.localize.min_relative_contrast = *o.min_contrast;
  if (c.phantom_path.empty()) throw dot::DomainError("no phantom file given (--phantom)");
  return c;
}

void report(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-wave diffuse optical tomography toolkit"};
  app.require_subcommand(1);
  Overrides o;
  std::vector<std::string> inputs;
  std::string single;

  auto* simulate = app.add_subcommand("simulate", "simulate boundary measurements per depth");
  add_common(simulate, o);

  auto* recon = app.add_subcommand("reconstruct", "2-D curved-beam maps from measurement CSVs");
  add_common(recon, o);
  recon->add_option("measurements", inputs, "measurement CSV files")->required()->check(
      CLI::ExistingFile);

  auto* recon3d = app.add_subcommand("reconstruct3d", "stack per-depth maps into a volume");
  add_common(recon3d, o);
  recon3d->add_option("measurements", inputs, "measurement CSV files, one per depth")
      ->required()
      ->check(CLI::ExistingFile);

  auto* cosamp = app.add_subcommand("cosamp", "sparse CoSaMP reconstruction of one depth");
  add_common(cosamp, o);
  cosamp->add_option("measurements", single, "measurement CSV")->required()->check(
      CLI::ExistingFile);

  auto* metrics = app.add_subcommand("metrics", "score a map CSV against the phantom");
  add_common(metrics, o);
  metrics->add_option("map", single, "map CSV")->required()->check(CLI::ExistingFile);

  auto* compare = app.add_subcommand("compare", "curved beam vs CoSaMP metric table");
  add_common(compare, o);
  compare->add_option("measurements", single, "measurement CSV")->required()->check(
      CLI::ExistingFile);

  auto* paths = app.add_subcommand("paths", "dump banana curve samples as CSV");
  add_common(paths, o);
  paths->add_option("measurements", single, "measurement CSV")->required()->check(
      CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    const dot::RunConfig config = resolve(o);
    if (*simulate) {
      report(dot::cmd_simulate(config));
    } else if (*recon) {
      report(dot::cmd_reconstruct(config, {inputs.begin(), inputs.end()}));
    } else if (*recon3d) {
      report(dot::cmd_reconstruct3d(config, {inputs.begin(), inputs.end()}));
    } else if (*cosamp) {
      report(dot::cmd_cosamp(config, single));
    } else if (*metrics) {
      report({dot::cmd_metrics(config, single)});
    } else if (*compare) {
      const auto out = dot::cmd_compare(config, single);
      std::cout << dot::read_text_file(out);
      std::cerr << "wrote " << out.string() << '\n';
    } else if (*paths) {
      report({dot::cmd_paths(config, single)});
    }
  } catch (const std::exception& e) {
    std::cerr << "dotrecon: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
