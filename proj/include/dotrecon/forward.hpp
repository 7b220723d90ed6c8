#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dotrecon/geometry.hpp"

namespace dot {

// Which coefficient multiplies u in  -div(c grad u) + A u = f.
enum class HelmholtzAbsorption {
  physical,  // A = local mu_a
  constant,  // A = ForwardOptions::constant_absorption everywhere
};

enum class BoundaryCondition {
  robin,    // u + 2 A_refl c du/dn = 0
  neumann,  // zero flux; only for operator self-checks, singular without absorption
};

struct ForwardOptions {
  std::size_t nx = 128;
  std::size_t ny = 128;
  double reflection_a = 2.74;
  HelmholtzAbsorption absorption = HelmholtzAbsorption::physical;
  double constant_absorption = 2.74;
  BoundaryCondition boundary = BoundaryCondition::robin;
  double tolerance = 1e-8;
  std::size_t max_iterations = 50000;
};

// Node-centred finite-volume grid over the phantom cross-section at one
// depth. Node (i, j) sits at (i*h, j*h); each node owns an h x h cell.
struct DiffusionGrid {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double h = 0.0;
  std::vector<double> diffusion_c;   // 1 / (3 (mu_a + mu_s')), cm
  std::vector<double> absorption_a;  // cm^-1
  std::vector<std::uint8_t> mask;    // 1 inside the cross-section
  double reflection_a = 2.74;
  BoundaryCondition boundary = BoundaryCondition::robin;

  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
  Vec2 position(std::size_t node) const {
    return {static_cast<double>(node % nx) * h, static_cast<double>(node / nx) * h};
  }
  bool inside(std::size_t node) const { return mask[node] != 0; }
  // Inside node with at least one face on the domain boundary.
  bool is_boundary_node(std::size_t node) const;
  std::size_t nearest_inside_node(Vec2 p) const;
  std::size_t nearest_boundary_node(Vec2 p) const;
};

// Samples c and the absorption term from mu_a_at at the given depth.
// Throws ResolutionError if an inclusion present at this depth spans fewer
// than three nodes across its diameter.
DiffusionGrid assemble(const Phantom& phantom, double depth_z,
                       const ForwardOptions& options = {});

// Sparse system for one grid, factorised once and reused for every source.
class FluenceSolver {
 public:
  explicit FluenceSolver(const DiffusionGrid& grid, double tolerance = 1e-8,
                         std::size_t max_iterations = 50000);
  ~FluenceSolver();
  FluenceSolver(FluenceSolver&&) noexcept;
  FluenceSolver& operator=(FluenceSolver&&) noexcept;

  // Fluence for a unit point source at `source_node`, one value per grid
  // node (zero outside the mask). Thread-safe: const and allocation-local.
  std::vector<double> solve(std::size_t source_node) const;

  const DiffusionGrid& grid() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<double> solve_fluence(const DiffusionGrid& grid, std::size_t source_node,
                                  double tolerance = 1e-8,
                                  std::size_t max_iterations = 50000);

// Applies the discrete operator (per unit cell area) to a full-grid field.
std::vector<double> apply_operator(const DiffusionGrid& grid, std::span<const double> u);

struct FluxBalance {
  double absorbed = 0.0;          // sum a u h^2
  double boundary_outflow = 0.0;  // sum of Robin face fluxes
  double total() const { return absorbed + boundary_outflow; }
};

FluxBalance flux_balance(const DiffusionGrid& grid, std::span<const double> u);

enum class Provenance { simulated, file };

struct MeasurementRecord {
  std::size_t source_index = 0;
  std::size_t detector_index = 0;
  double intensity = 0.0;

  friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

struct MeasurementSet {
  double depth_z = 0.0;
  std::vector<MeasurementRecord> records;
  Provenance provenance = Provenance::simulated;

  // One positive record per enumerated channel, in channel order.
  void validate(const std::vector<Channel>& channels) const;
  double intensity(std::size_t source, std::size_t detector) const;
  MeasurementSet scaled(double gain) const;
};

struct NoiseOptions {
  double sigma = 0.0;  // std-dev of the log-normal gain per record
  std::uint64_t seed = 0;
};

// Source node: one transport length 1/mu_s' inside the boundary along the
// inward normal. Detector node: nearest boundary node.
std::size_t source_node_for(const DiffusionGrid& grid, const Phantom& phantom, Vec2 source);

MeasurementSet simulate_measurements(const Phantom& phantom, const OptodeLayout& layout,
                                     const ForwardOptions& options = {},
                                     const NoiseOptions& noise = {});

}  // namespace dot
