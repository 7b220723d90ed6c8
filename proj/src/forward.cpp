#include "dotrecon/forward.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "dotrecon/error.hpp"

namespace dot {

namespace {

constexpr int kDi[4] = {1, -1, 0, 0};
constexpr int kDj[4] = {0, 0, 1, -1};

// Neighbour of `node` in direction k, or npos when it is off-grid or masked.
std::size_t neighbour(const DiffusionGrid& g, std::size_t node, int k) {
  const auto i = static_cast<long>(node % g.nx) + kDi[k];
  const auto j = static_cast<long>(node / g.nx) + kDj[k];
  if (i < 0 || j < 0 || i >= static_cast<long>(g.nx) || j >= static_cast<long>(g.ny)) {
    return std::string::npos;
  }
  const std::size_t n = g.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return g.inside(n) ? n : std::string::npos;
}

double face_c(const DiffusionGrid& g, std::size_t a, std::size_t b) {
  const double ca = g.diffusion_c[a];
  const double cb = g.diffusion_c[b];
  return 2.0 * ca * cb / (ca + cb);
}

// Robin face: boundary half a cell from the node, u_b = 2 A c du/dn.
// Returns the outward flux per unit u through one face of length h.
double robin_face_flux(const DiffusionGrid& g, std::size_t node) {
  return g.h / (g.h / (2.0 * g.diffusion_c[node]) + 2.0 * g.reflection_a);
}

}  // namespace

bool DiffusionGrid::is_boundary_node(std::size_t node) const {
  if (!inside(node)) return false;
  for (int k = 0; k < 4; ++k) {
    if (neighbour(*this, node, k) == std::string::npos) return true;
  }
  return false;
}

std::size_t DiffusionGrid::nearest_inside_node(Vec2 p) const {
  std::size_t best = std::string::npos;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < mask.size(); ++n) {
    if (!inside(n)) continue;
    const double d = distance(position(n), p);
    if (d < best_d) {
      best_d = d;
      best = n;
    }
  }
  if (best == std::string::npos) throw GeometryError("grid has no inside nodes");
  return best;
}

std::size_t DiffusionGrid::nearest_boundary_node(Vec2 p) const {
  std::size_t best = std::string::npos;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < mask.size(); ++n) {
    if (!is_boundary_node(n)) continue;
    const double d = distance(position(n), p);
    if (d < best_d) {
      best_d = d;
      best = n;
    }
  }
  if (best == std::string::npos) throw GeometryError("grid has no boundary nodes");
  return best;
}

DiffusionGrid assemble(const Phantom& phantom, double depth_z, const ForwardOptions& options) {
  if (options.nx < 16 || options.ny < 16) {
    throw DomainError("forward grid needs at least 16 nodes per axis");
  }
  if (depth_z < 0.0 || depth_z > phantom.height()) {
    throw GeometryError("depth " + std::to_string(depth_z) + " cm is outside the phantom");
  }
  const Vec2 size = phantom.cross_section_size();
  DiffusionGrid g;
  g.nx = options.nx;
  g.ny = options.ny;
  g.h = std::max(size.x / static_cast<double>(g.nx - 1), size.y / static_cast<double>(g.ny - 1));
  g.reflection_a = options.reflection_a;
  g.boundary = options.boundary;

  for (const Inclusion& inc : phantom.inclusions) {
    const double z0 = phantom.height() - inc.depth_top;
    if (depth_z < z0) continue;
    if (2.0 * inc.radius / g.h < 3.0) {
      throw ResolutionError("grid spacing " + std::to_string(g.h) +
                            " cm cannot resolve an inclusion of radius " +
                            std::to_string(inc.radius) + " cm");
    }
  }

  const std::size_t n = g.nx * g.ny;
  g.diffusion_c.assign(n, 0.0);
  g.absorption_a.assign(n, 0.0);
  g.mask.assign(n, 0);
  const double tol = 1e-9 * g.h;
  for (std::size_t node = 0; node < n; ++node) {
    const Vec2 p = g.position(node);
    if (!phantom.contains(p, tol)) continue;
    // Nodes within rounding of the edge are sampled on the edge itself.
    const Vec2 q{std::clamp(p.x, 0.0, size.x), std::clamp(p.y, 0.0, size.y)};
    const Vec2 s = phantom.contains(q, 0.0) ? q : phantom.project_to_boundary(q);
    const double mua = mu_a_at(phantom, s.x, s.y, depth_z);
    g.mask[node] = 1;
    g.diffusion_c[node] = 1.0 / (3.0 * (mua + phantom.mu_s_prime));
    g.absorption_a[node] = options.absorption == HelmholtzAbsorption::physical
                               ? mua
                               : options.constant_absorption;
  }
  return g;
}

std::vector<double> apply_operator(const DiffusionGrid& g, std::span<const double> u) {
  std::vector<double> out(g.mask.size(), 0.0);
  const double inv_h2 = 1.0 / (g.h * g.h);
  for (std::size_t node = 0; node < g.mask.size(); ++node) {
    if (!g.inside(node)) continue;
    double acc = g.absorption_a[node] * u[node];
    for (int k = 0; k < 4; ++k) {
      const std::size_t nb = neighbour(g, node, k);
      if (nb != std::string::npos) {
        acc += face_c(g, node, nb) * inv_h2 * (u[node] - u[nb]);
      } else if (g.boundary == BoundaryCondition::robin) {
        acc += robin_face_flux(g, node) * inv_h2 * u[node];
      }
    }
    out[node] = acc;
  }
  return out;
}

FluxBalance flux_balance(const DiffusionGrid& g, std::span<const double> u) {
  FluxBalance fb;
  const double area = g.h * g.h;
  for (std::size_t node = 0; node < g.mask.size(); ++node) {
    if (!g.inside(node)) continue;
    fb.absorbed += g.absorption_a[node] * u[node] * area;
    if (g.boundary != BoundaryCondition::robin) continue;
    for (int k = 0; k < 4; ++k) {
      if (neighbour(g, node, k) == std::string::npos) {
        fb.boundary_outflow += robin_face_flux(g, node) * u[node];
      }
    }
  }
  return fb;
}

struct FluenceSolver::Impl {
  DiffusionGrid grid;
  double tolerance;
  std::size_t max_iterations;
  std::vector<long> unknown_of_node;
  std::vector<std::size_t> node_of_unknown;
  Eigen::SparseMatrix<double> matrix;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor;
};

FluenceSolver::FluenceSolver(const DiffusionGrid& grid, double tolerance,
                             std::size_t max_iterations)
    : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  s.grid = grid;
  s.tolerance = tolerance;
  s.max_iterations = max_iterations;
  s.unknown_of_node.assign(grid.mask.size(), -1);
  for (std::size_t node = 0; node < grid.mask.size(); ++node) {
    if (grid.inside(node)) {
      s.unknown_of_node[node] = static_cast<long>(s.node_of_unknown.size());
      s.node_of_unknown.push_back(node);
    }
  }
  const auto n = static_cast<Eigen::Index>(s.node_of_unknown.size());
  const double inv_h2 = 1.0 / (grid.h * grid.h);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * 5);
  for (Eigen::Index row = 0; row < n; ++row) {
    const std::size_t node = s.node_of_unknown[static_cast<std::size_t>(row)];
    double diag = grid.absorption_a[node];
    for (int k = 0; k < 4; ++k) {
      const std::size_t nb = neighbour(grid, node, k);
      if (nb != std::string::npos) {
        const double w = face_c(grid, node, nb) * inv_h2;
        diag += w;
        trips.emplace_back(row, s.unknown_of_node[nb], -w);
      } else if (grid.boundary == BoundaryCondition::robin) {
        diag += robin_face_flux(grid, node) * inv_h2;
      }
    }
    trips.emplace_back(row, row, diag);
  }
  s.matrix.resize(n, n);
  s.matrix.setFromTriplets(trips.begin(), trips.end());
  s.factor.compute(s.matrix);
  if (s.factor.info() != Eigen::Success) {
    throw SolverError("factorisation of the diffusion operator failed",
                      std::numeric_limits<double>::infinity());
  }
}

FluenceSolver::~FluenceSolver() = default;
FluenceSolver::FluenceSolver(FluenceSolver&&) noexcept = default;
FluenceSolver& FluenceSolver::operator=(FluenceSolver&&) noexcept = default;

const DiffusionGrid& FluenceSolver::grid() const { return impl_->grid; }

std::vector<double> FluenceSolver::solve(std::size_t source_node) const {
  const Impl& s = *impl_;
  if (source_node >= s.unknown_of_node.size() || s.unknown_of_node[source_node] < 0) {
    throw GeometryError("source node " + std::to_string(source_node) + " is outside the mask");
  }
  const auto n = s.matrix.rows();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[s.unknown_of_node[source_node]] = 1.0 / (s.grid.h * s.grid.h);
  const double rhs_norm = rhs.norm();

  // Direct solve followed by iterative refinement until the relative
  // residual meets the tolerance.
  Eigen::VectorXd x = s.factor.solve(rhs);
  Eigen::VectorXd r = rhs - s.matrix * x;
  double rel = r.norm() / rhs_norm;
  std::size_t iter = 0;
  while (!(rel <= s.tolerance)) {
    if (++iter > s.max_iterations || !std::isfinite(rel)) {
      throw SolverError("fluence solve did not converge, relative residual " +
                            std::to_string(rel),
                        rel);
    }
    x += s.factor.solve(r);
    r = rhs - s.matrix * x;
    rel = r.norm() / rhs_norm;
  }

  std::vector<double> u(s.grid.mask.size(), 0.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v = x[k];
    if (!(v > 0.0)) {
      throw SolverError("non-positive fluence at node " +
                            std::to_string(s.node_of_unknown[static_cast<std::size_t>(k)]),
                        rel);
    }
    u[s.node_of_unknown[static_cast<std::size_t>(k)]] = v;
  }
  return u;
}

std::vector<double> solve_fluence(const DiffusionGrid& grid, std::size_t source_node,
                                  double tolerance, std::size_t max_iterations) {
  return FluenceSolver(grid, tolerance, max_iterations).solve(source_node);
}

void MeasurementSet::validate(const std::vector<Channel>& channels) const {
  if (records.size() != channels.size()) {
    throw DomainError("measurement set has " + std::to_string(records.size()) +
                      " records for " + std::to_string(channels.size()) + " channels");
  }
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& rec = records[k];
    if (rec.source_index != channels[k].source_index ||
        rec.detector_index != channels[k].detector_index) {
      throw DomainError("measurement record " + std::to_string(k) +
                        " does not match the channel enumeration");
    }
    if (!(rec.intensity > 0.0) || !std::isfinite(rec.intensity)) {
      throw DomainError("measurement record " + std::to_string(k) +
                        " has a non-positive intensity");
    }
  }
}

double MeasurementSet::intensity(std::size_t source, std::size_t detector) const {
  for (const auto& rec : records) {
    if (rec.source_index == source && rec.detector_index == detector) return rec.intensity;
  }
  throw DomainError("no measurement for source " + std::to_string(source) + ", detector " +
                    std::to_string(detector));
}

MeasurementSet MeasurementSet::scaled(double gain) const {
  MeasurementSet out = *this;
  for (auto& rec : out.records) rec.intensity *= gain;
  return out;
}

std::size_t source_node_for(const DiffusionGrid& grid, const Phantom& phantom, Vec2 source) {
  const Vec2 inward = phantom.inward_normal(source);
  return grid.nearest_inside_node(source + (1.0 / phantom.mu_s_prime) * inward);
}

MeasurementSet simulate_measurements(const Phantom& phantom, const OptodeLayout& layout,
                                     const ForwardOptions& options, const NoiseOptions& noise) {
  phantom.validate();
  layout.validate(phantom);
  const DiffusionGrid grid = assemble(phantom, layout.depth_z, options);
  const FluenceSolver solver(grid, options.tolerance, options.max_iterations);
  const ChannelEnumeration chans = enumerate_channels(layout);

  std::vector<std::size_t> detector_nodes;
  detector_nodes.reserve(layout.detectors.size());
  for (const Vec2& d : layout.detectors) detector_nodes.push_back(grid.nearest_boundary_node(d));

  MeasurementSet out;
  out.depth_z = layout.depth_z;
  out.provenance = Provenance::simulated;
  out.records.reserve(chans.channels.size());
  std::size_t solved_for = std::string::npos;
  std::vector<double> fluence;
  for (const Channel& ch : chans.channels) {
    if (ch.source_index != solved_for) {
      fluence = solver.solve(source_node_for(grid, phantom, layout.sources[ch.source_index]));
      solved_for = ch.source_index;
    }
    const double reading = fluence[detector_nodes[ch.detector_index]];
    if (!(reading > 0.0)) {
      throw SolverError("internal error: non-positive detector reading", 0.0);
    }
    out.records.push_back({ch.source_index, ch.detector_index, reading});
  }

  if (noise.sigma > 0.0) {
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, noise.sigma);
    for (auto& rec : out.records) rec.intensity *= std::exp(gauss(rng));
  }
  return out;
}

}  // namespace dot
