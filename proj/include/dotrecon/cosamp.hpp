#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dotrecon/banana.hpp"
#include "dotrecon/grid.hpp"
#include "dotrecon/mbll.hpp"

namespace dot {

// Single-measurement-vector system  J x = y - baseline  over the coarse grid.
struct SensingSystem {
  Eigen::MatrixXd matrix;         // m x n, non-zero columns scaled to unit norm
  Eigen::VectorXd column_norms;   // norms before scaling (0 for untraversed pixels)
  Eigen::VectorXd y;              // ln(I_ref / I_j) per non-reference channel
  Eigen::VectorXd baseline;       // mu_o * unscaled row sums: homogeneous prediction
  std::size_t sparsity_k = 8;
  std::vector<std::size_t> zero_columns;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  double mu_background = 0.0;
};

inline constexpr std::size_t kDefaultSparsity = 8;

// J[ch, px] = (samples of curve ch in pixel px) * L^ch / n_samples.
// `delta_od[k]` and `path_length[k]` belong to `curves[k]`.
SensingSystem build_sensing(std::span<const BananaCurve> curves,
                            std::span<const double> delta_od,
                            std::span<const double> path_length, std::size_t rows,
                            std::size_t cols, Vec2 extent, double mu_background,
                            std::size_t sparsity_k = kDefaultSparsity);

SensingSystem build_sensing(const Reconstruction& rec, double mu_background,
                            std::size_t sparsity_k = kDefaultSparsity);

// Wraps an arbitrary matrix (columns normalised here, baseline zero).
SensingSystem make_sensing(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& y,
                           std::size_t sparsity_k);

struct CosampResult {
  Eigen::VectorXd coefficients;  // de-normalised, at most k non-zeros
  std::vector<std::size_t> support;
  std::size_t iterations = 0;
  double residual_norm = 0.0;
  std::vector<double> residual_history;  // after each completed iteration
  bool rank_deficient = false;
  bool halted_on_increase = false;
  std::vector<std::string> warnings;
};

// Stops when the residual norm falls to tol * ||y - baseline||, after
// max_iters, on a support fixed point, or when the residual grows (the best
// iterate is returned in that case).
CosampResult cosamp_solve(const SensingSystem& system, std::size_t max_iters = 50,
                          double tol = 1e-10);

// Coarse map mu_o + x on the sensing grid.
Grid2D rasterize_coefficients(const SensingSystem& system, const CosampResult& result);

}  // namespace dot
