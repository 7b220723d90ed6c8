#include "dotrecon/cosamp.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "dotrecon/error.hpp"

namespace dot {

namespace {

void normalise_columns(SensingSystem& s) {
  s.column_norms = s.matrix.colwise().norm().transpose();
  s.zero_columns.clear();
  for (Eigen::Index c = 0; c < s.matrix.cols(); ++c) {
    if (s.column_norms[c] > 0.0) {
      s.matrix.col(c) /= s.column_norms[c];
    } else {
      s.zero_columns.push_back(static_cast<std::size_t>(c));
    }
  }
}

// Indices of the `count` largest |v| entries, ties to the lower index.
std::vector<std::size_t> largest(const Eigen::VectorXd& v, std::size_t count) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  count = std::min(count, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double fa = std::abs(v[static_cast<Eigen::Index>(a)]);
                      const double fb = std::abs(v[static_cast<Eigen::Index>(b)]);
                      return fa > fb || (fa == fb && a < b);
                    });
  idx.resize(count);
  return idx;
}

}  // namespace

SensingSystem build_sensing(std::span<const BananaCurve> curves,
                            std::span<const double> delta_od,
                            std::span<const double> path_length, std::size_t rows,
                            std::size_t cols, Vec2 extent, double mu_background,
                            std::size_t sparsity_k) {
  if (delta_od.size() != curves.size() || path_length.size() != curves.size()) {
    throw DimensionError("sensing system needs one measurement per curve");
  }
  SensingSystem s;
  s.grid_rows = rows;
  s.grid_cols = cols;
  s.mu_background = mu_background;
  s.sparsity_k = sparsity_k;
  const auto m = static_cast<Eigen::Index>(curves.size());
  s.matrix = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(rows * cols));
  s.y.resize(m);
  for (Eigen::Index ch = 0; ch < m; ++ch) {
    const BananaCurve& curve = curves[static_cast<std::size_t>(ch)];
    const double w = path_length[static_cast<std::size_t>(ch)] /
                     static_cast<double>(curve.sample_points.size());
    for (const Vec2& p : curve.sample_points) {
      const RasterCell cell = raster_cell(p, extent, rows, cols);
      s.matrix(ch, static_cast<Eigen::Index>(cell.row * cols + cell.col)) += w;
    }
    s.y[ch] = delta_od[static_cast<std::size_t>(ch)];
  }
  s.baseline = mu_background * s.matrix.rowwise().sum();
  normalise_columns(s);
  return s;
}

SensingSystem build_sensing(const Reconstruction& rec, double mu_background,
                            std::size_t sparsity_k) {
  std::vector<double> delta;
  std::vector<double> length;
  for (std::size_t k : rec.curve_estimate) {
    delta.push_back(rec.estimates[k].delta_od);
    length.push_back(rec.estimates[k].path_length);
  }
  return build_sensing(rec.curves, delta, length, rec.map.raw.rows(), rec.map.raw.cols(),
                       rec.map.extent, mu_background, sparsity_k);
}

SensingSystem make_sensing(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& y,
                           std::size_t sparsity_k) {
  if (matrix.rows() != y.size()) throw DimensionError("matrix rows must match y");
  SensingSystem s;
  s.matrix = matrix;
  s.y = y;
  s.baseline = Eigen::VectorXd::Zero(y.size());
  s.sparsity_k = sparsity_k;
  s.grid_rows = 1;
  s.grid_cols = static_cast<std::size_t>(matrix.cols());
  normalise_columns(s);
  return s;
}

CosampResult cosamp_solve(const SensingSystem& system, std::size_t max_iters, double tol) {
  const std::size_t k = system.sparsity_k;
  if (k < 1) throw DomainError("sparsity level k must be at least 1");
  const Eigen::MatrixXd& J = system.matrix;
  const auto n = J.cols();
  const Eigen::VectorXd u = system.y - system.baseline;

  CosampResult out;
  out.coefficients = Eigen::VectorXd::Zero(n);
  if (3 * k > static_cast<std::size_t>(J.rows())) {
    out.warnings.push_back("3k exceeds the number of measurements; recovery is not guaranteed");
  }
  const double target = tol * u.norm();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd residual = u;
  double best_norm = residual.norm();
  Eigen::VectorXd best = a;
  std::vector<std::size_t> best_support;
  out.residual_norm = best_norm;
  if (best_norm <= target) return out;

  std::vector<std::size_t> support;
  for (std::size_t it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd proxy = J.transpose() * residual;
    std::vector<std::size_t> merged = largest(proxy, 2 * k);
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [&](std::size_t i) {
                                  return proxy[static_cast<Eigen::Index>(i)] == 0.0;
                                }),
                 merged.end());
    merged.insert(merged.end(), support.begin(), support.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    if (merged.empty()) break;

    Eigen::MatrixXd sub(J.rows(), static_cast<Eigen::Index>(merged.size()));
    for (std::size_t j = 0; j < merged.size(); ++j) {
      sub.col(static_cast<Eigen::Index>(j)) = J.col(static_cast<Eigen::Index>(merged[j]));
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sub);
    if (cod.rank() < sub.cols()) out.rank_deficient = true;
    const Eigen::VectorXd b_sub = cod.solve(u);

    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (std::size_t j = 0; j < merged.size(); ++j) {
      b[static_cast<Eigen::Index>(merged[j])] = b_sub[static_cast<Eigen::Index>(j)];
    }
    std::vector<std::size_t> next = largest(b, k);
    std::sort(next.begin(), next.end());
    a.setZero();
    for (std::size_t i : next) a[static_cast<Eigen::Index>(i)] = b[static_cast<Eigen::Index>(i)];
    residual = u - J * a;
    const double rn = residual.norm();
    out.iterations = it + 1;
    out.residual_history.push_back(rn);

    if (rn > best_norm) {
      out.halted_on_increase = true;
      break;
    }
    const bool fixed_point = next == support;
    best_norm = rn;
    best = a;
    best_support = next;
    support = std::move(next);
    if (rn <= target || fixed_point) break;
  }

  out.residual_norm = best_norm;
  out.support = best_support;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm_i = system.column_norms[i];
    out.coefficients[i] = norm_i > 0.0 ? best[i] / norm_i : 0.0;
  }
  if (out.rank_deficient) {
    out.warnings.push_back("rank-deficient least squares on the support; minimum-norm solution used");
  }
  return out;
}

Grid2D rasterize_coefficients(const SensingSystem& system, const CosampResult& result) {
  Grid2D g(system.grid_rows, system.grid_cols, system.mu_background);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.values()[i] += result.coefficients[static_cast<Eigen::Index>(i)];
  }
  return g;
}

}  // namespace dot
