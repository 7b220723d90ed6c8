#include "dotrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dotrecon/csv.hpp"
#include "dotrecon/error.hpp"

namespace dot {

namespace {

void require_same_shape(const Grid2D& a, const Grid2D& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("image dimensions differ: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
  if (a.empty()) throw DimensionError("empty image");
}

}  // namespace

double mse(const Grid2D& recon, const Grid2D& truth) {
  require_same_shape(recon, truth);
  double acc = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double d = recon.values()[i] - truth.values()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(recon.size());
}

Psnr psnr_from_mse(double peakval, double mse_value) {
  if (mse_value < 0.0) throw DomainError("negative MSE");
  if (mse_value == 0.0) return {true, std::numeric_limits<double>::infinity()};
  return {false, 10.0 * std::log10(peakval * peakval / mse_value)};
}

Psnr psnr(const Grid2D& recon, const Grid2D& truth, std::optional<double> peakval) {
  return psnr_from_mse(peakval.value_or(truth.max()), mse(recon, truth));
}

double ssim_global(const Grid2D& x, const Grid2D& y, double dynamic_range,
                   SsimConstants constants) {
  require_same_shape(x, y);
  if (!(dynamic_range > 0.0)) throw DomainError("SSIM dynamic range must be positive");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x.values()[i];
    my += y.values()[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0;
  double vy = 0.0;
  double cxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x.values()[i] - mx;
    const double dy = y.values()[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cxy += dx * dy;
  }
  const double dof = n > 1.0 ? n - 1.0 : 1.0;
  vx /= dof;
  vy /= dof;
  cxy /= dof;
  const double c1 = std::pow(constants.k1 * dynamic_range, 2);
  const double c2 = std::pow(constants.k2 * dynamic_range, 2);
  return ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

double median(std::vector<double> values) {
  if (values.empty()) throw DimensionError("median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

std::vector<Blob> localize(const Grid2D& map, Vec2 extent, const LocalizeOptions& options) {
  std::vector<Blob> blobs;
  if (map.empty()) return blobs;
  const double background = median(map.values());
  const double peak = map.max();
  if (!(peak > background)) return blobs;
  if (peak - background <= options.min_relative_contrast * std::abs(background)) return blobs;
  const double threshold = background + options.threshold_fraction * (peak - background);

  const std::size_t rows = map.rows();
  const std::size_t cols = map.cols();
  const double sx = cols > 1 ? extent.x / static_cast<double>(cols - 1) : 0.0;
  const double sy = rows > 1 ? extent.y / static_cast<double>(rows - 1) : 0.0;
  std::vector<std::uint8_t> seen(map.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < map.size(); ++start) {
    if (seen[start] || !(map.values()[start] > threshold)) continue;
    Blob blob;
    double wsum = 0.0;
    double wx = 0.0;
    double wy = 0.0;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      const std::size_t r = idx / cols;
      const std::size_t c = idx % cols;
      const double v = map.values()[idx];
      const double w = v - background;
      wsum += w;
      wx += w * static_cast<double>(c) * sx;
      wy += w * static_cast<double>(r) * sy;
      blob.peak = std::max(blob.peak, v);
      ++blob.cells;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const long rr = static_cast<long>(r) + dr;
          const long cc = static_cast<long>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(rows) || cc >= static_cast<long>(cols)) {
            continue;
          }
          const std::size_t nb = static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc);
          if (!seen[nb] && map.values()[nb] > threshold) {
            seen[nb] = 1;
            stack.push_back(nb);
          }
        }
      }
    }
    blob.center = {wx / wsum, wy / wsum};
    blobs.push_back(blob);
  }
  std::stable_sort(blobs.begin(), blobs.end(),
                   [](const Blob& a, const Blob& b) { return a.peak > b.peak; });
  return blobs;
}

Grid2D rasterize_truth(const Phantom& phantom, double depth_z, std::size_t rows,
                       std::size_t cols) {
  if (rows < 2 || cols < 2) throw DimensionError("truth raster needs at least 2x2 nodes");
  const Vec2 size = phantom.cross_section_size();
  Grid2D g(rows, cols, phantom.mu_a_background);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const Vec2 p{size.x * static_cast<double>(c) / static_cast<double>(cols - 1),
                   size.y * static_cast<double>(r) / static_cast<double>(rows - 1)};
      if (!phantom.contains(p)) continue;
      g(r, c) = mu_a_at(phantom, p.x, p.y, depth_z);
    }
  }
  return g;
}

std::vector<double> match_centers(const std::vector<Vec2>& truth, const std::vector<Blob>& found) {
  std::vector<double> err(truth.size(), std::numeric_limits<double>::infinity());
  const std::size_t usable = std::min(truth.size(), found.size());
  struct Pair {
    double d;
    std::size_t t;
    std::size_t f;
  };
  std::vector<Pair> pairs;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    for (std::size_t f = 0; f < usable; ++f) {
      pairs.push_back({distance(truth[t], found[f].center), t, f});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.d < b.d; });
  std::vector<bool> t_used(truth.size(), false);
  std::vector<bool> f_used(usable, false);
  for (const Pair& p : pairs) {
    if (t_used[p.t] || f_used[p.f]) continue;
    t_used[p.t] = true;
    f_used[p.f] = true;
    err[p.t] = p.d;
  }
  return err;
}

MetricReport evaluate_map(const Grid2D& recon, const Grid2D& truth, Vec2 extent,
                          const std::vector<Vec2>& truth_centers,
                          const LocalizeOptions& options) {
  MetricReport rep;
  rep.mse = mse(recon, truth);
  double range = truth.max() - truth.min();
  if (!(range > 0.0)) range = truth.max() > 0.0 ? truth.max() : 1.0;
  rep.ssim = ssim_global(recon, truth, range);
  rep.psnr = psnr_from_mse(truth.max(), rep.mse);
  rep.peak_mu_a = recon.max();
  const auto blobs = localize(recon, extent, options);
  for (const Blob& b : blobs) rep.inclusion_centers_found.push_back(b.center);
  rep.center_errors = match_centers(truth_centers, blobs);
  return rep;
}

std::vector<MetricRow> parse_metric_rows(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  std::vector<MetricRow> rows;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv_line(line);
    if (header) {
      const std::vector<std::string> expect = {"method", "location", "mu_a", "mse", "ssim", "psnr"};
      if (f.size() < expect.size() || !std::equal(expect.begin(), expect.end(), f.begin())) {
        throw IoError("metric table header must start with method,location,mu_a,mse,ssim,psnr");
      }
      header = false;
      continue;
    }
    if (f.size() < 6) throw IoError("metric table line " + std::to_string(line_no) + " is short");
    rows.push_back({f[0], f[1], f[2], f[3], f[4], f[5]});
  }
  if (header) throw IoError("metric table is empty");
  return rows;
}

std::string render_metric_table(const std::vector<MetricRow>& rows) {
  const std::vector<std::string> head = {"Method", "Location (x, y) cm", "mu_a (cm^-1)",
                                         "MSE", "SSIM", "PSNR (dB)"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back(head);
  for (const MetricRow& r : rows) {
    cells.push_back({r.method, r.location, r.mu_a, r.mse, r.ssim, r.psnr});
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << " | ";
      os << row[c];
      if (c + 1 < row.size()) os << std::string(width[c] - row[c].size(), ' ');
    }
    os << '\n';
  };
  emit(cells.front());
  for (std::size_t c = 0; c < width.size(); ++c) {
    if (c) os << "-+-";
    os << std::string(width[c], '-');
  }
  os << '\n';
  for (std::size_t r = 1; r < cells.size(); ++r) emit(cells[r]);
  return os.str();
}

}  // namespace dot
