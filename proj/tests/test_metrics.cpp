#include <cmath>
#include <limits>

#include "doctest.h"
#include "dotrecon/error.hpp"
#include "dotrecon/metrics.hpp"

using namespace dot;

namespace {

// Isotropic Gaussian bump on a constant background, nodes h = extent/(n-1).
Grid2D gaussian_map(std::size_t n, double extent, Vec2 c, double sigma, double bg = 0.25,
                    double amp = 1.0) {
  Grid2D g(n, n);
  const double h = extent / static_cast<double>(n - 1);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < n; ++k) {
      const double dx = k * h - c.x;
      const double dy = r * h - c.y;
      g(r, k) = bg + amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }
  return g;
}

Grid2D from_rows(std::size_t rows, std::size_t cols, std::vector<double> v) {
  Grid2D g(rows, cols);
  g.values() = std::move(v);
  return g;
}

}  // namespace

TEST_CASE("MSE") {
  const Grid2D a = gaussian_map(21, 2.0, {1.0, 1.0}, 0.3);
  CHECK(mse(a, a) == 0.0);
  Grid2D b = a;
  for (double& v : b.values()) v += 0.1;
  CHECK(mse(b, a) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_THROWS_AS(mse(Grid2D(2, 3), Grid2D(3, 2)), DimensionError);
}

TEST_CASE("PSNR") {
  CHECK(psnr_from_mse(1.0, 0.01).db == 20.0);
  CHECK_FALSE(psnr_from_mse(1.0, 0.01).infinite);
  CHECK(psnr_from_mse(2.0, 0.01).db == doctest::Approx(26.02).epsilon(1e-4));
  const Grid2D a(3, 3, 0.5);
  const Psnr same = psnr(a, a);
  CHECK(same.infinite);
  CHECK_THROWS_AS(psnr_from_mse(1.0, -1.0), DomainError);
  double prev = std::numeric_limits<double>::infinity();
  for (double m : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    const double v = psnr_from_mse(1.0, m).db;
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("global SSIM against a hand evaluation") {
  const Grid2D x = from_rows(2, 2, {0.0, 1.0, 1.0, 0.0});
  const Grid2D y = from_rows(2, 2, {0.0, 0.5, 0.5, 0.0});
  // Means 1/2 and 1/4; sample variances 1/3 and 1/12; covariance 1/6.
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  const double oracle = (2.0 * 0.5 * 0.25 + c1) * (2.0 / 6.0 + c2) /
                        ((0.25 + 0.0625 + c1) * (1.0 / 3.0 + 1.0 / 12.0 + c2));
  CHECK(oracle == doctest::Approx(0.6404).epsilon(1e-4));
  CHECK(ssim_global(x, y, 1.0) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(ssim_global(y, x, 1.0) == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("SSIM identities") {
  const Grid2D a = gaussian_map(31, 3.0, {1.2, 1.7}, 0.4);
  CHECK(ssim_global(a, a, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ssim_global(Grid2D(4, 4, 0.3), Grid2D(4, 4, 0.3), 1.0) == doctest::Approx(1.0));
  const Grid2D b = gaussian_map(31, 3.0, {1.8, 1.1}, 0.4);
  const double s = ssim_global(a, b, 1.0);
  CHECK(s < 1.0);
  CHECK(s == doctest::Approx(ssim_global(b, a, 1.0)).epsilon(1e-15));
  CHECK_THROWS_AS(ssim_global(a, b, 0.0), DomainError);
}

TEST_CASE("localize a Gaussian blob") {
  const Grid2D g = gaussian_map(221, 4.4, {1.6, 1.5}, 0.25);
  const auto blobs = localize(g, {4.4, 4.4});
  REQUIRE(blobs.size() == 1);
  CHECK(distance(blobs[0].center, {1.6, 1.5}) < 0.05);
  CHECK(blobs[0].peak == doctest::Approx(g.max()));
}

TEST_CASE("localize is translation consistent and orders blobs by peak") {
  const Grid2D a = gaussian_map(221, 4.4, {1.6, 1.5}, 0.25);
  const Grid2D b = gaussian_map(221, 4.4, {2.6, 3.1}, 0.25);
  const auto ca = localize(a, {4.4, 4.4});
  const auto cb = localize(b, {4.4, 4.4});
  REQUIRE(ca.size() == 1);
  REQUIRE(cb.size() == 1);
  CHECK(cb[0].center.x - ca[0].center.x == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cb[0].center.y - ca[0].center.y == doctest::Approx(1.6).epsilon(1e-9));

  Grid2D two = gaussian_map(221, 4.4, {1.1, 3.3}, 0.2, 0.25, 0.9);
  const Grid2D other = gaussian_map(221, 4.4, {2.47, 1.7}, 0.2, 0.0, 1.0);
  for (std::size_t i = 0; i < two.size(); ++i) two.values()[i] += other.values()[i];
  LocalizeOptions o;
  o.threshold_fraction = 0.3;
  const auto blobs = localize(two, {4.4, 4.4}, o);
  REQUIRE(blobs.size() == 2);
  CHECK(distance(blobs[0].center, {2.47, 1.7}) < 0.05);
  CHECK(distance(blobs[1].center, {1.1, 3.3}) < 0.05);
  CHECK(blobs[0].peak > blobs[1].peak);
}

TEST_CASE("homogeneous and low-contrast maps have no inclusion") {
  CHECK(localize(Grid2D(50, 50, 0.25), {4.4, 4.4}).empty());
  const Grid2D faint = gaussian_map(101, 4.4, {2.0, 2.0}, 0.3, 1.0, 0.05);
  LocalizeOptions o;
  o.min_relative_contrast = 0.1;
  CHECK(localize(faint, {4.4, 4.4}, o).empty());
  o.min_relative_contrast = 0.0;
  CHECK(localize(faint, {4.4, 4.4}, o).size() == 1);
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

TEST_CASE("truth rasterisation and centre matching") {
  const Phantom p{Shape::cylindrical, {4.0, 4.0, 0.0}, 0.25, 20.0, {{{2.0, 2.0}, 0.5, 4.0, 6.76}}};
  const Grid2D t = rasterize_truth(p, 1.0, 41, 41);
  CHECK(t(20, 20) == 6.76);
  CHECK(t(0, 0) == 0.25);
  CHECK(t(20, 28) == 0.25);
  const std::vector<Blob> found{{{2.1, 2.0}, 1.0, 3}, {{0.5, 0.5}, 0.5, 3}};
  const auto err = match_centers({{2.0, 2.0}}, found);
  REQUIRE(err.size() == 1);
  CHECK(err[0] == doctest::Approx(0.1));
  const auto unmatched = match_centers({{2.0, 2.0}, {1.0, 1.0}}, {found[0]});
  CHECK(std::isinf(unmatched[1]));
}

TEST_CASE("evaluate_map on a perfect reconstruction") {
  const Phantom p{Shape::rectangular, {3.0, 3.0, 2.0}, 0.25, 20.0, {{{1.5, 1.5}, 0.3, 2.0, 5.2}}};
  const Grid2D t = rasterize_truth(p, 1.0, 61, 61);
  const MetricReport r = evaluate_map(t, t, {3.0, 3.0}, {{1.5, 1.5}});
  CHECK(r.mse == 0.0);
  CHECK(r.psnr.infinite);
  CHECK(r.ssim == doctest::Approx(1.0));
  REQUIRE(r.center_errors.size() == 1);
  CHECK(r.center_errors[0] < 1e-9);
  CHECK(r.peak_mu_a == 5.2);
}

TEST_CASE("metric table parsing and rendering") {
  const std::string csv =
      "method,location,mu_a,mse,ssim,psnr\n"
      "# comment lines are skipped\n"
      "Curved beam,\"(1.6, 1.5)\",6.10,0.033,0.792,14.9\n"
      "\n"
      "CoSaMP,,,0.1,0.5,inf\n";
  const auto rows = parse_metric_rows(csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].location == "(1.6, 1.5)");
  CHECK(rows[1].location.empty());
  CHECK(rows[1].psnr == "inf");
  const std::string expect =
      "Method      | Location (x, y) cm | mu_a (cm^-1) | MSE   | SSIM  | PSNR (dB)\n"
      "------------+--------------------+--------------+-------+-------+----------\n"
      "Curved beam | (1.6, 1.5)         | 6.10         | 0.033 | 0.792 | 14.9\n"
      "CoSaMP      |                    |              | 0.1   | 0.5   | inf\n";
  CHECK(render_metric_table(rows) == expect);
  CHECK_THROWS(parse_metric_rows("a,b,c\n1,2,3\n"));
}
