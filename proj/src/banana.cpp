#include "dotrecon/banana.hpp"

#include <cmath>
#include <string>

#include "dotrecon/error.hpp"

namespace dot {

double rosenbrock_eval(const RosenbrockParams& p, double x, double y) {
  const double valley = y - x * x;
  const double off = p.a - x;
  return RosenbrockParams::kValleyCoefficient * valley * valley + off * off;
}

Vec2 rosenbrock_grad(const RosenbrockParams& p, double x, double y) {
  const double valley = y - x * x;
  const double k = RosenbrockParams::kValleyCoefficient;
  return {-2.0 * (p.a - x) - 4.0 * k * valley * x, 2.0 * k * valley};
}

double polyline_length(const std::vector<Vec2>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  return len;
}

double BananaCurve::arc_length() const { return polyline_length(sample_points); }

Vec2 interior_chord_normal(Vec2 source, Vec2 detector, const Phantom& phantom) {
  const Vec2 chord = detector - source;
  const double d = norm(chord);
  if (!(d > 0.0)) {
    throw GeometryError("chord normal undefined for co-located source and detector");
  }
  const Vec2 left{-chord.y / d, chord.x / d};
  const Vec2 mid = 0.5 * (source + detector);
  const double side = dot_product(phantom.centroid() - mid, left);
  // Centroid on the chord: both sides are interior, keep the left normal.
  if (std::abs(side) <= 1e-12 * d) return left;
  return side > 0.0 ? left : Vec2{-left.x, -left.y};
}

std::vector<Vec2> banana_samples(Vec2 source, Vec2 detector, Vec2 normal, double kappa,
                                 std::size_t n_samples) {
  const Vec2 chord = detector - source;
  const double bow = 4.0 * kappa * norm(chord);
  std::vector<Vec2> pts;
  pts.reserve(n_samples);
  const double last = static_cast<double>(n_samples - 1);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t = static_cast<double>(k) / last;
    pts.push_back(source + t * chord + (bow * t * (1.0 - t)) * normal);
  }
  // Exact endpoints regardless of rounding in the affine map.
  pts.front() = source;
  pts.back() = detector;
  return pts;
}

BananaCurve fit_channel_curve(const Channel& channel, const OptodeLayout& layout,
                              const Phantom& phantom, double kappa, std::size_t n_samples) {
  if (n_samples < 3 || n_samples % 2 == 0) {
    throw DomainError("curve sample count must be odd and at least 3, got " +
                      std::to_string(n_samples));
  }
  if (!(kappa > 0.0) || kappa > 1.0) {
    throw DomainError("curve depth factor kappa must lie in (0, 1]");
  }
  BananaCurve curve;
  curve.source_pt = layout.sources.at(channel.source_index);
  curve.detector_pt = layout.detectors.at(channel.detector_index);
  curve.depth_factor_kappa = kappa;
  const Vec2 n = interior_chord_normal(curve.source_pt, curve.detector_pt, phantom);
  curve.sample_points = banana_samples(curve.source_pt, curve.detector_pt, n, kappa, n_samples);
  curve.clipped.assign(n_samples, false);
  for (std::size_t k = 0; k < n_samples; ++k) {
    if (!phantom.contains(curve.sample_points[k], 1e-12)) {
      curve.sample_points[k] = phantom.project_to_boundary(curve.sample_points[k]);
      curve.clipped[k] = true;
    }
  }
  curve.path_length_L =
      path_length(phantom.mu_a_background, phantom.mu_s_prime, channel.separation_d);
  return curve;
}

double dpf(double mu_a, double mu_s_prime, double d) {
  if (!(mu_a > 0.0) || !(mu_s_prime > 0.0) || !(d > 0.0)) {
    throw DomainError("dpf requires positive mu_a, mu_s' and separation");
  }
  const double bracket = 1.0 - 1.0 / (1.0 + d * std::sqrt(3.0 * mu_a * mu_s_prime));
  return 0.5 * std::sqrt(3.0 * mu_s_prime / mu_a) * bracket;
}

double path_length(double mu_a, double mu_s_prime, double d) {
  return d * dpf(mu_a, mu_s_prime, d);
}

}  // namespace dot
