#pragma once

#include <cstddef>
#include <vector>

#include "dotrecon/geometry.hpp"

namespace dot {

// f(x, y) = 100 (y - x^2)^2 + (a - x)^2, minimum 0 at (a, a^2).
struct RosenbrockParams {
  double a = 1.0;
  static constexpr double kValleyCoefficient = 100.0;
};

double rosenbrock_eval(const RosenbrockParams& p, double x, double y);
Vec2 rosenbrock_grad(const RosenbrockParams& p, double x, double y);

// Curved photon channel between a source and a detector: the Rosenbrock
// valley y = x^2 mapped affinely onto the optode pair,
//   p(t) = S + t (D - S) + 4 kappa d t (1 - t) n,
// with n the unit chord normal pointing into the phantom.
struct BananaCurve {
  Vec2 source_pt;
  Vec2 detector_pt;
  double depth_factor_kappa = 0.0;
  std::vector<Vec2> sample_points;
  std::vector<bool> clipped;  // sample was pulled back onto the boundary
  double path_length_L = 0.0;

  double arc_length() const;
  std::size_t apex_index() const { return sample_points.size() / 2; }
};

inline constexpr double kDefaultKappa = 0.35;
inline constexpr std::size_t kDefaultCurveSamples = 15;

// Unit normal of the S->D chord on the interior side. The side containing
// the cross-section centroid wins; for chords through the centroid the
// left-hand normal is used.
Vec2 interior_chord_normal(Vec2 source, Vec2 detector, const Phantom& phantom);

// Requires odd n_samples >= 3 and 0 < kappa <= 1 (DomainError otherwise).
// `path_length_L` is filled from path_length() with background optics.
BananaCurve fit_channel_curve(const Channel& channel, const OptodeLayout& layout,
                              const Phantom& phantom, double kappa = kDefaultKappa,
                              std::size_t n_samples = kDefaultCurveSamples);

// Same construction without the sample-count and kappa range checks, for
// limits such as kappa -> 0 and dense arc-length evaluation.
std::vector<Vec2> banana_samples(Vec2 source, Vec2 detector, Vec2 normal, double kappa,
                                 std::size_t n_samples);

double polyline_length(const std::vector<Vec2>& pts);

// Differential pathlength factor of a homogeneous semi-infinite medium.
double dpf(double mu_a, double mu_s_prime, double d);
// Mean path length L = d * DPF, cm.
double path_length(double mu_a, double mu_s_prime, double d);

}  // namespace dot
