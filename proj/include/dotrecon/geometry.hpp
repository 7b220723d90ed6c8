#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dot {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot_product(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

enum class Shape { rectangular, cylindrical, slab };

std::string_view to_string(Shape shape);
Shape shape_from_string(std::string_view name);

// Absorbing target drilled from the top face. It occupies the disk
// |p - center| <= radius for heights z in [height - depth_top, height],
// with z measured from the phantom bottom.
struct Inclusion {
  Vec2 center;
  double radius = 0.0;
  double depth_top = 0.0;
  double mu_a = 0.0;
};

// Extent semantics by shape:
//   rectangular / slab: {x, y, z} lengths, cross-section [0,x] x [0,y]
//   cylindrical:        {diameter, height, unused}, disk centred at (r, r)
struct Phantom {
  Shape shape = Shape::rectangular;
  std::array<double, 3> extent{};
  double mu_a_background = 0.0;
  double mu_s_prime = 0.0;
  std::vector<Inclusion> inclusions;

  // Throws GeometryError / DomainError on hard violations; returns
  // soft warnings (diffusion validity, non-absorptive targets).
  std::vector<std::string> validate() const;

  double height() const;
  // Bounding box of the x-y cross-section, lower corner at the origin.
  Vec2 cross_section_size() const;
  Vec2 centroid() const;
  bool contains(Vec2 p, double tol = 1e-9) const;
  // Distance from p to the cross-section boundary (0 on the boundary).
  double boundary_distance(Vec2 p) const;
  Vec2 project_to_boundary(Vec2 p) const;
  Vec2 inward_normal(Vec2 boundary_point) const;
  double perimeter() const;
};

// Ground-truth absorption at a 3-D point; first inclusion in list order wins
// where inclusions overlap. Throws GeometryError outside the phantom.
double mu_a_at(const Phantom& phantom, double x, double y, double z);

// True when (x, y) lies in an inclusion that exists at height z.
bool inside_inclusion(const Inclusion& inc, const Phantom& phantom, double x,
                      double y, double z);

struct OptodeLayout {
  std::vector<Vec2> sources;
  std::vector<Vec2> detectors;
  double depth_z = 0.0;

  // Boundary membership (1e-6 cm), non-empty lists, distinct positions.
  void validate(const Phantom& phantom) const;
};

struct Channel {
  std::size_t source_index = 0;
  std::size_t detector_index = 0;
  double separation_d = 0.0;

  friend bool operator==(const Channel&, const Channel&) = default;
};

struct ChannelEnumeration {
  std::vector<Channel> channels;
  // Co-located (source, detector) pairs dropped from `channels`.
  std::vector<Channel> excluded;
};

inline constexpr double kBoundaryTolerance = 1e-6;
inline constexpr double kMinOptodeSpacing = 0.1;

// Equal arc-length placement on the phantom boundary: sources at parameter
// k/n_sources of the perimeter, detectors offset by half of their own step.
// Circles start at angle 0; rectangles start at the corner origin and run
// counter-clockwise.
OptodeLayout build_layout(const Phantom& phantom, std::size_t n_sources,
                          std::size_t n_detectors, double depth_z);

// Point on the boundary at perimeter parameter s (cm from the start point).
Vec2 boundary_point(const Phantom& phantom, double s);

ChannelEnumeration enumerate_channels(const OptodeLayout& layout);

}  // namespace dot
