#include "dotrecon/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

#include "dotrecon/error.hpp"

namespace dot {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Optodes closer than this are the same fibre position.
constexpr double kColocationTolerance = 1e-9;

bool is_disk(Shape s) { return s == Shape::cylindrical; }

std::string fmt_point(Vec2 p) {
  std::ostringstream os;
  os << "(" << p.x << ", " << p.y << ")";
  return os.str();
}

}  // namespace

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::rectangular: return "rectangular";
    case Shape::cylindrical: return "cylindrical";
    case Shape::slab: return "slab";
  }
  return "unknown";
}

Shape shape_from_string(std::string_view name) {
  if (name == "rectangular") return Shape::rectangular;
  if (name == "cylindrical") return Shape::cylindrical;
  if (name == "slab") return Shape::slab;
  throw DomainError("unknown phantom shape '" + std::string(name) + "'");
}

double Phantom::height() const {
  return is_disk(shape) ? extent[1] : extent[2];
}

Vec2 Phantom::cross_section_size() const {
  if (is_disk(shape)) return {extent[0], extent[0]};
  return {extent[0], extent[1]};
}

Vec2 Phantom::centroid() const {
  const Vec2 size = cross_section_size();
  return {0.5 * size.x, 0.5 * size.y};
}

bool Phantom::contains(Vec2 p, double tol) const {
  if (is_disk(shape)) {
    return distance(p, centroid()) <= 0.5 * extent[0] + tol;
  }
  return p.x >= -tol && p.y >= -tol && p.x <= extent[0] + tol &&
         p.y <= extent[1] + tol;
}

double Phantom::boundary_distance(Vec2 p) const {
  if (is_disk(shape)) {
    return std::abs(distance(p, centroid()) - 0.5 * extent[0]);
  }
  const double lx = extent[0];
  const double ly = extent[1];
  if (contains(p, 0.0)) {
    return std::min({p.x, p.y, lx - p.x, ly - p.y});
  }
  const double dx = std::max({-p.x, 0.0, p.x - lx});
  const double dy = std::max({-p.y, 0.0, p.y - ly});
  return std::hypot(dx, dy);
}

Vec2 Phantom::project_to_boundary(Vec2 p) const {
  if (is_disk(shape)) {
    const Vec2 c = centroid();
    const Vec2 v = p - c;
    const double r = norm(v);
    const double radius = 0.5 * extent[0];
    if (r == 0.0) return {c.x + radius, c.y};
    return c + (radius / r) * v;
  }
  const double lx = extent[0];
  const double ly = extent[1];
  Vec2 q{std::clamp(p.x, 0.0, lx), std::clamp(p.y, 0.0, ly)};
  if (!contains(p, 0.0)) return q;
  // Inside: snap to the nearest edge.
  const double d[4] = {q.x, lx - q.x, q.y, ly - q.y};
  const auto k = std::min_element(d, d + 4) - d;
  if (k == 0) q.x = 0.0;
  if (k == 1) q.x = lx;
  if (k == 2) q.y = 0.0;
  if (k == 3) q.y = ly;
  return q;
}

Vec2 Phantom::inward_normal(Vec2 b) const {
  if (is_disk(shape)) {
    const Vec2 v = centroid() - b;
    const double r = norm(v);
    if (r == 0.0) throw GeometryError("inward normal undefined at centre");
    return (1.0 / r) * v;
  }
  Vec2 n{};
  if (std::abs(b.x) <= kBoundaryTolerance) n.x += 1.0;
  if (std::abs(b.x - extent[0]) <= kBoundaryTolerance) n.x -= 1.0;
  if (std::abs(b.y) <= kBoundaryTolerance) n.y += 1.0;
  if (std::abs(b.y - extent[1]) <= kBoundaryTolerance) n.y -= 1.0;
  const double len = norm(n);
  if (len == 0.0) {
    throw GeometryError("point " + fmt_point(b) + " is not on the boundary");
  }
  return (1.0 / len) * n;
}

double Phantom::perimeter() const {
  if (is_disk(shape)) return std::numbers::pi * extent[0];
  return 2.0 * (extent[0] + extent[1]);
}

std::vector<std::string> Phantom::validate() const {
  std::vector<std::string> warnings;
  if (!(mu_a_background > 0.0) || !(mu_s_prime > 0.0)) {
    throw DomainError("background mu_a and mu_s' must be positive");
  }
  const std::size_t used = is_disk(shape) ? 2 : 3;
  for (std::size_t i = 0; i < used; ++i) {
    if (!(extent[i] > 0.0)) throw DomainError("phantom extent must be positive");
  }
  if (mu_s_prime / mu_a_background < 10.0) {
    warnings.push_back(
        "mu_s'/mu_a < 10: diffusion approximation is questionable");
  }
  for (std::size_t i = 0; i < inclusions.size(); ++i) {
    const Inclusion& inc = inclusions[i];
    const std::string tag = "inclusion " + std::to_string(i);
    if (!(inc.radius > 0.0)) throw DomainError(tag + ": radius must be positive");
    if (!(inc.mu_a > 0.0)) throw DomainError(tag + ": mu_a must be positive");
    if (inc.depth_top < 0.0) throw DomainError(tag + ": negative drill depth");
    bool inside = false;
    if (is_disk(shape)) {
      inside = distance(inc.center, centroid()) + inc.radius <=
               0.5 * extent[0] + 1e-12;
    } else {
      inside = inc.center.x - inc.radius >= -1e-12 &&
               inc.center.y - inc.radius >= -1e-12 &&
               inc.center.x + inc.radius <= extent[0] + 1e-12 &&
               inc.center.y + inc.radius <= extent[1] + 1e-12;
    }
    if (!inside) {
      throw GeometryError(tag + " does not lie inside the phantom cross-section");
    }
    if (inc.mu_a <= mu_a_background) {
      warnings.push_back(tag + ": mu_a not above background (non-absorptive target)");
    }
  }
  return warnings;
}

bool inside_inclusion(const Inclusion& inc, const Phantom& phantom, double x,
                      double y, double z) {
  const double h = phantom.height();
  if (z < h - inc.depth_top || z > h) return false;
  return distance({x, y}, inc.center) <= inc.radius;
}

double mu_a_at(const Phantom& phantom, double x, double y, double z) {
  if (!phantom.contains({x, y}) || z < 0.0 || z > phantom.height()) {
    throw GeometryError("point " + fmt_point({x, y}) + " z=" +
                        std::to_string(z) + " is outside the phantom");
  }
  for (const Inclusion& inc : phantom.inclusions) {
    if (inside_inclusion(inc, phantom, x, y, z)) return inc.mu_a;
  }
  return phantom.mu_a_background;
}

Vec2 boundary_point(const Phantom& phantom, double s) {
  const double p = phantom.perimeter();
  s = std::fmod(s, p);
  if (s < 0.0) s += p;
  if (is_disk(phantom.shape)) {
    const double r = 0.5 * phantom.extent[0];
    const double theta = kTwoPi * s / p;
    return {r + r * std::cos(theta), r + r * std::sin(theta)};
  }
  const double lx = phantom.extent[0];
  const double ly = phantom.extent[1];
  if (s <= lx) return {s, 0.0};
  s -= lx;
  if (s <= ly) return {lx, s};
  s -= ly;
  if (s <= lx) return {lx - s, ly};
  s -= lx;
  return {0.0, ly - s};
}

namespace {

std::vector<Vec2> place_on_boundary(const Phantom& phantom, std::size_t n,
                                    double offset_steps) {
  std::vector<Vec2> pts;
  pts.reserve(n);
  if (is_disk(phantom.shape)) {
    // Angles computed directly so that 13 sources land on 2*pi*k/13.
    const double r = 0.5 * phantom.extent[0];
    for (std::size_t k = 0; k < n; ++k) {
      const double theta =
          kTwoPi * (static_cast<double>(k) + offset_steps) / static_cast<double>(n);
      pts.push_back({r + r * std::cos(theta), r + r * std::sin(theta)});
    }
    return pts;
  }
  const double step = phantom.perimeter() / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    pts.push_back(boundary_point(phantom, (static_cast<double>(k) + offset_steps) * step));
  }
  return pts;
}

}  // namespace

OptodeLayout build_layout(const Phantom& phantom, std::size_t n_sources,
                          std::size_t n_detectors, double depth_z) {
  if (n_sources < 1 || n_detectors < 1) {
    throw DomainError("layout needs at least one source and one detector");
  }
  const std::size_t used = is_disk(phantom.shape) ? 1 : 2;
  for (std::size_t i = 0; i < used; ++i) {
    if (!(phantom.extent[i] > 0.0)) throw DomainError("phantom extent must be positive");
  }
  const double p = phantom.perimeter();
  const double spacing = p / static_cast<double>(std::max(n_sources, n_detectors));
  if (spacing < kMinOptodeSpacing) {
    throw LayoutTooDenseError("optode spacing " + std::to_string(spacing) +
                              " cm is below " + std::to_string(kMinOptodeSpacing) +
                              " cm");
  }
  OptodeLayout layout;
  layout.sources = place_on_boundary(phantom, n_sources, 0.0);
  layout.detectors = place_on_boundary(phantom, n_detectors, 0.5);
  layout.depth_z = depth_z;
  return layout;
}

void OptodeLayout::validate(const Phantom& phantom) const {
  if (sources.empty() || detectors.empty()) {
    throw GeometryError("layout needs at least one source and one detector");
  }
  auto check = [&](const std::vector<Vec2>& pts, const char* what) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (phantom.boundary_distance(pts[i]) > kBoundaryTolerance) {
        throw GeometryError(std::string(what) + " " + std::to_string(i) + " at " +
                            fmt_point(pts[i]) + " is not on the phantom boundary");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (pts[i] == pts[j]) {
          throw GeometryError(std::string(what) + " positions " + std::to_string(j) +
                              " and " + std::to_string(i) + " coincide");
        }
      }
    }
  };
  check(sources, "source");
  check(detectors, "detector");
}

ChannelEnumeration enumerate_channels(const OptodeLayout& layout) {
  ChannelEnumeration out;
  out.channels.reserve(layout.sources.size() * layout.detectors.size());
  for (std::size_t s = 0; s < layout.sources.size(); ++s) {
    for (std::size_t d = 0; d < layout.detectors.size(); ++d) {
      const Channel ch{s, d, distance(layout.sources[s], layout.detectors[d])};
      if (ch.separation_d > kColocationTolerance) {
        out.channels.push_back(ch);
      } else {
        out.excluded.push_back(ch);
      }
    }
  }
  return out;
}

}  // namespace dot
