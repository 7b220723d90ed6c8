// Reconstruction fidelity on simulated phantoms. These are property checks of
// the whole pipeline rather than of single modules; several of them do not
// hold for the differential back-projection estimate (see README).

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "dotrecon/cosamp.hpp"
#include "dotrecon/metrics.hpp"
#include "dotrecon/volume.hpp"

using namespace dot;

namespace {

struct Simulated {
  OptodeLayout layout;
  MeasurementSet measurements;
};

Simulated simulate(const Phantom& p, std::size_t ns, std::size_t nd, double z) {
  const OptodeLayout lay = build_layout(p, ns, nd, z);
  return {lay, simulate_measurements(p, lay)};
}

Vec2 argmax_position(const Grid2D& g, Vec2 extent) {
  const auto& v = g.values();
  const auto idx = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  return {static_cast<double>(idx % g.cols()) * extent.x / static_cast<double>(g.cols() - 1),
          static_cast<double>(idx / g.cols()) * extent.y / static_cast<double>(g.rows() - 1)};
}

Phantom rect44(std::vector<Inclusion> inclusions = {}) {
  return {Shape::rectangular, {4.4, 4.4, 2.2}, 0.25, 20.0, std::move(inclusions)};
}

Phantom two_targets() {
  return rect44({{{2.47, 1.70}, 0.2, 1.5, 6.76}, {{1.10, 3.30}, 0.25, 1.5, 6.76}});
}

}  // namespace

TEST_CASE("homogeneous phantom: mean of the map within 25% of the background") {
  const Phantom p = rect44();
  const Simulated s = simulate(p, 12, 16, 1.1);
  const double mean = reconstruct2d(s.measurements, s.layout, p).map.upsampled.mean();
  CHECK(std::abs(mean - 0.25) <= 0.25 * 0.25);
}

TEST_CASE("homogeneous phantom: differential OD matches L times the background") {
  const Phantom p = rect44();
  const Simulated s = simulate(p, 12, 16, 1.1);
  const Reconstruction rec = reconstruct2d(s.measurements, s.layout, p);
  const SensingSystem sys = build_sensing(rec, 0.25);
  double most_negative = 0.0;
  double worst_relative = 0.0;
  for (std::size_t k = 0; k < rec.curve_estimate.size(); ++k) {
    const double expect = rec.estimates[rec.curve_estimate[k]].path_length * 0.25;
    const double y = sys.y[static_cast<Eigen::Index>(k)];
    most_negative = std::min(most_negative, y);
    worst_relative = std::max(worst_relative, std::abs(y - expect) / expect);
  }
  CHECK(most_negative >= -1e-9);
  CHECK(worst_relative <= 0.25);
}

TEST_CASE("centred inclusion: map maximum inside the dilated inclusion disk") {
  const Phantom p{Shape::rectangular, {3.0, 3.0, 2.0}, 0.25, 20.0, {{{1.5, 1.5}, 0.25, 2.0, 6.76}}};
  const Simulated s = simulate(p, 12, 16, 1.0);
  const AbsorptionMap2D map = reconstruct2d(s.measurements, s.layout, p).map;
  CHECK(distance(argmax_position(map.upsampled, map.extent), {1.5, 1.5}) <= 0.25 + 0.3);
}

TEST_CASE("raising the inclusion absorption raises the map maximum") {
  double prev = 0.0;
  for (double mu : {2.72, 5.20, 6.76}) {
    const Phantom p{Shape::rectangular, {3.0, 3.0, 2.0}, 0.25, 20.0,
                    {{{1.5, 1.5}, 0.25, 2.0, mu}}};
    const Simulated s = simulate(p, 12, 16, 1.0);
    const double peak = reconstruct2d(s.measurements, s.layout, p).map.upsampled.max();
    CHECK(peak > prev);
    prev = peak;
  }
}

TEST_CASE("two-inclusion phantom: both centres localised within 0.3 cm") {
  const Phantom p = two_targets();
  const Simulated s = simulate(p, 12, 16, 1.1);
  const AbsorptionMap2D map = reconstruct2d(s.measurements, s.layout, p).map;
  const auto err = match_centers({{2.47, 1.70}, {1.10, 3.30}}, localize(map.upsampled, map.extent));
  CHECK(err[0] <= 0.3);
  CHECK(err[1] <= 0.3);
}

TEST_CASE("three-depth volume: maximum lies where the inclusions exist") {
  const Phantom p = two_targets();
  std::vector<DepthSlice> slices;
  for (double z : {0.5, 1.1, 1.8}) {
    const Simulated s = simulate(p, 12, 16, z);
    slices.push_back({z, reconstruct2d(s.measurements, s.layout, p).map.upsampled});
  }
  const Volume3D v = stack_and_interpolate(slices);
  const auto it = std::max_element(v.voxels.begin(), v.voxels.end());
  const auto idx = static_cast<std::size_t>(it - v.voxels.begin());
  const std::size_t plane = idx / (v.rows * v.cols);
  // Drilled 1.5 cm from the top of a 2.2 cm block: present for z >= 0.7.
  CHECK(v.plane_depths[plane] >= 0.7);
  const Vec2 at = argmax_position(v.plane(plane), {4.4, 4.4});
  bool near = false;
  for (const Inclusion& inc : p.inclusions) near = near || distance(at, inc.center) <= inc.radius + 0.3;
  CHECK(near);
}

TEST_CASE("inclusion in one corner raises its half of the map") {
  const Phantom p{Shape::rectangular, {3.0, 3.0, 2.0}, 0.25, 20.0, {{{0.8, 0.8}, 0.25, 2.0, 6.76}}};
  const Phantom h{Shape::rectangular, {3.0, 3.0, 2.0}, 0.25, 20.0, {}};
  const Simulated s = simulate(p, 12, 16, 1.0);
  const Simulated t = simulate(h, 12, 16, 1.0);
  const Grid2D with = reconstruct2d(s.measurements, s.layout, p).map.upsampled;
  const Grid2D without = reconstruct2d(t.measurements, t.layout, h).map.upsampled;
  double near_gain = 0.0;
  double far_gain = 0.0;
  for (std::size_t r = 0; r < with.rows(); ++r) {
    for (std::size_t c = 0; c < with.cols(); ++c) {
      const double d = with(r, c) - without(r, c);
      (r + c < (with.rows() + with.cols()) / 2 ? near_gain : far_gain) += d;
    }
  }
  CHECK(near_gain > far_gain);
}

TEST_CASE("slab: absorber-side optical density exceeds the clear side by 20%") {
  const Phantom slab{Shape::slab, {4.4, 2.0, 5.0}, 0.25, 20.0, {{{2.2, 1.65}, 0.25, 5.0, 6.76}}};
  const OptodeLayout lay{{{3.2, 2.0}}, {{2.2, 2.0}, {4.2, 2.0}}, 2.5};
  const MeasurementSet m = simulate_measurements(slab, lay);
  const double od_absorber = -std::log(m.intensity(0, 0));
  const double od_clear = -std::log(m.intensity(0, 1));
  CHECK(od_absorber >= 1.2 * od_clear);
}
