#include "dotrecon/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dotrecon/error.hpp"

namespace dot {

Grid2D Volume3D::plane(std::size_t z) const {
  Grid2D g(rows, cols);
  std::copy_n(voxels.begin() + static_cast<std::ptrdiff_t>(z * rows * cols), rows * cols,
              g.values().begin());
  return g;
}

Volume3D stack_and_interpolate(std::vector<DepthSlice> slices, std::size_t n_z_out) {
  if (slices.size() < 2) {
    throw DimensionError("volume stacking needs at least two slices, got " +
                         std::to_string(slices.size()));
  }
  if (n_z_out < slices.size()) {
    throw DimensionError("output plane count must be at least the slice count");
  }
  std::sort(slices.begin(), slices.end(),
            [](const DepthSlice& a, const DepthSlice& b) { return a.depth_z < b.depth_z; });
  const std::size_t rows = slices.front().map.rows();
  const std::size_t cols = slices.front().map.cols();
  for (std::size_t k = 0; k < slices.size(); ++k) {
    if (slices[k].map.rows() != rows || slices[k].map.cols() != cols) {
      throw DimensionError("slice at depth " + std::to_string(slices[k].depth_z) +
                           " has mismatched dimensions");
    }
    if (k > 0 && !(slices[k].depth_z > slices[k - 1].depth_z)) {
      throw DimensionError("duplicate slice depth " + std::to_string(slices[k].depth_z));
    }
  }

  Volume3D vol;
  vol.nz = n_z_out;
  vol.rows = rows;
  vol.cols = cols;
  vol.z_min = slices.front().depth_z;
  vol.z_max = slices.back().depth_z;
  vol.voxels.resize(n_z_out * rows * cols);
  vol.plane_depths.resize(n_z_out);

  const double span = vol.z_max - vol.z_min;
  const double knot_tol = 1e-9 * std::max(1.0, span);
  std::size_t seg = 0;
  for (std::size_t z = 0; z < n_z_out; ++z) {
    const double depth =
        z + 1 == n_z_out ? vol.z_max
                         : vol.z_min + span * static_cast<double>(z) / static_cast<double>(n_z_out - 1);
    vol.plane_depths[z] = depth;
    while (seg + 2 < slices.size() && depth > slices[seg + 1].depth_z) ++seg;
    const DepthSlice& lo = slices[seg];
    const DepthSlice& hi = slices[seg + 1];
    auto out = vol.voxels.begin() + static_cast<std::ptrdiff_t>(z * rows * cols);

    const DepthSlice* exact = nullptr;
    if (std::abs(depth - lo.depth_z) <= knot_tol) exact = &lo;
    if (std::abs(depth - hi.depth_z) <= knot_tol) exact = &hi;
    if (exact != nullptr) {
      std::copy(exact->map.values().begin(), exact->map.values().end(), out);
      continue;
    }
    const double w = (depth - lo.depth_z) / (hi.depth_z - lo.depth_z);
    for (std::size_t i = 0; i < rows * cols; ++i) {
      out[static_cast<std::ptrdiff_t>(i)] = std::lerp(lo.map.values()[i], hi.map.values()[i], w);
    }
  }
  vol.slices_in = std::move(slices);
  return vol;
}

}  // namespace dot
