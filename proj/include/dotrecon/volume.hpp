#pragma once

#include <cstddef>
#include <vector>

#include "dotrecon/grid.hpp"
#include "dotrecon/mbll.hpp"

namespace dot {

struct DepthSlice {
  double depth_z = 0.0;
  Grid2D map;  // upsampled absorption map at that depth
};

struct Volume3D {
  std::vector<DepthSlice> slices_in;
  std::size_t nz = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> plane_depths;  // nz values
  std::vector<double> voxels;        // z-major: (z * rows + r) * cols + c
  double z_min = 0.0;
  double z_max = 0.0;

  double at(std::size_t z, std::size_t r, std::size_t c) const {
    return voxels[(z * rows + r) * cols + c];
  }
  Grid2D plane(std::size_t z) const;
};

inline constexpr std::size_t kDefaultPlanes = 33;

// Linear interpolation in z between adjacent slices at n_z_out equally
// spaced planes over [min depth, max depth]. Slices may arrive unsorted;
// they must have matching dimensions and distinct depths.
Volume3D stack_and_interpolate(std::vector<DepthSlice> slices,
                               std::size_t n_z_out = kDefaultPlanes);

}  // namespace dot
