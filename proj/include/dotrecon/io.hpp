#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dotrecon/banana.hpp"
#include "dotrecon/forward.hpp"
#include "dotrecon/geometry.hpp"
#include "dotrecon/grid.hpp"
#include "dotrecon/metrics.hpp"
#include "dotrecon/volume.hpp"

namespace dot {

// Every writer below produces text or bytes that its reader accepts, and
// write(read(write(x))) is byte-identical to write(x).

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Phantom JSON:
// {
//   "shape": "rectangular" | "cylindrical" | "slab",
//   "extent_cm": [x, y, z],
//   "mu_a_background": 0.25,
//   "mu_s_prime": 20,
//   "inclusions": [
//     {"center_cm": [x, y], "radius_cm": r, "depth_top_cm": d, "mu_a": m}
//   ]
// }
Phantom parse_phantom(std::string_view json_text);
std::string phantom_to_json(const Phantom& phantom);
Phantom load_phantom(const std::filesystem::path& path);

// Measurement CSV with header
//   source_index,detector_index,source_x_cm,source_y_cm,detector_x_cm,
//   detector_y_cm,depth_z_cm,intensity
// Optode positions travel with the data so hardware captures can be read
// without a phantom-derived layout.
struct MeasurementFile {
  MeasurementSet measurements;
  OptodeLayout layout;
};

std::string measurements_to_csv(const MeasurementSet& measurements, const OptodeLayout& layout);
MeasurementFile parse_measurements_csv(std::string_view text);
MeasurementFile load_measurements(const std::filesystem::path& path);

// Map CSV: a "# rows=R,cols=C,extent_x_cm=X,extent_y_cm=Y,depth_z_cm=Z"
// line followed by R lines of C comma-separated values (row 0 is y = 0).
struct MapFile {
  Grid2D map;
  Vec2 extent;
  double depth_z = 0.0;
};

std::string map_to_csv(const MapFile& map);
MapFile parse_map_csv(std::string_view text);
MapFile load_map(const std::filesystem::path& path);

// 16-bit binary PGM (P5, maxval 65535, big-endian samples) with linear
// min-max scaling. The sidecar JSON records min, max and dimensions.
struct PgmImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint16_t> pixels;
  double value_min = 0.0;
  double value_max = 0.0;

  // Values recovered from the pixel codes through the recorded scaling.
  Grid2D values() const;
};

PgmImage to_pgm(const Grid2D& map);
std::string pgm_bytes(const PgmImage& image);
std::string pgm_sidecar_json(const PgmImage& image);
PgmImage parse_pgm(std::string_view bytes, std::string_view sidecar_json);

// Raw little-endian float32 voxels, z-major, plus a JSON sidecar listing the
// dimensions, extent, plane depths and input slice depths.
std::string volume_bytes(const Volume3D& volume);
std::string volume_sidecar_json(const Volume3D& volume, Vec2 extent);

struct VolumeFile {
  std::size_t nz = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec2 extent;
  std::vector<double> plane_depths;
  std::vector<double> input_depths;
  std::vector<float> voxels;
};

VolumeFile parse_volume(std::string_view bytes, std::string_view sidecar_json);

// Curve dump: channel,source_index,detector_index,t,x_cm,y_cm,clipped.
std::string curves_to_csv(const std::vector<BananaCurve>& curves,
                          const std::vector<Channel>& channels);

std::string metric_report_json(const MetricReport& report);

// 64-bit FNV-1a as 16 lower-case hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace dot
