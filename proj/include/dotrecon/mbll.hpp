#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dotrecon/banana.hpp"
#include "dotrecon/forward.hpp"
#include "dotrecon/geometry.hpp"
#include "dotrecon/grid.hpp"

namespace dot {

enum class CorrectionMode {
  differential,  // mu_a^j = ln(I_i / I_j) / L^j
  corrected,     // mu_a^j = (ln(I_i / I_j) + L^i mu_o) / L^j
};

enum class ReferenceMode { per_source, global };

enum class FillPolicy { min_positive_estimate, constant };

struct ChannelEstimate {
  Channel channel;
  double od = 0.0;             // ln(I_s / I_d) with unit nominal I_s
  double delta_od = 0.0;       // ln(I_ref / I_d)
  double path_length = 0.0;    // L^j, cm
  double mu_a_est = 0.0;       // cm^-1, may be negative
  bool is_reference = false;
  std::size_t reference_index = 0;  // index of this channel's reference estimate
};

struct ReconConfig {
  double kappa = kDefaultKappa;
  std::size_t n_samples = kDefaultCurveSamples;
  CorrectionMode correction = CorrectionMode::differential;
  ReferenceMode reference = ReferenceMode::per_source;
  bool clamp_negative = true;
  std::size_t upsample_factor = 32;
  // Raw grid (rows, cols); defaults to (n_sources, n_detectors).
  std::optional<std::pair<std::size_t, std::size_t>> raw_shape;
  FillPolicy fill = FillPolicy::min_positive_estimate;
  double fill_value = 0.0;
};

struct AbsorptionMap2D {
  Grid2D raw;
  std::vector<std::size_t> raw_hits;  // channels touching each raw cell
  Grid2D upsampled;
  double depth_z = 0.0;
  Vec2 extent;  // cross-section bounding box, cm
};

double optical_density(double i_source_ref, double i_detected);

struct ReferenceCandidate {
  double separation_d = 0.0;
  double od = 0.0;
  std::size_t detector_index = 0;
};

// Index of the reference within one source group: minimum separation, then
// minimum OD, then lowest detector index. Separations within 1e-9 cm tie.
std::size_t select_reference(std::span<const ReferenceCandidate> group);

double estimate_mu_a(double i_reference, double l_reference, double i_target,
                     double l_target, CorrectionMode mode, double mu_background);

// OD, reference selection and differential estimates for every channel.
std::vector<ChannelEstimate> estimate_channels(const MeasurementSet& measurements,
                                               const OptodeLayout& layout,
                                               const Phantom& optics,
                                               const ReconConfig& config);

struct RasterCell {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const RasterCell&, const RasterCell&) = default;
};

// Nearest raw node of a cross-section point; throws GeometryError when the
// point lies outside the extent.
RasterCell raster_cell(Vec2 p, Vec2 extent, std::size_t rows, std::size_t cols);

// Each curve adds its estimate once to every raw cell its samples fall in;
// a cell is the mean of the channels touching it. `values[k]` belongs to
// `curves[k]`.
AbsorptionMap2D backproject(std::span<const double> values, std::span<const BananaCurve> curves,
                            std::size_t rows, std::size_t cols, Vec2 extent,
                            FillPolicy fill = FillPolicy::min_positive_estimate,
                            double fill_value = 0.0, bool clamp_negative = true);

// Separable Catmull-Rom upsampling inserting factor-1 values between knots.
Grid2D cubic_upsample(const Grid2D& raw, std::size_t factor = 32);

struct Reconstruction {
  AbsorptionMap2D map;
  std::vector<ChannelEstimate> estimates;
  // One curve per non-reference estimate, in estimate order.
  std::vector<BananaCurve> curves;
  std::vector<std::size_t> curve_estimate;  // estimate index of each curve
};

Reconstruction reconstruct2d(const MeasurementSet& measurements, const OptodeLayout& layout,
                             const Phantom& optics, const ReconConfig& config = {});

}  // namespace dot
