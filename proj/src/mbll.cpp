#include "dotrecon/mbll.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dotrecon/error.hpp"

namespace dot {

namespace {

constexpr double kSeparationTie = 1e-9;
// Estimates from equal-separation pairs are zero up to rounding; they do not
// count as positive when choosing the fill value.
constexpr double kNumericalZero = 1e-9;

}  // namespace

double optical_density(double i_source_ref, double i_detected) {
  if (!(i_source_ref > 0.0) || !(i_detected > 0.0)) {
    throw DomainError("optical density needs positive intensities");
  }
  return std::log(i_source_ref / i_detected);
}

std::size_t select_reference(std::span<const ReferenceCandidate> group) {
  if (group.empty()) throw DomainError("reference selection on an empty source group");
  std::size_t best = 0;
  for (std::size_t k = 1; k < group.size(); ++k) {
    const auto& c = group[k];
    const auto& b = group[best];
    if (c.separation_d < b.separation_d - kSeparationTie) {
      best = k;
    } else if (std::abs(c.separation_d - b.separation_d) <= kSeparationTie) {
      if (c.od < b.od || (c.od == b.od && c.detector_index < b.detector_index)) best = k;
    }
  }
  return best;
}

double estimate_mu_a(double i_reference, double l_reference, double i_target,
                     double l_target, CorrectionMode mode, double mu_background) {
  if (!(i_reference > 0.0) || !(i_target > 0.0)) {
    throw DomainError("mu_a estimate needs positive intensities");
  }
  if (!(l_target > 0.0)) throw DomainError("mu_a estimate needs a positive path length");
  const double delta = std::log(i_reference / i_target);
  if (mode == CorrectionMode::corrected) {
    return (delta + l_reference * mu_background) / l_target;
  }
  return delta / l_target;
}

std::vector<ChannelEstimate> estimate_channels(const MeasurementSet& measurements,
                                               const OptodeLayout& layout,
                                               const Phantom& optics,
                                               const ReconConfig& config) {
  const auto channels = enumerate_channels(layout).channels;
  measurements.validate(channels);
  const double mu_o = optics.mu_a_background;

  std::vector<ChannelEstimate> est(channels.size());
  for (std::size_t k = 0; k < channels.size(); ++k) {
    est[k].channel = channels[k];
    est[k].od = optical_density(1.0, measurements.records[k].intensity);
    est[k].path_length = path_length(mu_o, optics.mu_s_prime, channels[k].separation_d);
  }

  // Group boundaries: channels are ordered by source index.
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  if (config.reference == ReferenceMode::global) {
    groups.emplace_back(0, est.size());
  } else {
    for (std::size_t begin = 0; begin < est.size();) {
      std::size_t end = begin;
      while (end < est.size() &&
             est[end].channel.source_index == est[begin].channel.source_index) {
        ++end;
      }
      groups.emplace_back(begin, end);
      begin = end;
    }
  }

  for (const auto& [begin, end] : groups) {
    std::vector<ReferenceCandidate> cands;
    cands.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      cands.push_back({est[k].channel.separation_d, est[k].od, est[k].channel.detector_index});
    }
    const std::size_t ref = begin + select_reference(cands);
    const double i_ref = measurements.records[ref].intensity;
    for (std::size_t k = begin; k < end; ++k) {
      ChannelEstimate& e = est[k];
      e.reference_index = ref;
      if (k == ref) {
        e.is_reference = true;
        e.delta_od = 0.0;
        e.mu_a_est = mu_o;
        continue;
      }
      const double i_k = measurements.records[k].intensity;
      e.delta_od = std::log(i_ref / i_k);
      e.mu_a_est = estimate_mu_a(i_ref, est[ref].path_length, i_k, e.path_length,
                                 config.correction, mu_o);
    }
  }
  return est;
}

RasterCell raster_cell(Vec2 p, Vec2 extent, std::size_t rows, std::size_t cols) {
  constexpr double tol = 1e-9;
  if (p.x < -tol || p.y < -tol || p.x > extent.x + tol || p.y > extent.y + tol) {
    throw GeometryError("curve sample outside the raster extent");
  }
  auto snap = [](double v, double len, std::size_t n) -> std::size_t {
    if (n <= 1) return 0;
    const double f = std::clamp(v / len, 0.0, 1.0) * static_cast<double>(n - 1);
    return static_cast<std::size_t>(std::lround(f));
  };
  return {snap(p.y, extent.y, rows), snap(p.x, extent.x, cols)};
}

AbsorptionMap2D backproject(std::span<const double> values, std::span<const BananaCurve> curves,
                            std::size_t rows, std::size_t cols, Vec2 extent, FillPolicy fill,
                            double fill_value, bool clamp_negative) {
  if (values.size() != curves.size()) {
    throw DimensionError("back-projection needs one value per curve");
  }
  if (rows == 0 || cols == 0) throw DimensionError("raw grid must be non-empty");
  AbsorptionMap2D map;
  map.extent = extent;
  map.raw = Grid2D(rows, cols, 0.0);
  map.raw_hits.assign(rows * cols, 0);

  std::vector<std::size_t> last_channel(rows * cols, std::numeric_limits<std::size_t>::max());
  for (std::size_t ch = 0; ch < curves.size(); ++ch) {
    const double v = clamp_negative ? std::max(values[ch], 0.0) : values[ch];
    for (const Vec2& p : curves[ch].sample_points) {
      const RasterCell cell = raster_cell(p, extent, rows, cols);
      const std::size_t idx = cell.row * cols + cell.col;
      if (last_channel[idx] == ch) continue;
      last_channel[idx] = ch;
      map.raw.values()[idx] += v;
      ++map.raw_hits[idx];
    }
  }

  double filler = fill_value;
  if (fill == FillPolicy::min_positive_estimate) {
    filler = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (double v : values) {
      if (v > kNumericalZero && v < best) best = v;
    }
    if (std::isfinite(best)) filler = best;
  }
  for (std::size_t idx = 0; idx < rows * cols; ++idx) {
    if (map.raw_hits[idx] == 0) {
      map.raw.values()[idx] = filler;
    } else {
      map.raw.values()[idx] /= static_cast<double>(map.raw_hits[idx]);
    }
  }
  return map;
}

namespace {

struct CubicWeights {
  double w[4];
};

CubicWeights catmull_rom(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {{0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
           0.5 * (-3.0 * t3 + 4.0 * t2 + t), 0.5 * (t3 - t2)}};
}

// Upsamples n knots (stride apart in `in`) into (n-1)*factor+1 outputs.
// Edge knots are replicated for the outer taps.
void upsample_line(const double* in, std::size_t n, std::size_t in_stride, double* out,
                   std::size_t out_stride, std::size_t factor,
                   const std::vector<CubicWeights>& weights) {
  auto knot = [&](long k) {
    const long clamped = std::clamp<long>(k, 0, static_cast<long>(n) - 1);
    return in[static_cast<std::size_t>(clamped) * in_stride];
  };
  const std::size_t n_out = (n - 1) * factor + 1;
  for (std::size_t o = 0; o < n_out; ++o) {
    const std::size_t k = o / factor;
    const std::size_t phase = o % factor;
    if (phase == 0) {
      out[o * out_stride] = in[k * in_stride];
      continue;
    }
    const auto kl = static_cast<long>(k);
    const CubicWeights& w = weights[phase];
    out[o * out_stride] = w.w[0] * knot(kl - 1) + w.w[1] * knot(kl) + w.w[2] * knot(kl + 1) +
                          w.w[3] * knot(kl + 2);
  }
}

}  // namespace

Grid2D cubic_upsample(const Grid2D& raw, std::size_t factor) {
  if (raw.rows() < 2 || raw.cols() < 2) {
    throw DimensionError("cubic upsampling needs at least a 2x2 grid, got " +
                         std::to_string(raw.rows()) + "x" + std::to_string(raw.cols()));
  }
  if (factor < 1) throw DimensionError("upsampling factor must be at least 1");
  std::vector<CubicWeights> weights(factor);
  for (std::size_t p = 0; p < factor; ++p) {
    weights[p] = catmull_rom(static_cast<double>(p) / static_cast<double>(factor));
  }
  const std::size_t out_rows = (raw.rows() - 1) * factor + 1;
  const std::size_t out_cols = (raw.cols() - 1) * factor + 1;

  // Along x for every raw row, then along y for every output column.
  Grid2D wide(raw.rows(), out_cols);
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    upsample_line(&raw.values()[r * raw.cols()], raw.cols(), 1, &wide.values()[r * out_cols], 1,
                  factor, weights);
  }
  Grid2D out(out_rows, out_cols);
  for (std::size_t c = 0; c < out_cols; ++c) {
    upsample_line(&wide.values()[c], raw.rows(), out_cols, &out.values()[c], out_cols, factor,
                  weights);
  }
  return out;
}

Reconstruction reconstruct2d(const MeasurementSet& measurements, const OptodeLayout& layout,
                             const Phantom& optics, const ReconConfig& config) {
  layout.validate(optics);
  Reconstruction rec;
  rec.estimates = estimate_channels(measurements, layout, optics, config);

  std::vector<double> values;
  for (std::size_t k = 0; k < rec.estimates.size(); ++k) {
    const ChannelEstimate& e = rec.estimates[k];
    if (e.is_reference) continue;
    rec.curves.push_back(fit_channel_curve(e.channel, layout, optics, config.kappa,
                                           config.n_samples));
    rec.curve_estimate.push_back(k);
    values.push_back(e.mu_a_est);
  }

  const auto [rows, cols] =
      config.raw_shape.value_or(std::pair{layout.sources.size(), layout.detectors.size()});
  rec.map = backproject(values, rec.curves, rows, cols, optics.cross_section_size(), config.fill,
                        config.fill_value, config.clamp_negative);
  rec.map.depth_z = measurements.depth_z;
  rec.map.upsampled = cubic_upsample(rec.map.raw, config.upsample_factor);
  return rec;
}

}  // namespace dot
