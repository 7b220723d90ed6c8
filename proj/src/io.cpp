#include "dotrecon/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "dotrecon/csv.hpp"
#include "dotrecon/error.hpp"
#include "json.hpp"

namespace dot {

using json = nlohmann::ordered_json;

namespace {

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw IoError(std::string(what) + ": " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key, std::string_view what) {
  if (!j.contains(key)) throw IoError(std::string(what) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(std::string(what) + ": field '" + key + "': " + e.what());
  }
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

void put_u16_be(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xFF));
}

const char* const kMeasurementHeader =
    "source_index,detector_index,source_x_cm,source_y_cm,detector_x_cm,detector_y_cm,"
    "depth_z_cm,intensity";

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Phantom parse_phantom(std::string_view json_text) {
  const std::string_view what = "phantom";
  const json j = parse_json(json_text, what);
  Phantom p;
  try {
    p.shape = shape_from_string(field<std::string>(j, "shape", what));
  } catch (const GeometryError& e) {
    throw IoError(std::string("phantom: ") + e.what());
  }
  const auto extent = field<std::vector<double>>(j, "extent_cm", what);
  if (extent.size() != 3) throw IoError("phantom: extent_cm must have 3 entries");
  std::copy(extent.begin(), extent.end(), p.extent.begin());
  p.mu_a_background = field<double>(j, "mu_a_background", what);
  p.mu_s_prime = field<double>(j, "mu_s_prime", what);
  if (j.contains("inclusions")) {
    for (const json& ji : j.at("inclusions")) {
      Inclusion inc;
      const auto c = field<std::vector<double>>(ji, "center_cm", "inclusion");
      if (c.size() != 2) throw IoError("inclusion: center_cm must have 2 entries");
      inc.center = {c[0], c[1]};
      inc.radius = field<double>(ji, "radius_cm", "inclusion");
      inc.depth_top = field<double>(ji, "depth_top_cm", "inclusion");
      inc.mu_a = field<double>(ji, "mu_a", "inclusion");
      p.inclusions.push_back(inc);
    }
  }
  return p;
}

std::string phantom_to_json(const Phantom& phantom) {
  json j;
  j["shape"] = std::string(to_string(phantom.shape));
  j["extent_cm"] = phantom.extent;
  j["mu_a_background"] = phantom.mu_a_background;
  j["mu_s_prime"] = phantom.mu_s_prime;
  j["inclusions"] = json::array();
  for (const Inclusion& inc : phantom.inclusions) {
    json ji;
    ji["center_cm"] = {inc.center.x, inc.center.y};
    ji["radius_cm"] = inc.radius;
    ji["depth_top_cm"] = inc.depth_top;
    ji["mu_a"] = inc.mu_a;
    j["inclusions"].push_back(ji);
  }
  return j.dump(2) + "\n";
}

Phantom load_phantom(const std::filesystem::path& path) {
  try {
    return parse_phantom(read_text_file(path));
  } catch (const IoError& e) {
    const std::string msg = e.what();
    if (msg.find(path.string()) != std::string::npos) throw;
    throw IoError("'" + path.string() + "': " + msg);
  }
}

std::string measurements_to_csv(const MeasurementSet& measurements, const OptodeLayout& layout) {
  std::string out = kMeasurementHeader;
  out += '\n';
  const std::string depth = format_double(measurements.depth_z);
  for (const MeasurementRecord& r : measurements.records) {
    if (r.source_index >= layout.sources.size() || r.detector_index >= layout.detectors.size()) {
      throw IoError("measurement refers to an optode missing from the layout");
    }
    const Vec2 s = layout.sources[r.source_index];
    const Vec2 d = layout.detectors[r.detector_index];
    out += std::to_string(r.source_index) + ',' + std::to_string(r.detector_index) + ',' +
           format_double(s.x) + ',' + format_double(s.y) + ',' + format_double(d.x) + ',' +
           format_double(d.y) + ',' + depth + ',' + format_double(r.intensity) + '\n';
  }
  return out;
}

MeasurementFile parse_measurements_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kMeasurementHeader) {
    throw IoError(std::string("measurement CSV must start with the header '") +
                  kMeasurementHeader + "'");
  }
  MeasurementFile out;
  out.measurements.provenance = Provenance::file;
  std::map<std::size_t, Vec2> sources;
  std::map<std::size_t, Vec2> detectors;
  bool have_depth = false;
  auto record_position = [](std::map<std::size_t, Vec2>& table, std::size_t idx, Vec2 p,
                            std::size_t line_no) {
    auto [it, inserted] = table.emplace(idx, p);
    if (!inserted && !(it->second == p)) {
      throw IoError("line " + std::to_string(line_no) + ": optode " + std::to_string(idx) +
                    " changes position");
    }
  };
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto f = split_csv_line(lines[n]);
    if (f.size() != 8) {
      throw IoError("line " + std::to_string(n + 1) + ": expected 8 fields, got " +
                    std::to_string(f.size()));
    }
    MeasurementRecord r;
    r.source_index = parse_index(f[0]);
    r.detector_index = parse_index(f[1]);
    record_position(sources, r.source_index, {parse_double(f[2]), parse_double(f[3])}, n + 1);
    record_position(detectors, r.detector_index, {parse_double(f[4]), parse_double(f[5])}, n + 1);
    const double z = parse_double(f[6]);
    if (have_depth && z != out.measurements.depth_z) {
      throw IoError("line " + std::to_string(n + 1) + ": mixed depths in one measurement file");
    }
    out.measurements.depth_z = z;
    have_depth = true;
    r.intensity = parse_double(f[7]);
    out.measurements.records.push_back(r);
  }
  if (out.measurements.records.empty()) throw IoError("measurement CSV has no records");
  auto to_list = [](const std::map<std::size_t, Vec2>& table, const char* kind) {
    std::vector<Vec2> list;
    for (const auto& [idx, p] : table) {
      if (idx != list.size()) {
        throw IoError(std::string(kind) + " indices must be contiguous from 0; missing " +
                      std::to_string(list.size()));
      }
      list.push_back(p);
    }
    return list;
  };
  out.layout.sources = to_list(sources, "source");
  out.layout.detectors = to_list(detectors, "detector");
  out.layout.depth_z = out.measurements.depth_z;
  return out;
}

MeasurementFile load_measurements(const std::filesystem::path& path) {
  try {
    return parse_measurements_csv(read_text_file(path));
  } catch (const Error& e) {
    const std::string msg = e.what();
    if (msg.find(path.string()) != std::string::npos) throw;
    throw IoError("'" + path.string() + "': " + msg);
  }
}

std::string map_to_csv(const MapFile& map) {
  std::string out = "# rows=" + std::to_string(map.map.rows()) +
                    ",cols=" + std::to_string(map.map.cols()) +
                    ",extent_x_cm=" + format_double(map.extent.x) +
                    ",extent_y_cm=" + format_double(map.extent.y) +
                    ",depth_z_cm=" + format_double(map.depth_z) + "\n";
  for (std::size_t r = 0; r < map.map.rows(); ++r) {
    for (std::size_t c = 0; c < map.map.cols(); ++c) {
      if (c) out += ',';
      out += format_double(map.map(r, c));
    }
    out += '\n';
  }
  return out;
}

MapFile parse_map_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front().rfind("# ", 0) != 0) {
    throw IoError("map CSV must start with a '# rows=...' header line");
  }
  std::map<std::string, std::string> header;
  for (const std::string& kv : split_csv_line(std::string_view(lines.front()).substr(2))) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw IoError("map CSV header entry '" + kv + "' lacks '='");
    header[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) throw IoError(std::string("map CSV header lacks ") + key);
    return it->second;
  };
  MapFile out;
  const std::size_t rows = parse_index(get("rows"));
  const std::size_t cols = parse_index(get("cols"));
  out.extent = {parse_double(get("extent_x_cm")), parse_double(get("extent_y_cm"))};
  out.depth_z = parse_double(get("depth_z_cm"));
  out.map = Grid2D(rows, cols);
  std::size_t r = 0;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    if (r >= rows) throw IoError("map CSV has more than " + std::to_string(rows) + " rows");
    const auto f = split_csv_line(lines[n]);
    if (f.size() != cols) {
      throw IoError("map CSV row " + std::to_string(r) + " has " + std::to_string(f.size()) +
                    " values, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) out.map(r, c) = parse_double(f[c]);
    ++r;
  }
  if (r != rows) throw IoError("map CSV has " + std::to_string(r) + " rows, expected " +
                               std::to_string(rows));
  return out;
}

MapFile load_map(const std::filesystem::path& path) {
  try {
    return parse_map_csv(read_text_file(path));
  } catch (const Error& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

Grid2D PgmImage::values() const {
  Grid2D g(rows, cols, value_min);
  const double span = value_max - value_min;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    g.values()[i] = value_min + span * static_cast<double>(pixels[i]) / 65535.0;
  }
  return g;
}

PgmImage to_pgm(const Grid2D& map) {
  if (map.empty()) throw DimensionError("cannot export an empty map");
  PgmImage img;
  img.rows = map.rows();
  img.cols = map.cols();
  img.value_min = map.min();
  img.value_max = map.max();
  const double span = img.value_max - img.value_min;
  img.pixels.resize(map.size(), 0);
  if (span > 0.0) {
    for (std::size_t i = 0; i < map.size(); ++i) {
      const double scaled = (map.values()[i] - img.value_min) / span * 65535.0;
      img.pixels[i] = static_cast<std::uint16_t>(std::clamp(std::lround(scaled), 0L, 65535L));
    }
  }
  return img;
}

std::string pgm_bytes(const PgmImage& image) {
  std::string out = "P5\n" + std::to_string(image.cols) + " " + std::to_string(image.rows) +
                    "\n65535\n";
  out.reserve(out.size() + 2 * image.pixels.size());
  for (std::uint16_t v : image.pixels) put_u16_be(out, v);
  return out;
}

std::string pgm_sidecar_json(const PgmImage& image) {
  json j;
  j["format"] = "pgm16";
  j["rows"] = image.rows;
  j["cols"] = image.cols;
  j["maxval"] = 65535;
  j["value_min"] = image.value_min;
  j["value_max"] = image.value_max;
  j["scaling"] = "value = value_min + (value_max - value_min) * code / 65535";
  return j.dump(2) + "\n";
}

PgmImage parse_pgm(std::string_view bytes, std::string_view sidecar_json) {
  std::istringstream head{std::string(bytes.substr(0, std::min<std::size_t>(bytes.size(), 64)))};
  std::string magic;
  std::size_t cols = 0;
  std::size_t rows = 0;
  unsigned maxval = 0;
  head >> magic >> cols >> rows >> maxval;
  if (!head || magic != "P5" || maxval != 65535) throw IoError("not a 16-bit P5 PGM");
  const auto offset = static_cast<std::size_t>(head.tellg()) + 1;
  if (bytes.size() != offset + 2 * rows * cols) throw IoError("PGM pixel data has wrong length");
  PgmImage img;
  img.rows = rows;
  img.cols = cols;
  img.pixels.resize(rows * cols);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const auto hi = static_cast<unsigned char>(bytes[offset + 2 * i]);
    const auto lo = static_cast<unsigned char>(bytes[offset + 2 * i + 1]);
    img.pixels[i] = static_cast<std::uint16_t>((hi << 8) | lo);
  }
  const json j = parse_json(sidecar_json, "PGM sidecar");
  if (field<std::size_t>(j, "rows", "PGM sidecar") != rows ||
      field<std::size_t>(j, "cols", "PGM sidecar") != cols) {
    throw IoError("PGM sidecar dimensions disagree with the image");
  }
  img.value_min = field<double>(j, "value_min", "PGM sidecar");
  img.value_max = field<double>(j, "value_max", "PGM sidecar");
  return img;
}

std::string volume_bytes(const Volume3D& volume) {
  std::string out;
  out.reserve(4 * volume.voxels.size());
  for (double v : volume.voxels) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
  return out;
}

std::string volume_sidecar_json(const Volume3D& volume, Vec2 extent) {
  json j;
  j["format"] = "float32-le";
  j["order"] = "z-major: index = (z * rows + row) * cols + col";
  j["nz"] = volume.nz;
  j["rows"] = volume.rows;
  j["cols"] = volume.cols;
  j["extent_cm"] = {extent.x, extent.y};
  j["plane_depths_cm"] = volume.plane_depths;
  std::vector<double> inputs;
  for (const DepthSlice& s : volume.slices_in) inputs.push_back(s.depth_z);
  j["input_depths_cm"] = inputs;
  return j.dump(2) + "\n";
}

VolumeFile parse_volume(std::string_view bytes, std::string_view sidecar_json) {
  const std::string_view what = "volume sidecar";
  const json j = parse_json(sidecar_json, what);
  VolumeFile v;
  v.nz = field<std::size_t>(j, "nz", what);
  v.rows = field<std::size_t>(j, "rows", what);
  v.cols = field<std::size_t>(j, "cols", what);
  const auto extent = field<std::vector<double>>(j, "extent_cm", what);
  if (extent.size() != 2) throw IoError("volume sidecar: extent_cm must have 2 entries");
  v.extent = {extent[0], extent[1]};
  v.plane_depths = field<std::vector<double>>(j, "plane_depths_cm", what);
  v.input_depths = field<std::vector<double>>(j, "input_depths_cm", what);
  const std::size_t count = v.nz * v.rows * v.cols;
  if (bytes.size() != 4 * count) throw IoError("volume data has wrong length");
  v.voxels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + static_cast<std::size_t>(b)]))
              << (8 * b);
    }
    v.voxels[i] = std::bit_cast<float>(bits);
  }
  return v;
}

std::string curves_to_csv(const std::vector<BananaCurve>& curves,
                          const std::vector<Channel>& channels) {
  if (curves.size() != channels.size()) throw DimensionError("one channel per curve required");
  std::string out = "channel,source_index,detector_index,t,x_cm,y_cm,clipped\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const BananaCurve& c = curves[k];
    const std::size_t n = c.sample_points.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
      out += std::to_string(k) + ',' + std::to_string(channels[k].source_index) + ',' +
             std::to_string(channels[k].detector_index) + ',' + format_double(t) + ',' +
             format_double(c.sample_points[i].x) + ',' + format_double(c.sample_points[i].y) +
             ',' + (c.clipped[i] ? "1" : "0") + '\n';
    }
  }
  return out;
}

std::string metric_report_json(const MetricReport& report) {
  json j;
  j["mse"] = report.mse;
  j["ssim"] = report.ssim;
  j["psnr_db"] = report.psnr.infinite ? json(nullptr) : json(report.psnr.db);
  j["psnr_infinite"] = report.psnr.infinite;
  j["peak_mu_a"] = report.peak_mu_a;
  j["inclusion_centers_found_cm"] = json::array();
  for (const Vec2& c : report.inclusion_centers_found) {
    j["inclusion_centers_found_cm"].push_back({c.x, c.y});
  }
  j["center_errors_cm"] = json::array();
  for (double e : report.center_errors) {
    j["center_errors_cm"].push_back(std::isfinite(e) ? json(e) : json(nullptr));
  }
  return j.dump(2) + "\n";
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace dot
