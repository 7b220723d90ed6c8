#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "dotrecon/error.hpp"
#include "dotrecon/pipeline.hpp"

using namespace dot;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = 0;
  std::string out;
};

// Runs the CLI; stderr is folded into the captured output unless dropped.
Run cli(const std::string& args, bool keep_stderr = true) {
  const std::string cmd = std::string(DOT_CLI) + " " + args + (keep_stderr ? " 2>&1" : " 2>/dev/null");
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) r.out += buf.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dotrecon_test_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_phantom(const fs::path& dir, const Phantom& p) {
  const fs::path file = dir / "phantom.json";
  write_text_file(file, phantom_to_json(p));
  return file;
}

Phantom centred(double mu) {
  return {Shape::rectangular, {4.4, 4.4, 2.2}, 0.25, 20.0, {{{2.2, 2.2}, 0.25, 2.2, mu}}};
}

Phantom homogeneous() { return {Shape::rectangular, {4.4, 4.4, 2.2}, 0.25, 20.0, {}}; }

std::string common(const fs::path& phantom, const fs::path& out) {
  return "--phantom " + phantom.string() + " --output-dir " + out.string() + " --grid 64";
}

}  // namespace

TEST_CASE("run config JSON round trip and hash") {
  RunConfig c;
  c.phantom_path = "p.json";
  c.depths = {0.5, 1.1, 1.8};
  c.recon.correction = CorrectionMode::corrected;
  c.recon.reference = ReferenceMode::global;
  c.noise_sigma = 0.02;
  c.seed = 99;
  const std::string text = run_config_to_json(c);
  const RunConfig back = run_config_from_json(text);
  CHECK(run_config_to_json(back) == text);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
  RunConfig d = c;
  d.seed = 100;
  CHECK(config_hash(d) != config_hash(c));

  const RunConfig partial = run_config_from_json(R"({"kappa": 0.5})", c);
  CHECK(partial.recon.kappa == 0.5);
  CHECK(partial.seed == 99);
  CHECK_THROWS_AS(run_config_from_json(R"({"correction": "other"})"), Error);
  RunConfig bad = c;
  bad.depths.clear();
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("simulate writes one measurement file per depth") {
  const fs::path dir = fresh_dir("simulate");
  const fs::path phantom = write_phantom(dir, centred(6.76));
  const Run r = cli("simulate " + common(phantom, dir / "out") + " --depths 1.8,0.5,1.1");
  REQUIRE(r.status == 0);
  const auto files = lines(r.out);
  REQUIRE(files.size() == 3);
  for (const auto& f : files) CHECK(fs::exists(f));
  CHECK(load_measurements(files[0]).measurements.depth_z == 0.5);
  CHECK(load_measurements(files[2]).measurements.depth_z == 1.8);
  fs::remove_all(dir);
}

TEST_CASE("missing phantom file fails naming the path") {
  const fs::path dir = fresh_dir("missing");
  const Run r = cli("simulate --phantom " + (dir / "nope.json").string() + " --output-dir " +
                    (dir / "out").string());
  CHECK(r.status != 0);
  CHECK(r.out.find((dir / "nope.json").string()) != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("zero noise reruns are byte identical for any seed") {
  const fs::path dir = fresh_dir("noise");
  const fs::path phantom = write_phantom(dir, centred(6.76));
  const auto a = lines(cli("simulate " + common(phantom, dir / "a") + " --seed 1").out);
  const auto b = lines(cli("simulate " + common(phantom, dir / "b") + " --seed 7").out);
  REQUIRE(a.size() == 1);
  REQUIRE(b.size() == 1);
  CHECK(read_text_file(a[0]) == read_text_file(b[0]));
  const auto c = lines(cli("simulate " + common(phantom, dir / "c") + " --noise-sigma 0.05 --seed 7").out);
  const auto d = lines(cli("simulate " + common(phantom, dir / "d") + " --noise-sigma 0.05 --seed 7").out);
  const auto e = lines(cli("simulate " + common(phantom, dir / "e") + " --noise-sigma 0.05 --seed 8").out);
  CHECK(read_text_file(c[0]) == read_text_file(d[0]));
  CHECK(read_text_file(c[0]) != read_text_file(e[0]));
  CHECK(read_text_file(c[0]) != read_text_file(a[0]));
  fs::remove_all(dir);
}

TEST_CASE("reconstruct writes a 353x481 map and is repeatable") {
  const fs::path dir = fresh_dir("reconstruct");
  const fs::path phantom = write_phantom(dir, centred(6.76));
  const auto meas = lines(cli("simulate " + common(phantom, dir / "sim")).out);
  REQUIRE(meas.size() == 1);
  const Run first = cli("reconstruct " + common(phantom, dir / "r1") + " " + meas[0]);
  const Run second = cli("reconstruct " + common(phantom, dir / "r2") + " " + meas[0]);
  REQUIRE(first.status == 0);
  REQUIRE(second.status == 0);
  const auto f1 = lines(first.out);
  const auto f2 = lines(second.out);
  REQUIRE(f1.size() == 3);
  REQUIRE(f2.size() == 3);
  const MapFile map = load_map(f1[0]);
  CHECK(map.map.rows() == 353);
  CHECK(map.map.cols() == 481);
  CHECK(map.depth_z == 1.1);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(fs::path(f1[k]).filename() == fs::path(f2[k]).filename());
    CHECK(read_text_file(f1[k]) == read_text_file(f2[k]));
  }

  const Run metrics = cli("metrics " + common(phantom, dir / "m") + " " + f1[0]);
  REQUIRE(metrics.status == 0);
  const std::string report = read_text_file(lines(metrics.out).at(0));
  CHECK(report.find("\"ssim\"") != std::string::npos);

  const Run paths = cli("paths " + common(phantom, dir / "p") + " " + meas[0]);
  REQUIRE(paths.status == 0);
  CHECK(read_text_file(lines(paths.out).at(0)).rfind("channel,", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("reconstruct3d needs two slices and writes a volume") {
  const fs::path dir = fresh_dir("volume");
  const fs::path phantom = write_phantom(dir, centred(6.76));
  const auto meas = lines(cli("simulate " + common(phantom, dir / "sim") + " --depths 0.5,1.8").out);
  REQUIRE(meas.size() == 2);
  const Run one = cli("reconstruct3d " + common(phantom, dir / "v1") + " " + meas[0]);
  CHECK(one.status != 0);
  CHECK(one.out.find("two") != std::string::npos);
  const Run two = cli("reconstruct3d " + common(phantom, dir / "v2") + " --planes 5 --export-planes " +
                      meas[0] + " " + meas[1]);
  REQUIRE(two.status == 0);
  const auto files = lines(two.out);
  // Volume and sidecar, then a PGM and its sidecar per plane.
  CHECK(files.size() == 2 + 2 * 5);
  const VolumeFile v = parse_volume(read_text_file(dir / "v2" / "volume.f32"),
                                    read_text_file(dir / "v2" / "volume.json"));
  CHECK(v.nz == 5);
  CHECK(v.rows == 353);
  CHECK(v.cols == 481);
  CHECK(v.input_depths == std::vector<double>{0.5, 1.8});
  fs::remove_all(dir);
}

TEST_CASE("cosamp writes coarse and upsampled maps") {
  const fs::path dir = fresh_dir("cosamp");
  const fs::path phantom = write_phantom(dir, centred(6.76));
  const auto meas = lines(cli("simulate " + common(phantom, dir / "sim")).out);
  const Run r = cli("cosamp " + common(phantom, dir / "c") + " --sparsity 4 " + meas.at(0));
  REQUIRE(r.status == 0);
  const auto files = lines(r.out);
  REQUIRE(files.size() == 4);
  const MapFile coarse = load_map(files[0]);
  CHECK(coarse.map.rows() == 12);
  CHECK(coarse.map.cols() == 16);
  std::size_t raised = 0;
  for (double v : coarse.map.values()) raised += v != 0.25 ? 1 : 0;
  CHECK(raised <= 4);
  fs::remove_all(dir);
}

TEST_CASE("compare: two rows, empty locations on a homogeneous phantom") {
  const fs::path dir = fresh_dir("compare");
  SUBCASE("homogeneous") {
    const fs::path phantom = write_phantom(dir, homogeneous());
    const auto meas = lines(cli("simulate " + common(phantom, dir / "sim")).out);
    const Run r = cli("compare " + common(phantom, dir / "cmp") + " " + meas.at(0), false);
    REQUIRE(r.status == 0);
    const auto rows = parse_metric_rows(r.out);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
      CHECK(row.location.empty());
      CHECK(row.mu_a.empty());
    }
  }
  SUBCASE("single inclusion") {
    const fs::path phantom = write_phantom(dir, centred(6.76));
    const auto meas = lines(cli("simulate " + common(phantom, dir / "sim")).out);
    const Run r = cli("compare " + common(phantom, dir / "cmp") + " " + meas.at(0), false);
    REQUIRE(r.status == 0);
    const auto rows = parse_metric_rows(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].method == "Curved beam");
    CHECK(rows[1].method == "CoSaMP");
    RunConfig c;
    c.phantom_path = phantom;
    c.output_dir = dir / "cmp";
    c.forward.nx = c.forward.ny = 64;
    CHECK(r.out.find(config_hash(c)) != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("config file values are overridden by flags") {
  const fs::path dir = fresh_dir("config");
  const fs::path phantom = write_phantom(dir, homogeneous());
  write_text_file(dir / "run.json", R"({"depths_cm": [0.5, 1.0], "grid_nx": 64, "grid_ny": 64})");
  const Run from_file = cli("simulate --config " + (dir / "run.json").string() + " --phantom " +
                            phantom.string() + " --output-dir " + (dir / "a").string());
  REQUIRE(from_file.status == 0);
  CHECK(lines(from_file.out).size() == 2);
  const Run flagged = cli("simulate --config " + (dir / "run.json").string() + " --phantom " +
                          phantom.string() + " --output-dir " + (dir / "b").string() +
                          " --depths 1.5");
  REQUIRE(flagged.status == 0);
  CHECK(lines(flagged.out).size() == 1);
  fs::remove_all(dir);
}
