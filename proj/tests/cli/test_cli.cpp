#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "experiment.hpp"
#include "skin/errors.hpp"

namespace fs = std::filesystem;
using namespace skinfem;

namespace {

ExperimentConfig parse(const std::string& text, std::optional<std::string> study = {}) {
  std::istringstream in(text);
  return parse_config(in, study);
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const skin::ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("skinfem_test_" + name);
  fs::remove_all(dir);
  return dir;
}

const char* kHStability = R"(
[study]
kind = h-stability
[parameters]
sigma = 20
mesh = M1, M2, M3
[reference]
mesh = M4
p = 4
)";

}  // namespace

TEST_CASE("config parsing fills lists, ranges and defaults") {
  const auto cfg = parse(R"(
; comment
[study]
kind = p-convergence
config = B1
[parameters]
sigma = 5, 20 80
p = 1..4, 7
mesh = M1
[output]
dir = somewhere
)");
  CHECK(cfg.kind == StudyKind::PConvergence);
  CHECK(cfg.config == skin::geometry::ConfigId::B1);
  CHECK(cfg.sigmas == std::vector<double>{5, 20, 80});
  CHECK(cfg.degrees == std::vector<int>{1, 2, 3, 4, 7});
  CHECK(cfg.meshes == std::vector<int>{1});
  CHECK(cfg.reference_degree == 20);
  CHECK(cfg.reference_mesh == 6);
  CHECK(cfg.out_dir == "somewhere");

  const auto corner = parse("[study]\nkind = corner-study\n");
  CHECK(corner.config == skin::geometry::ConfigId::A);
  CHECK(corner.sigmas == std::vector<double>{80});
  CHECK(corner.degrees == std::vector<int>{16});
  CHECK(corner.meshes == std::vector<int>{4});

  const auto overridden = parse("[study]\nkind = solve\nconfig = A\n[parameters]\nsigma=5\np=2\nmesh=M1\n",
                                std::string("corner-study"));
  CHECK(overridden.kind == StudyKind::CornerStudy);
}

TEST_CASE("config validation names the offending field") {
  const std::string base = "[study]\nkind = slope-study\nconfig = B1\n[parameters]\nmesh = M3\np = 10\n";
  CHECK(config_error(base + "sigma =\n").find("[parameters] sigma") != std::string::npos);
  CHECK(config_error(base).find("[parameters] sigma") != std::string::npos);
  CHECK(config_error(base + "sigma = -5\n").find("positive") != std::string::npos);
  CHECK(config_error(base + "sigma = 5\nsigmas = 5\n").find("[parameters] sigmas: unknown key") != std::string::npos);
  CHECK(config_error(base + "sigma = five\n").find("not a number") != std::string::npos);
  CHECK(config_error("[study]\nkind = slope-study\nnot a pair\n").find("line 3") != std::string::npos);
  CHECK(config_error("[study]\nkind = corner-study\nconfig = B1\n").find("[study] config") != std::string::npos);
  CHECK(config_error("[study]\nkind = slope-study\nconfig = A\n[parameters]\nsigma=5\np=4\nmesh=M1\n")
            .find("spheroidal") != std::string::npos);
  CHECK(config_error("[study]\nkind = fit\nconfig = A\n").find("[study] kind") != std::string::npos);
  CHECK(config_error("[study]\nkind = sigma-scaling\nconfig = B1\n[parameters]\nsigma=5,20\np=4\nmesh=M1\n")
            .find("at least 3") != std::string::npos);
  CHECK(config_error("[study]\nkind = solve\nconfig = A\n[parameters]\nsigma=5\np=21\nmesh=M1\n")
            .find("[parameters] p") != std::string::npos);
  CHECK(config_error("[study]\nkind = field-map\nconfig = A\n[parameters]\nsigma=5\np=2\nmesh=M1\n[grid]\nr=0,1,5\n")
            .find("[grid] z") != std::string::npos);
}

TEST_CASE("input hash ignores output location but not parameters") {
  auto a = parse(kHStability);
  auto b = a;
  b.out_dir = "elsewhere";
  CHECK(sha256_hex(canonical_inputs(a)) == sha256_hex(canonical_inputs(b)));
  b.sigmas = {21};
  CHECK(sha256_hex(canonical_inputs(a)) != sha256_hex(canonical_inputs(b)));
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("identical configs reproduce byte-identical outputs") {
  auto cfg = parse(kHStability);
  cfg.out_dir = fresh_dir("det_a");
  const auto first = run(cfg, 1);
  auto again = cfg;
  again.out_dir = fresh_dir("det_b");
  again.cache_dir = cfg.out_dir / ".cache";  // reference read back from the cache
  const auto second = run(again, 2);
  REQUIRE(first.files == second.files);
  CHECK(first.input_hash == second.input_hash);
  for (const auto& f : first.files) {
    INFO(f.string());
    CHECK(slurp(cfg.out_dir / f) == slurp(again.out_dir / f));
  }
  CHECK_FALSE(fs::exists(again.out_dir / ".cache"));
}

TEST_CASE("manifest lists every artifact with content and input hashes") {
  auto cfg = parse(kHStability);
  cfg.out_dir = fresh_dir("manifest");
  const auto summary = run(cfg, 1);
  std::istringstream manifest(slurp(cfg.out_dir / "manifest.csv"));
  std::string line;
  std::getline(manifest, line);
  CHECK(line == "file,sha256,input_sha256");
  std::size_t rows = 0;
  while (std::getline(manifest, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto file = line.substr(0, c1);
    CHECK(line.substr(c1 + 1, c2 - c1 - 1) == sha256_hex(slurp(cfg.out_dir / file)));
    CHECK(line.substr(c2 + 1) == summary.input_hash);
    ++rows;
  }
  CHECK(rows + 1 == summary.files.size());
  CHECK(slurp(cfg.out_dir / "h_stability.csv").rfind("sigma,k,A,A_ref,abs_diff\n", 0) == 0);
}

TEST_CASE("a failed postprocess leaves no outputs behind") {
  // One layer leaves a single sample within the skin depth at sigma 80.
  auto cfg = parse("[study]\nkind = slope-study\nconfig = B1\n[parameters]\nsigma = 5, 80\np = 3\nmesh = M1\n");
  cfg.out_dir = fresh_dir("failure");
  try {
    run(cfg, 1);
    FAIL("expected a postprocess error");
  } catch (const StudyError& e) {
    CHECK(e.code() == kPostprocessError);
  }
  CHECK((!fs::exists(cfg.out_dir) || fs::is_empty(cfg.out_dir)));
}

TEST_CASE("slope study table carries the derived columns") {
  auto cfg = parse("[study]\nkind = slope-study\nconfig = B1\n[parameters]\nsigma = 5, 20\np = 6\nmesh = M3\n");
  cfg.out_dir = fresh_dir("slope");
  run(cfg, 1);
  std::istringstream table(slurp(cfg.out_dir / "slope_table.csv"));
  std::string header, row;
  std::getline(table, header);
  CHECK(header == "sigma,ell,s,curv_ratio,p,n,s_fit,err");
  std::size_t rows = 0;
  while (std::getline(table, row)) ++rows;
  CHECK(rows == 2);
  CHECK(slurp(cfg.out_dir / "radial_s5.csv").rfind("y3,log10H\n", 0) == 0);
  CHECK(fs::exists(cfg.out_dir / "report.txt"));
}
