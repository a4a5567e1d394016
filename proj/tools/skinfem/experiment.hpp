#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "skin/geometry.hpp"
#include "skin/postprocess.hpp"

namespace skinfem {

enum class StudyKind { Solve, PConvergence, HStability, SigmaScaling, SlopeStudy, CornerStudy, FieldMap };

std::string to_string(StudyKind kind);
std::optional<StudyKind> parse_study(const std::string& text);

struct ExperimentConfig {
  StudyKind kind = StudyKind::Solve;
  skin::geometry::ConfigId config = skin::geometry::ConfigId::B1;
  std::vector<double> sigmas;
  std::vector<int> degrees;
  /// Mesh indices: k of the square mesh M_k for configuration A, the number of
  /// skin layers for the spheroidal configurations.
  std::vector<int> meshes;
  int reference_degree = 0;
  int reference_mesh = 0;
  double omega = 3.0e7;
  double rho_max_factor = 6.0;
  /// Raster for field-map; defaults to the mesh bounding box.
  std::optional<skin::postprocess::Grid> grid;
  std::filesystem::path out_dir = "out";
  std::filesystem::path cache_dir;  // empty means <out_dir>/.cache
};

/// Exit codes of the runner.
enum ExitCode : int { kOk = 0, kConfigError = 2, kSolveError = 3, kPostprocessError = 4 };

/// A failure with the exit code it maps to.
class StudyError : public std::runtime_error {
public:
  StudyError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const noexcept { return code_; }

private:
  int code_;
};

/// Parses and validates an INI experiment description. `study_override` replaces the
/// [study] kind before validation. Throws skin::ConfigError with the offending line or
/// field in the message.
ExperimentConfig parse_config(std::istream& in, const std::optional<std::string>& study_override = {});
ExperimentConfig load_config(const std::filesystem::path& path, const std::optional<std::string>& study_override = {});

/// Checks the study-specific requirements; fills defaults. Throws skin::ConfigError.
void validate(ExperimentConfig& cfg);

/// Canonical text of everything that determines the results; its SHA-256 is the input hash.
std::string canonical_inputs(const ExperimentConfig& cfg);
std::string sha256_hex(const std::string& data);

struct RunSummary {
  std::vector<std::filesystem::path> files;  // relative to out_dir, in manifest order
  std::string input_hash;
};

/// Runs the study and writes its artifacts and manifest.csv into cfg.out_dir.
/// Throws StudyError; files written by a failed run are removed.
RunSummary run(const ExperimentConfig& cfg, int threads = 1);

}  // namespace skinfem
