#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "experiment.hpp"
#include "skin/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Skin-effect finite element experiment runner"};
  std::string config_path;
  std::string study;
  std::string out_dir;
  int threads = 1;
  long seed = 0;
  app.add_option("--config", config_path, "INI experiment description")->required();
  app.add_option("--study", study, "Override the [study] kind");
  app.add_option("--out", out_dir, "Override the output directory");
  app.add_option("--threads", threads, "Concurrent (sigma, p) runs")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Reserved; every study is deterministic");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : skinfem::kConfigError;
  }

  skinfem::ExperimentConfig cfg;
  try {
    cfg = skinfem::load_config(config_path, study.empty() ? std::nullopt : std::optional<std::string>(study));
    if (!out_dir.empty()) cfg.out_dir = out_dir;
  } catch (const skin::ConfigError& e) {
    std::cerr << "config error: " << config_path << ": " << e.what() << '\n';
    return skinfem::kConfigError;
  }

  try {
    const auto summary = skinfem::run(cfg, threads);
    for (const auto& f : summary.files) std::cout << (cfg.out_dir / f).string() << '\n';
  } catch (const skinfem::StudyError& e) {
    std::cerr << (e.code() == skinfem::kSolveError ? "solve error: " : "postprocess error: ") << e.what() << '\n';
    return e.code();
  }
  return skinfem::kOk;
}
