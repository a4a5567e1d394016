#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "skin/errors.hpp"
#include "skin/fem.hpp"
#include "skin/mesh.hpp"
#include "skin/physics.hpp"

namespace skinfem {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using skin::ConfigError;
using skin::geometry::ConfigId;
using skin::postprocess::format17;

namespace {

const std::map<StudyKind, std::string>& study_names() {
  static const std::map<StudyKind, std::string> names{
      {StudyKind::Solve, "solve"},
      {StudyKind::PConvergence, "p-convergence"},
      {StudyKind::HStability, "h-stability"},
      {StudyKind::SigmaScaling, "sigma-scaling"},
      {StudyKind::SlopeStudy, "slope-study"},
      {StudyKind::CornerStudy, "corner-study"},
      {StudyKind::FieldMap, "field-map"},
  };
  return names;
}

// Accepted keys per section; anything else is reported as a typo.
const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"study", {"kind", "config"}},
      {"parameters", {"sigma", "p", "mesh", "omega"}},
      {"reference", {"p", "mesh"}},
      {"corner", {"rho_max"}},
      {"grid", {"r", "z"}},
      {"output", {"dir", "cache"}},
  };
  return keys;
}

[[noreturn]] void field_error(const std::string& section, const std::string& key, const std::string& msg) {
  throw ConfigError("[" + section + "] " + key + ": " + msg);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  boost::split(items, text, boost::is_any_of(", \t"), boost::token_compress_on);
  items.erase(std::remove_if(items.begin(), items.end(), [](const std::string& s) { return s.empty(); }), items.end());
  return items;
}

double parse_double(const std::string& section, const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    field_error(section, key, "'" + text + "' is not a number");
  }
  if (used != text.size() || !std::isfinite(v)) field_error(section, key, "'" + text + "' is not a number");
  return v;
}

int parse_int(const std::string& section, const std::string& key, const std::string& text) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(text, &used);
  } catch (const std::exception&) {
    field_error(section, key, "'" + text + "' is not an integer");
  }
  if (used != text.size()) field_error(section, key, "'" + text + "' is not an integer");
  return v;
}

std::vector<double> parse_doubles(const std::string& section, const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(section, key, item));
  return out;
}

// Integers with optional inclusive ranges "a..b".
std::vector<int> parse_ints(const std::string& section, const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_int(section, key, item));
      continue;
    }
    const int a = parse_int(section, key, item.substr(0, dots));
    const int b = parse_int(section, key, item.substr(dots + 2));
    if (b < a) field_error(section, key, "empty range '" + item + "'");
    for (int v = a; v <= b; ++v) out.push_back(v);
  }
  return out;
}

// Mesh names "M<k>".
std::vector<int> parse_meshes(const std::string& section, const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) {
    if (item.size() < 2 || (item[0] != 'M' && item[0] != 'm')) {
      field_error(section, key, "'" + item + "' is not a mesh name M<k>");
    }
    out.push_back(parse_int(section, key, item.substr(1)));
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format17(v[i]);
  return s;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string short_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

// Runs f(i) for i in [0, n) on up to `threads` workers. Results keep index order and
// the lowest-index failure is rethrown, so output does not depend on scheduling.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int threads, F f) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t nt = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::shared_ptr<const skin::mesh::QuadMesh> make_mesh(const ExperimentConfig& cfg, int index) {
  try {
    if (cfg.config == ConfigId::A) {
      return std::make_shared<const skin::mesh::QuadMesh>(skin::mesh::square_mesh_A(index));
    }
    skin::mesh::LayeredMeshOptions opt;
    opt.n_layers = index;
    opt.omega = cfg.omega;
    return std::make_shared<const skin::mesh::QuadMesh>(skin::mesh::layered_mesh_B(cfg.config, opt));
  } catch (const std::exception& e) {
    throw StudyError(kSolveError, "mesh M" + std::to_string(index) + ": " + e.what());
  }
}

skin::fem::DiscreteField solve_field(const ExperimentConfig& cfg, std::shared_ptr<const skin::mesh::QuadMesh> m,
                                     double sigma, int p) {
  try {
    auto space = std::make_shared<const skin::fem::FeSpace>(std::move(m), p);
    return skin::fem::solve_problem(space, skin::physics::PhysicalParams(sigma, cfg.omega),
                                    skin::fem::SourceSpec::for_config(cfg.config));
  } catch (const std::exception& e) {
    throw StudyError(kSolveError, "solve sigma=" + short_number(sigma) + " p=" + std::to_string(p) + ": " + e.what());
  }
}

template <class F>
auto postprocess_step(const std::string& what, F f) -> decltype(f()) {
  try {
    return f();
  } catch (const StudyError&) {
    throw;
  } catch (const std::exception& e) {
    throw StudyError(kPostprocessError, what + ": " + e.what());
  }
}

double norm_of(const skin::fem::DiscreteField& field) {
  return postprocess_step("conductor norm", [&] { return skin::postprocess::conductor_norm(field); });
}

// Conductor norm of the reference discretization, cached on disk by input hash.
double reference_norm(const ExperimentConfig& cfg, double sigma) {
  std::ostringstream key;
  key << "reference-norm\nconfig=" << skin::geometry::to_string(cfg.config) << "\nomega=" << format17(cfg.omega)
      << "\nsigma=" << format17(sigma) << "\np=" << cfg.reference_degree << "\nmesh=" << cfg.reference_mesh << '\n';
  const fs::path dir = cfg.cache_dir.empty() ? cfg.out_dir / ".cache" : cfg.cache_dir;
  const fs::path file = dir / sha256_hex(key.str());
  {
    std::ifstream in(file);
    std::string stored, value;
    if (in && std::getline(in, stored, '\0')) {
      // The cached entry repeats its key so that a hash collision cannot go unnoticed.
      const auto cut = stored.rfind("value=");
      if (cut != std::string::npos && stored.substr(0, cut) == key.str()) {
        value = stored.substr(cut + 6);
        try {
          return std::stod(value);
        } catch (const std::exception&) {
        }
      }
    }
  }
  const double a = norm_of(solve_field(cfg, make_mesh(cfg, cfg.reference_mesh), sigma, cfg.reference_degree));
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path tmp = file.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp);
    out << key.str() << "value=" << format17(a) << '\n';
  }
  fs::rename(tmp, file, ec);
  if (ec) fs::remove(tmp, ec);
  return a;
}

// Collects the artifacts of one run; removes them unless committed.
class OutputSet {
public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(dir_ / f, ec);
  }

  void write(const fs::path& name, const std::string& content) {
    files_.push_back(name);
    std::ofstream out(dir_ / name, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw StudyError(kPostprocessError, "cannot write " + (dir_ / name).string());
  }

  const std::vector<fs::path>& files() const noexcept { return files_; }
  void commit() noexcept { committed_ = true; }

private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool committed_ = false;
};

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string mesh_name(int k) { return "M" + std::to_string(k); }

// Reference extraction counts for B1 on M3 and M6, used only to flag differences.
std::optional<std::size_t> reference_count(ConfigId config, int mesh, double sigma) {
  if (config != ConfigId::B1) return std::nullopt;
  static const std::map<std::pair<int, double>, std::size_t> counts{
      {{3, 5.0}, 7}, {{3, 20.0}, 6}, {{3, 80.0}, 5}, {{6, 5.0}, 13}, {{6, 20.0}, 9}, {{6, 80.0}, 7}};
  const auto it = counts.find({mesh, sigma});
  if (it == counts.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------------------
// Studies. Each returns (file name, content) pairs in output order.

using Artifacts = std::vector<std::pair<std::string, std::string>>;

Artifacts study_solve(const ExperimentConfig& cfg, int threads) {
  struct Job {
    double sigma;
    int p;
    int mesh;
  };
  std::vector<Job> jobs;
  for (int k : cfg.meshes) {
    for (double s : cfg.sigmas) {
      for (int p : cfg.degrees) jobs.push_back({s, p, k});
    }
  }
  std::map<int, std::shared_ptr<const skin::mesh::QuadMesh>> meshes;
  for (int k : cfg.meshes) meshes.emplace(k, make_mesh(cfg, k));

  struct Result {
    double norm;
    double residual;
    std::size_t dofs;
    std::string field;
  };
  const auto results = parallel_map<Result>(jobs.size(), threads, [&](std::size_t i) {
    const auto field = solve_field(cfg, meshes.at(jobs[i].mesh), jobs[i].sigma, jobs[i].p);
    std::ostringstream f;
    skin::fem::write_field(f, field);
    return Result{norm_of(field), field.info().residual, field.space().dof_count(), f.str()};
  });

  Artifacts out;
  std::ostringstream csv;
  csv << "sigma,p,mesh,dofs,A,residual\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    csv << format17(jobs[i].sigma) << ',' << jobs[i].p << ',' << mesh_name(jobs[i].mesh) << ',' << results[i].dofs
        << ',' << format17(results[i].norm) << ',' << format17(results[i].residual) << '\n';
  }
  out.emplace_back("solve.csv", csv.str());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    out.emplace_back("field_s" + short_number(jobs[i].sigma) + "_p" + std::to_string(jobs[i].p) + "_" +
                         mesh_name(jobs[i].mesh) + ".txt",
                     results[i].field);
  }
  return out;
}

Artifacts study_p_convergence(const ExperimentConfig& cfg, int threads) {
  const auto m = make_mesh(cfg, cfg.meshes.front());
  const auto refs = parallel_map<double>(cfg.sigmas.size(), threads, [&](std::size_t i) {
    return reference_norm(cfg, cfg.sigmas[i]);
  });
  const std::size_t np = cfg.degrees.size();
  const auto norms = parallel_map<double>(cfg.sigmas.size() * np, threads, [&](std::size_t i) {
    return norm_of(solve_field(cfg, m, cfg.sigmas[i / np], cfg.degrees[i % np]));
  });

  std::ostringstream csv, rep;
  csv << "sigma,p,A,A_ref,abs_diff\n";
  rep << "p-convergence of the conductor norm, configuration " << skin::geometry::to_string(cfg.config) << ", mesh "
      << mesh_name(cfg.meshes.front()) << ", reference p=" << cfg.reference_degree << " on "
      << mesh_name(cfg.reference_mesh) << "\n\n";
  for (std::size_t s = 0; s < cfg.sigmas.size(); ++s) {
    rep << "sigma = " << short_number(cfg.sigmas[s]) << "  A_ref = " << format17(refs[s]) << '\n';
    for (std::size_t j = 0; j < np; ++j) {
      const double a = norms[s * np + j];
      csv << format17(cfg.sigmas[s]) << ',' << cfg.degrees[j] << ',' << format17(a) << ',' << format17(refs[s]) << ','
          << format17(std::abs(a - refs[s])) << '\n';
      char line[96];
      std::snprintf(line, sizeof line, "  p=%-3d |A - A_ref| = %.3e\n", cfg.degrees[j], std::abs(a - refs[s]));
      rep << line;
    }
  }
  return {{"p_convergence.csv", csv.str()}, {"report.txt", rep.str()}};
}

Artifacts study_h_stability(const ExperimentConfig& cfg, int threads) {
  std::map<int, std::shared_ptr<const skin::mesh::QuadMesh>> meshes;
  for (int k : cfg.meshes) meshes.emplace(k, make_mesh(cfg, k));
  const int p = cfg.degrees.front();
  const auto refs = parallel_map<double>(cfg.sigmas.size(), threads, [&](std::size_t i) {
    return reference_norm(cfg, cfg.sigmas[i]);
  });
  const std::size_t nk = cfg.meshes.size();
  const auto norms = parallel_map<double>(cfg.sigmas.size() * nk, threads, [&](std::size_t i) {
    return norm_of(solve_field(cfg, meshes.at(cfg.meshes[i % nk]), cfg.sigmas[i / nk], p));
  });

  std::ostringstream csv, rep;
  csv << "sigma,k,A,A_ref,abs_diff\n";
  rep << "h-stability of the conductor norm, configuration A, p=" << p << ", reference p=" << cfg.reference_degree
      << " on " << mesh_name(cfg.reference_mesh) << "\n\n";
  for (std::size_t s = 0; s < cfg.sigmas.size(); ++s) {
    rep << "sigma = " << short_number(cfg.sigmas[s]) << '\n';
    for (std::size_t j = 0; j < nk; ++j) {
      const double d = norms[s * nk + j] - refs[s];
      csv << format17(cfg.sigmas[s]) << ',' << cfg.meshes[j] << ',' << format17(norms[s * nk + j]) << ','
          << format17(refs[s]) << ',' << format17(std::abs(d)) << '\n';
      char line[96];
      std::snprintf(line, sizeof line, "  k=%-3d A - A_ref = %+.3e\n", cfg.meshes[j], d);
      rep << line;
    }
  }
  return {{"h_stability.csv", csv.str()}, {"report.txt", rep.str()}};
}

Artifacts study_sigma_scaling(const ExperimentConfig& cfg, int threads) {
  const auto m = make_mesh(cfg, cfg.meshes.front());
  const int p = cfg.degrees.front();
  const auto norms = parallel_map<double>(cfg.sigmas.size(), threads, [&](std::size_t i) {
    return norm_of(solve_field(cfg, m, cfg.sigmas[i], p));
  });
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < norms.size(); ++i) pairs.emplace_back(cfg.sigmas[i], norms[i]);
  const double exponent =
      postprocess_step("scaling fit", [&] { return skin::postprocess::scaling_exponent(pairs); });

  std::ostringstream csv, rep;
  skin::postprocess::write_scaling_csv(csv, pairs);
  rep << "conductor norm scaling, configuration " << skin::geometry::to_string(cfg.config) << ", p=" << p << ", mesh "
      << mesh_name(cfg.meshes.front()) << "\n\nfitted exponent of A against sigma: " << format17(exponent)
      << "\nexpected: -0.25\n";
  return {{"scaling.csv", csv.str()}, {"report.txt", rep.str()}};
}

Artifacts study_slope(const ExperimentConfig& cfg, int threads) {
  const int k = cfg.meshes.front();
  const auto m = make_mesh(cfg, k);
  const auto degree_for = [&](std::size_t i) { return cfg.degrees.size() == 1 ? cfg.degrees[0] : cfg.degrees[i]; };
  const auto reports = parallel_map<skin::postprocess::SlopeReport>(cfg.sigmas.size(), threads, [&](std::size_t i) {
    const auto field = solve_field(cfg, m, cfg.sigmas[i], degree_for(i));
    return postprocess_step("slope report sigma=" + short_number(cfg.sigmas[i]), [&] {
      return skin::postprocess::slope_report(field, cfg.config, cfg.sigmas[i]);
    });
  });

  Artifacts out;
  std::ostringstream table;
  table << "sigma,ell,s,curv_ratio,p,n,s_fit,err\n";
  for (const auto& r : reports) {
    table << format17(r.sigma) << ',' << format17(r.ell) << ',' << format17(r.slope_theory) << ','
          << format17(r.curv_ratio) << ',' << r.degree << ',' << r.n_used << ',' << format17(r.slope_fit) << ','
          << format17(r.rel_err) << '\n';
  }
  out.emplace_back("slope_table.csv", table.str());
  for (const auto& r : reports) {
    std::ostringstream csv;
    skin::postprocess::write_radial_csv(csv, r.samples);
    out.emplace_back("radial_s" + short_number(r.sigma) + ".csv", csv.str());
  }

  std::ostringstream rep;
  rep << "decay slopes at the equator, configuration " << skin::geometry::to_string(cfg.config) << ", mesh "
      << mesh_name(k) << "\n\n";
  const auto row = [&](const char* name, auto cell) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-12s", name);
    rep << buf;
    for (const auto& r : reports) {
      std::snprintf(buf, sizeof buf, " %12s", cell(r).c_str());
      rep << buf;
    }
    rep << '\n';
  };
  const auto g = [](const char* fmt, double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, fmt, x);
    return std::string(buf);
  };
  using R = skin::postprocess::SlopeReport;
  row("sigma", [&](const R& r) { return short_number(r.sigma); });
  row("ell", [&](const R& r) { return g("%.3g", r.ell); });
  row("s", [&](const R& r) { return g("%.6g", r.slope_theory); });
  row("curv_ratio", [&](const R& r) { return g("%.3g", r.curv_ratio); });
  row("p", [&](const R& r) { return std::to_string(r.degree); });
  row("n", [&](const R& r) { return std::to_string(r.n_used); });
  row("s_fit", [&](const R& r) { return g("%.6f", r.slope_fit); });
  row("err", [&](const R& r) { return g("%.2g", r.rel_err); });
  for (const auto& r : reports) {
    const auto n_ref = reference_count(cfg.config, k, r.sigma);
    if (n_ref && *n_ref != r.n_used) {
      rep << "note: n = " << r.n_used << " at sigma = " << short_number(r.sigma)
          << " differs from the reference extraction count " << *n_ref << '\n';
    }
  }
  out.emplace_back("report.txt", rep.str());
  return out;
}

Artifacts study_corner(const ExperimentConfig& cfg, int threads) {
  const auto m = make_mesh(cfg, cfg.meshes.front());
  const int p = cfg.degrees.front();
  const auto slopes = parallel_map<std::vector<skin::postprocess::CornerSlope>>(
      cfg.sigmas.size(), threads, [&](std::size_t i) {
        const auto field = solve_field(cfg, m, cfg.sigmas[i], p);
        return postprocess_step("corner slopes sigma=" + short_number(cfg.sigmas[i]), [&] {
          return skin::postprocess::corner_slopes(field, cfg.sigmas[i], cfg.rho_max_factor);
        });
      });

  Artifacts out;
  std::ostringstream rep;
  rep << "pointwise slopes toward the conductor corner (1, 1), configuration A, p=" << p << ", mesh "
      << mesh_name(cfg.meshes.front()) << "\nratio: slope / (1/(ell ln 10)), the flat-interface decay slope\n";
  for (std::size_t i = 0; i < cfg.sigmas.size(); ++i) {
    std::ostringstream csv;
    skin::postprocess::write_corner_csv(csv, slopes[i]);
    out.emplace_back("corner_s" + short_number(cfg.sigmas[i]) + ".csv", csv.str());
    const skin::physics::PhysicalParams params(cfg.sigmas[i], cfg.omega);
    const double s0 = skin::physics::theoretical_slope(params, 0.0);
    rep << "\nsigma = " << short_number(cfg.sigmas[i]) << "  ell = " << format17(params.ell()) << '\n';
    for (const auto& s : slopes[i]) {
      char line[96];
      std::snprintf(line, sizeof line, "  rho/ell=%7.3f  slope=%10.4f  ratio=%.3f\n", s.rho / params.ell(), s.slope,
                    s.slope / s0);
      rep << line;
    }
  }
  out.emplace_back("report.txt", rep.str());
  return out;
}

Artifacts study_field_map(const ExperimentConfig& cfg, int threads) {
  const auto m = make_mesh(cfg, cfg.meshes.front());
  const int p = cfg.degrees.front();
  skin::postprocess::Grid grid;
  if (cfg.grid) {
    grid = *cfg.grid;
  } else {
    grid.r0 = grid.z0 = std::numeric_limits<double>::max();
    grid.r1 = grid.z1 = std::numeric_limits<double>::lowest();
    for (const auto& x : m->nodes) {
      grid.r0 = std::min(grid.r0, x.r);
      grid.r1 = std::max(grid.r1, x.r);
      grid.z0 = std::min(grid.z0, x.z);
      grid.z1 = std::max(grid.z1, x.z);
    }
    grid.nr = grid.nz = 101;
  }
  const auto rasters = parallel_map<skin::postprocess::FieldRaster>(cfg.sigmas.size(), threads, [&](std::size_t i) {
    const auto field = solve_field(cfg, m, cfg.sigmas[i], p);
    return postprocess_step("field map", [&] { return skin::postprocess::imag_field_map(field, grid); });
  });
  Artifacts out;
  for (std::size_t i = 0; i < cfg.sigmas.size(); ++i) {
    std::ostringstream csv;
    skin::postprocess::write_raster_csv(csv, rasters[i]);
    out.emplace_back("field_map_s" + short_number(cfg.sigmas[i]) + ".csv", csv.str());
  }
  return out;
}

}  // namespace

std::string to_string(StudyKind kind) { return study_names().at(kind); }

std::optional<StudyKind> parse_study(const std::string& text) {
  for (const auto& [kind, name] : study_names()) {
    if (name == text) return kind;
  }
  return std::nullopt;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

ExperimentConfig parse_config(std::istream& in, const std::optional<std::string>& study_override) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }

  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside of any section");
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) field_error(section, key, "unknown key");
    }
  }
  const auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    auto v = tree.get_optional<std::string>(pt::ptree::path_type(section + "." + key, '.'));
    if (!v) return std::nullopt;
    return boost::trim_copy(*v);
  };

  ExperimentConfig cfg;
  const auto kind_text = study_override ? study_override : get("study", "kind");
  if (!kind_text) field_error("study", "kind", "missing");
  const auto kind = parse_study(*kind_text);
  if (!kind) field_error("study", "kind", "unknown study '" + *kind_text + "'");
  cfg.kind = *kind;

  if (const auto c = get("study", "config")) {
    try {
      cfg.config = skin::geometry::parse_config(*c);
    } catch (const std::exception&) {
      field_error("study", "config", "unknown configuration '" + *c + "'");
    }
  } else if (cfg.kind == StudyKind::CornerStudy || cfg.kind == StudyKind::HStability) {
    cfg.config = ConfigId::A;
  } else {
    field_error("study", "config", "missing");
  }

  if (const auto s = get("parameters", "sigma")) cfg.sigmas = parse_doubles("parameters", "sigma", *s);
  if (const auto s = get("parameters", "p")) cfg.degrees = parse_ints("parameters", "p", *s);
  if (const auto s = get("parameters", "mesh")) cfg.meshes = parse_meshes("parameters", "mesh", *s);
  if (const auto s = get("parameters", "omega")) cfg.omega = parse_double("parameters", "omega", *s);
  if (const auto s = get("reference", "p")) cfg.reference_degree = parse_int("reference", "p", *s);
  if (const auto s = get("reference", "mesh")) {
    const auto v = parse_meshes("reference", "mesh", *s);
    if (v.size() != 1) field_error("reference", "mesh", "exactly one mesh expected");
    cfg.reference_mesh = v.front();
  }
  if (const auto s = get("corner", "rho_max")) cfg.rho_max_factor = parse_double("corner", "rho_max", *s);

  const auto r = get("grid", "r");
  const auto z = get("grid", "z");
  if (r || z) {
    if (!r || !z) field_error("grid", r ? "z" : "r", "missing; a grid needs both r and z");
    const auto rv = parse_doubles("grid", "r", *r);
    const auto zv = parse_doubles("grid", "z", *z);
    if (rv.size() != 3) field_error("grid", "r", "expected 'start, end, count'");
    if (zv.size() != 3) field_error("grid", "z", "expected 'start, end, count'");
    skin::postprocess::Grid g;
    g.r0 = rv[0];
    g.r1 = rv[1];
    g.nr = static_cast<int>(rv[2]);
    g.z0 = zv[0];
    g.z1 = zv[1];
    g.nz = static_cast<int>(zv[2]);
    if (g.nr < 1 || g.nr != rv[2]) field_error("grid", "r", "count must be a positive integer");
    if (g.nz < 1 || g.nz != zv[2]) field_error("grid", "z", "count must be a positive integer");
    cfg.grid = g;
  }

  if (const auto s = get("output", "dir")) cfg.out_dir = *s;
  if (const auto s = get("output", "cache")) cfg.cache_dir = *s;

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, const std::optional<std::string>& study_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, study_override);
}

void validate(ExperimentConfig& cfg) {
  const bool a = cfg.config == ConfigId::A;
  switch (cfg.kind) {
    case StudyKind::CornerStudy:
      if (!a) field_error("study", "config", "corner-study requires configuration A");
      if (cfg.sigmas.empty()) cfg.sigmas = {80.0};
      if (cfg.degrees.empty()) cfg.degrees = {16};
      if (cfg.meshes.empty()) cfg.meshes = {4};
      break;
    case StudyKind::HStability:
      if (!a) field_error("study", "config", "h-stability requires configuration A");
      if (cfg.degrees.empty()) cfg.degrees = {2};
      if (cfg.meshes.empty()) cfg.meshes = {1, 2, 3, 4, 5, 6, 7, 8};
      if (cfg.reference_degree == 0) cfg.reference_degree = 6;
      if (cfg.reference_mesh == 0) cfg.reference_mesh = 8;
      break;
    case StudyKind::PConvergence:
      if (cfg.reference_degree == 0) cfg.reference_degree = a ? 16 : 20;
      if (cfg.reference_mesh == 0) cfg.reference_mesh = a ? 3 : 6;
      break;
    case StudyKind::SlopeStudy:
      if (a) field_error("study", "config", "slope-study requires a spheroidal configuration");
      break;
    default:
      break;
  }

  if (cfg.sigmas.empty()) field_error("parameters", "sigma", "the conductivity list is empty");
  for (double s : cfg.sigmas) {
    if (!(s > 0.0)) field_error("parameters", "sigma", "conductivities must be positive");
  }
  if (cfg.degrees.empty()) field_error("parameters", "p", "the degree list is empty");
  for (int p : cfg.degrees) {
    if (p < skin::fem::kMinDegree || p > skin::fem::kMaxDegree) {
      field_error("parameters", "p", "degree " + std::to_string(p) + " outside 1..20");
    }
  }
  if (cfg.meshes.empty()) field_error("parameters", "mesh", "the mesh list is empty");
  for (int k : cfg.meshes) {
    if (k < 1) field_error("parameters", "mesh", "mesh index must be at least 1");
  }
  if (!(cfg.omega > 0.0)) field_error("parameters", "omega", "must be positive");
  if (!(cfg.rho_max_factor > 0.0)) field_error("corner", "rho_max", "must be positive");

  const bool single_mesh = cfg.kind != StudyKind::Solve && cfg.kind != StudyKind::HStability;
  if (single_mesh && cfg.meshes.size() != 1) field_error("parameters", "mesh", "this study takes exactly one mesh");
  const bool single_p = cfg.kind == StudyKind::HStability || cfg.kind == StudyKind::SigmaScaling ||
                        cfg.kind == StudyKind::CornerStudy || cfg.kind == StudyKind::FieldMap;
  if (single_p && cfg.degrees.size() != 1) field_error("parameters", "p", "this study takes exactly one degree");
  if (cfg.kind == StudyKind::SlopeStudy && cfg.degrees.size() != 1 && cfg.degrees.size() != cfg.sigmas.size()) {
    field_error("parameters", "p", "give one degree or one per conductivity");
  }
  if (cfg.kind == StudyKind::SigmaScaling && cfg.sigmas.size() < 3) {
    field_error("parameters", "sigma", "a scaling fit needs at least 3 conductivities");
  }
  if (cfg.reference_degree != 0 &&
      (cfg.reference_degree < skin::fem::kMinDegree || cfg.reference_degree > skin::fem::kMaxDegree)) {
    field_error("reference", "p", "degree outside 1..20");
  }
  if (cfg.reference_mesh < 0) field_error("reference", "mesh", "mesh index must be at least 1");
}

std::string canonical_inputs(const ExperimentConfig& cfg) {
  std::ostringstream s;
  s << "study=" << to_string(cfg.kind) << '\n'
    << "config=" << skin::geometry::to_string(cfg.config) << '\n'
    << "omega=" << format17(cfg.omega) << '\n'
    << "sigma=" << join_doubles(cfg.sigmas) << '\n'
    << "p=" << join_ints(cfg.degrees) << '\n'
    << "mesh=" << join_ints(cfg.meshes) << '\n'
    << "reference=" << cfg.reference_degree << ',' << cfg.reference_mesh << '\n'
    << "rho_max=" << format17(cfg.rho_max_factor) << '\n';
  if (cfg.grid) {
    const auto& g = *cfg.grid;
    s << "grid=" << join_doubles({g.r0, g.r1, g.z0, g.z1}) << ',' << g.nr << ',' << g.nz << '\n';
  }
  return s.str();
}

RunSummary run(const ExperimentConfig& cfg, int threads) {
  RunSummary summary;
  summary.input_hash = sha256_hex(canonical_inputs(cfg));

  Artifacts artifacts;
  switch (cfg.kind) {
    case StudyKind::Solve: artifacts = study_solve(cfg, threads); break;
    case StudyKind::PConvergence: artifacts = study_p_convergence(cfg, threads); break;
    case StudyKind::HStability: artifacts = study_h_stability(cfg, threads); break;
    case StudyKind::SigmaScaling: artifacts = study_sigma_scaling(cfg, threads); break;
    case StudyKind::SlopeStudy: artifacts = study_slope(cfg, threads); break;
    case StudyKind::CornerStudy: artifacts = study_corner(cfg, threads); break;
    case StudyKind::FieldMap: artifacts = study_field_map(cfg, threads); break;
  }

  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw StudyError(kPostprocessError, "cannot create " + cfg.out_dir.string() + ": " + ec.message());

  OutputSet outputs(cfg.out_dir);
  for (const auto& [name, content] : artifacts) outputs.write(name, content);
  std::ostringstream manifest;
  manifest << "file,sha256,input_sha256\n";
  for (const auto& f : outputs.files()) {
    manifest << f.generic_string() << ',' << file_digest(cfg.out_dir / f) << ',' << summary.input_hash << '\n';
  }
  outputs.write("manifest.csv", manifest.str());
  summary.files = outputs.files();
  outputs.commit();
  return summary;
}

}  // namespace skinfem
