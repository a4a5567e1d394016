#include "skin/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <map>
#include <numbers>
#include <unordered_map>

#include "skin/errors.hpp"
#include "skin/physics.hpp"
#include "skin/polynomial.hpp"

namespace skin::mesh {

namespace {

constexpr double kSnap = 1e-12;
constexpr double kNodeMatch = 1e-10;
constexpr double kCell = 1e-8;

double snap(double x) { return std::abs(x) < kSnap ? 0.0 : x; }

struct CellKey {
  long long i;
  long long j;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    return std::hash<long long>{}(k.i * 73856093LL) ^ std::hash<long long>{}(k.j * 19349663LL);
  }
};

/// Deduplicates nodes that coincide up to kNodeMatch.
class NodeRegistry {
public:
  explicit NodeRegistry(std::vector<Point>& nodes) : nodes_(nodes) {}

  std::size_t insert(Point p) {
    p = {snap(p.r), snap(p.z)};
    const CellKey base{std::llround(p.r / kCell), std::llround(p.z / kCell)};
    for (long long di = -1; di <= 1; ++di) {
      for (long long dj = -1; dj <= 1; ++dj) {
        const auto it = cells_.find({base.i + di, base.j + dj});
        if (it == cells_.end()) continue;
        for (std::size_t id : it->second) {
          if (geometry::distance(nodes_[id], p) <= kNodeMatch) return id;
        }
      }
    }
    const std::size_t id = nodes_.size();
    nodes_.push_back(p);
    cells_[base].push_back(id);
    return id;
  }

private:
  std::vector<Point>& nodes_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells_;
};

using ElementMap = std::function<Point(double, double)>;

std::array<std::pair<int, int>, 4> face_corner_slots() {
  // Indices into corners(): (00, 10, 11, 01).
  return {{{0, 1}, {1, 2}, {2, 3}, {3, 0}}};
}

class MeshBuilder {
public:
  MeshBuilder(std::string id, int degree) : registry_(mesh_.nodes), degree_(degree) {
    mesh_.id = std::move(id);
  }

  void add_element(const ElementMap& f, Subdomain sd) {
    const auto& pts = poly::gauss_lobatto_points(degree_);
    const int n = degree_ + 1;
    auto corner_area = [&](const ElementMap& m) {
      const Point a = m(0, 0), b = m(1, 0), c = m(1, 1), d = m(0, 1);
      const auto cr = [](Point x, Point y) { return x.r * y.z - x.z * y.r; };
      return 0.5 * (cr(a, b) + cr(b, c) + cr(c, d) + cr(d, a));
    };
    ElementMap map = f;
    if (corner_area(f) < 0.0) {
      map = [f](double u, double v) { return f(1.0 - u, v); };
    }
    Element el;
    el.geometry_degree = degree_;
    el.subdomain = sd;
    el.nodes.reserve(static_cast<std::size_t>(n * n));
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        // 1 - x_i == x_{g-i} exactly, so flipped elements reuse the same node positions.
        el.nodes.push_back(registry_.insert(map(pts[i], pts[j])));
      }
    }
    mesh_.elements.push_back(std::move(el));
  }

  QuadMesh finish() {
    classify_facets(mesh_);
    return std::move(mesh_);
  }

  static void classify_facets(QuadMesh& mesh) {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::pair<std::size_t, int>>> incidence;
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
      const auto c = mesh.corners(e);
      for (int f = 0; f < 4; ++f) {
        const auto [s0, s1] = face_corner_slots()[static_cast<std::size_t>(f)];
        const auto a = c[static_cast<std::size_t>(s0)];
        const auto b = c[static_cast<std::size_t>(s1)];
        incidence[{std::min(a, b), std::max(a, b)}].emplace_back(e, f);
      }
    }
    mesh.facets.clear();
    for (const auto& [key, users] : incidence) {
      if (users.size() == 1) {
        const auto [e, f] = users.front();
        const auto& el = mesh.elements[e];
        bool on_axis = true;
        for (int li : QuadMesh::face_local_indices(el.geometry_degree, f)) {
          if (mesh.nodes[el.nodes[static_cast<std::size_t>(li)]].r != 0.0) on_axis = false;
        }
        mesh.facets.push_back({e, f, on_axis ? BoundaryTag::Axis : BoundaryTag::Outer});
      } else if (users.size() == 2) {
        const auto [e0, f0] = users[0];
        const auto [e1, f1] = users[1];
        const auto s0 = mesh.elements[e0].subdomain;
        const auto s1 = mesh.elements[e1].subdomain;
        if (s0 != s1) {
          if (s0 == Subdomain::Conductor) {
            mesh.facets.push_back({e0, f0, BoundaryTag::Interface});
          } else {
            mesh.facets.push_back({e1, f1, BoundaryTag::Interface});
          }
        }
      } else {
        throw MeshGenerationError("facet shared by more than two elements");
      }
    }
    std::sort(mesh.facets.begin(), mesh.facets.end(), [](const Facet& x, const Facet& y) {
      return std::tie(x.element, x.face) < std::tie(y.element, y.face);
    });
  }

private:
  QuadMesh mesh_;
  NodeRegistry registry_;
  int degree_;
};

// Ellipse helpers exact at the axis.
double sin_half_turn(double phi) {
  return phi <= 0.5 * std::numbers::pi ? std::sin(phi) : std::sin(std::numbers::pi - phi);
}
double cos_half_turn(double phi) {
  return phi <= 0.5 * std::numbers::pi ? std::cos(phi) : -std::cos(std::numbers::pi - phi);
}

}  // namespace

// ---------------------------------------------------------------------------
// QuadMesh

Point QuadMesh::map(std::size_t e, double u, double v) const {
  const auto& el = elements[e];
  const int n = el.geometry_degree + 1;
  const auto& basis = poly::lobatto_basis(el.geometry_degree);
  std::array<double, 33> bu{};
  std::array<double, 33> bv{};
  basis.eval(u, bu.data());
  basis.eval(v, bv.data());
  Point x{};
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double w = bu[static_cast<std::size_t>(i)] * bv[static_cast<std::size_t>(j)];
      const Point& p = nodes[el.nodes[static_cast<std::size_t>(i + n * j)]];
      x.r += w * p.r;
      x.z += w * p.z;
    }
  }
  return x;
}

Jacobian QuadMesh::jacobian(std::size_t e, double u, double v) const {
  const auto& el = elements[e];
  const int n = el.geometry_degree + 1;
  const auto& basis = poly::lobatto_basis(el.geometry_degree);
  std::array<double, 33> bu{}, du{}, bv{}, dv{};
  basis.eval(u, bu.data(), du.data());
  basis.eval(v, bv.data(), dv.data());
  Jacobian jac;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const auto sj = static_cast<std::size_t>(j);
      const Point& p = nodes[el.nodes[static_cast<std::size_t>(i + n * j)]];
      jac.dr_du += du[si] * bv[sj] * p.r;
      jac.dz_du += du[si] * bv[sj] * p.z;
      jac.dr_dv += bu[si] * dv[sj] * p.r;
      jac.dz_dv += bu[si] * dv[sj] * p.z;
    }
  }
  return jac;
}

std::array<std::size_t, 4> QuadMesh::corners(std::size_t e) const {
  const auto& el = elements[e];
  const std::size_t g = static_cast<std::size_t>(el.geometry_degree);
  const std::size_t n = g + 1;
  return {el.nodes[0], el.nodes[g], el.nodes[n * n - 1], el.nodes[g * n]};
}

std::vector<int> QuadMesh::face_local_indices(int degree, int face) {
  const int n = degree + 1;
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    switch (face) {
      case 0: idx[static_cast<std::size_t>(s)] = s; break;
      case 1: idx[static_cast<std::size_t>(s)] = degree + n * s; break;
      case 2: idx[static_cast<std::size_t>(s)] = (degree - s) + n * degree; break;
      case 3: idx[static_cast<std::size_t>(s)] = n * (degree - s); break;
      default: throw DomainError("face index out of range");
    }
  }
  return idx;
}

std::array<double, 2> QuadMesh::face_reference_point(int face, double s) {
  switch (face) {
    case 0: return {s, 0.0};
    case 1: return {1.0, s};
    case 2: return {1.0 - s, 1.0};
    case 3: return {0.0, 1.0 - s};
    default: throw DomainError("face index out of range");
  }
}

double QuadMesh::element_area(std::size_t e, int quad_points) const {
  const auto rule = poly::gauss_legendre(quad_points);
  double area = 0.0;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      area += rule.weights[i] * rule.weights[j] *
              std::abs(jacobian(e, rule.nodes[i], rule.nodes[j]).det());
    }
  }
  return area;
}

// ---------------------------------------------------------------------------
// Generators

QuadMesh square_mesh_A(int k) {
  if (k < 1) throw MeshGenerationError("square mesh needs k >= 1");
  MeshBuilder builder("A-M" + std::to_string(k), 1);
  const double h = 1.0 / k;
  for (int j = 0; j < 4 * k; ++j) {
    for (int i = 0; i < 2 * k; ++i) {
      const double rc = (i + 0.5) * h;
      const double zc = -2.0 + (j + 0.5) * h;
      const Subdomain sd =
          (rc < 1.0 && std::abs(zc) < 1.0) ? Subdomain::Conductor : Subdomain::Dielectric;
      builder.add_element(
          [i, j, k](double u, double v) {
            return Point{(i + u) / k, -2.0 + (j + v) / k};
          },
          sd);
    }
  }
  return builder.finish();
}

double band_thickness(const LayeredMeshOptions& options) {
  const physics::PhysicalParams params(options.sigma_max, options.omega);
  return options.band_factor * params.ell();
}

QuadMesh layered_mesh_B(geometry::ConfigId config, const LayeredMeshOptions& options) {
  using geometry::ConfigId;
  if (config == ConfigId::A) throw MeshGenerationError("layered meshes need a spheroidal configuration");
  if (options.n_layers < 1) throw MeshGenerationError("n_layers must be >= 1");
  if (options.geometry_degree < 1) throw MeshGenerationError("geometry degree must be >= 1");
  if (options.core_r < 1 || options.core_z < 2 || options.core_z % 2 != 0) {
    throw MeshGenerationError("core subdivisions must satisfy core_r >= 1 and even core_z >= 2");
  }
  if (!(options.grading > 0.0)) throw MeshGenerationError("grading ratio must be positive");

  const auto domain = geometry::MeridianDomain::make(config);
  const auto& sp = domain.spheroid();
  const bool conductor_inside = domain.conductor_inside();
  // Geometry is built on the inward-oriented ellipse regardless of where the conductor is.
  const auto curve = geometry::ellipse_arclength(sp.a, sp.c);

  const double t = band_thickness(options);
  const double kmax = curve->max_abs_curvature();
  if (!(t < 1.0 / kmax)) {
    throw MeshGenerationError("skin band thickness " + std::to_string(t) +
                              " exceeds the normal-coordinate range 1/max|k| = " +
                              std::to_string(1.0 / kmax));
  }

  // Layer levels measured from the interface, each layer 1/grading times the previous.
  const int nl = options.n_layers;
  std::vector<double> levels(static_cast<std::size_t>(nl) + 1, 0.0);
  {
    double total = 0.0;
    double w = 1.0;
    std::vector<double> widths;
    for (int m = 0; m < nl; ++m) {
      widths.push_back(w);
      total += w;
      w /= options.grading;
    }
    double acc = 0.0;
    for (int m = 0; m < nl; ++m) {
      acc += widths[static_cast<std::size_t>(m)];
      levels[static_cast<std::size_t>(m) + 1] = m + 1 == nl ? t : t * acc / total;
    }
  }
  const double side = conductor_inside ? 1.0 : -1.0;

  // Inner block [0, alpha] x [-beta, beta] and its boundary points Q_j.
  const double alpha = 0.5 * sp.a;
  const double beta = 0.5 * sp.c;
  const int mr = options.core_r;
  const int mz = options.core_z;
  const int n_arcs = 2 * mr + mz;
  std::vector<Point> q(static_cast<std::size_t>(n_arcs) + 1);
  for (int j = 0; j <= n_arcs; ++j) {
    Point p;
    if (j <= mr) {
      p = {alpha * j / mr, -beta};
    } else if (j <= mr + mz) {
      const int m = j - mr;
      p = {alpha, 2 * m == mz ? 0.0 : -beta + 2.0 * beta * m / mz};
    } else {
      const int m = j - mr - mz;
      p = {m == mr ? 0.0 : alpha * (mr - m) / mr, beta};
    }
    q[static_cast<std::size_t>(j)] = p;
  }
  std::vector<double> xi(static_cast<std::size_t>(n_arcs) + 1);
  for (int j = 0; j <= n_arcs; ++j) {
    const Point p = q[static_cast<std::size_t>(j)];
    const double phi = std::atan2(p.r / alpha, -p.z / beta);
    xi[static_cast<std::size_t>(j)] = j == 0 ? 0.0 : (j == n_arcs ? curve->length() : curve->arclength_at(phi));
  }

  auto interface_point = [curve](double s) { return curve->point(s); };
  auto offset_point = [curve, side](double s, double h) {
    if (h == 0.0) return curve->point(s);
    const Point x = curve->point(s);
    const Point tg = curve->tangent(s);
    return Point{x.r - side * h * tg.z, x.z + side * h * tg.r};
  };
  auto outer_point = [curve, sp](double s) {
    const double phi = curve->parameter_at(s);
    return Point{sp.b * sin_half_turn(phi), -sp.d * cos_half_turn(phi)};
  };

  const auto inner_sd = conductor_inside ? Subdomain::Conductor : Subdomain::Dielectric;
  const auto outer_sd = conductor_inside ? Subdomain::Dielectric : Subdomain::Conductor;

  std::string id = std::string(geometry::to_string(config)) + "-M" + std::to_string(nl) + "-s" +
                   std::to_string(static_cast<long long>(std::llround(options.sigma_max)));
  MeshBuilder builder(id, options.geometry_degree);

  // Inner block.
  for (int jz = 0; jz < mz; ++jz) {
    for (int ir = 0; ir < mr; ++ir) {
      builder.add_element(
          [=](double u, double v) {
            return Point{alpha * (ir + u) / mr, -beta + 2.0 * beta * (jz + v) / mz};
          },
          inner_sd);
    }
  }

  // Transition ring between the block boundary and the inner curve.
  const double h_inner = conductor_inside ? t : 0.0;
  const std::array<double, 3> ring_levels{0.0, 0.4, 1.0};  // 0 at the inner curve, 1 at the block
  for (int j = 0; j < n_arcs; ++j) {
    const double x0 = xi[static_cast<std::size_t>(j)];
    const double x1 = xi[static_cast<std::size_t>(j) + 1];
    const Point q0 = q[static_cast<std::size_t>(j)];
    const Point q1 = q[static_cast<std::size_t>(j) + 1];
    for (std::size_t m = 0; m + 1 < ring_levels.size(); ++m) {
      const double w0 = ring_levels[m];
      const double w1 = ring_levels[m + 1];
      builder.add_element(
          [=](double u, double v) {
            const double s = u == 1.0 ? x1 : x0 + u * (x1 - x0);
            const Point inner = offset_point(s, h_inner);
            const Point block = u == 1.0 ? q1 : q0 + u * (q1 - q0);
            const double w = v == 1.0 ? w1 : w0 + v * (w1 - w0);
            if (w == 0.0) return inner;
            if (w == 1.0) return block;
            return (1.0 - w) * inner + w * block;
          },
          inner_sd);
    }
  }

  // Skin band on the conductor side of the interface.
  for (int j = 0; j < n_arcs; ++j) {
    const double x0 = xi[static_cast<std::size_t>(j)];
    const double x1 = xi[static_cast<std::size_t>(j) + 1];
    for (int m = 0; m < nl; ++m) {
      const double h0 = levels[static_cast<std::size_t>(m)];
      const double h1 = levels[static_cast<std::size_t>(m) + 1];
      builder.add_element(
          [=](double u, double v) {
            const double s = u == 1.0 ? x1 : x0 + u * (x1 - x0);
            const double h = v == 1.0 ? h1 : h0 + v * (h1 - h0);
            return offset_point(s, h);
          },
          Subdomain::Conductor);
    }
  }

  // Outer ring from the interface (or band edge) to the outer ellipse.
  const double h_outer = conductor_inside ? 0.0 : t;
  const std::array<double, 3> shell_levels{0.0, 0.5, 1.0};
  for (int j = 0; j < n_arcs; ++j) {
    const double x0 = xi[static_cast<std::size_t>(j)];
    const double x1 = xi[static_cast<std::size_t>(j) + 1];
    for (std::size_t m = 0; m + 1 < shell_levels.size(); ++m) {
      const double w0 = shell_levels[m];
      const double w1 = shell_levels[m + 1];
      builder.add_element(
          [=](double u, double v) {
            const double s = u == 1.0 ? x1 : x0 + u * (x1 - x0);
            const Point start = h_outer == 0.0 ? interface_point(s) : offset_point(s, h_outer);
            const Point end = outer_point(s);
            const double w = v == 1.0 ? w1 : w0 + v * (w1 - w0);
            if (w == 0.0) return start;
            if (w == 1.0) return end;
            return (1.0 - w) * start + w * end;
          },
          outer_sd);
    }
  }

  return builder.finish();
}

// ---------------------------------------------------------------------------
// Conformity

ConformityReport check_conformity(const QuadMesh& mesh) {
  ConformityReport report;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::pair<std::size_t, int>>> incidence;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto c = mesh.corners(e);
    for (int f = 0; f < 4; ++f) {
      const auto [s0, s1] = face_corner_slots()[static_cast<std::size_t>(f)];
      const auto a = c[static_cast<std::size_t>(s0)];
      const auto b = c[static_cast<std::size_t>(s1)];
      incidence[{std::min(a, b), std::max(a, b)}].emplace_back(e, f);
    }
  }
  std::map<std::pair<std::size_t, int>, std::vector<BoundaryTag>> tags;
  for (const auto& f : mesh.facets) tags[{f.element, f.face}].push_back(f.tag);

  auto face_nodes = [&](std::size_t e, int f) {
    const auto& el = mesh.elements[e];
    std::vector<std::size_t> ids;
    for (int li : QuadMesh::face_local_indices(el.geometry_degree, f)) {
      ids.push_back(el.nodes[static_cast<std::size_t>(li)]);
    }
    return ids;
  };

  for (const auto& [key, users] : incidence) {
    if (users.size() == 1) {
      ++report.boundary_facets;
      const auto it = tags.find(users.front());
      if (it == tags.end() || it->second.size() != 1) {
        report.problems.push_back("boundary facet without exactly one tag");
        continue;
      }
      const BoundaryTag tag = it->second.front();
      if (tag == BoundaryTag::Interface) report.problems.push_back("interface tag on a boundary facet");
      if (tag == BoundaryTag::Axis) {
        for (auto id : face_nodes(users.front().first, users.front().second)) {
          if (mesh.nodes[id].r != 0.0) report.problems.push_back("axis facet node off r = 0");
        }
      }
    } else if (users.size() == 2) {
      ++report.interior_facets;
      const auto& [e0, f0] = users[0];
      const auto& [e1, f1] = users[1];
      auto n0 = face_nodes(e0, f0);
      auto n1 = face_nodes(e1, f1);
      std::reverse(n1.begin(), n1.end());
      if (n0 != n1) report.problems.push_back("non-matching nodes on a shared facet");
      const bool differs = mesh.elements[e0].subdomain != mesh.elements[e1].subdomain;
      const std::size_t ntags = (tags.contains(users[0]) ? tags[users[0]].size() : 0) +
                                (tags.contains(users[1]) ? tags[users[1]].size() : 0);
      if (differs) {
        ++report.interface_facets;
        if (ntags != 1) report.problems.push_back("interface facet not tagged exactly once");
      } else if (ntags != 0) {
        report.problems.push_back("tag on an interior facet inside one subdomain");
      }
    } else {
      report.problems.push_back("facet shared by more than two elements");
    }
  }
  for (const auto& p : mesh.nodes) {
    if (p.r < 0.0) {
      report.problems.push_back("node with r < 0");
      break;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Text IO

namespace {

const char* subdomain_name(Subdomain s) { return s == Subdomain::Conductor ? "conductor" : "dielectric"; }

const char* tag_name(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::Outer: return "outer";
    case BoundaryTag::Axis: return "axis";
    case BoundaryTag::Interface: return "interface";
  }
  return "outer";
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
T read_value(std::istream& in, const char* what) {
  T value{};
  if (!(in >> value)) throw MeshFormatError(std::string("cannot read ") + what);
  return value;
}

void expect_word(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw MeshFormatError("expected '" + word + "', got '" + got + "'");
}

}  // namespace

void write_mesh(std::ostream& out, const QuadMesh& mesh) {
  out << "QUADMESH v1 " << (mesh.id.empty() ? "-" : mesh.id) << '\n';
  out << "nodes " << mesh.nodes.size() << '\n';
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    out << i << ' ' << fmt17(mesh.nodes[i].r) << ' ' << fmt17(mesh.nodes[i].z) << '\n';
  }
  out << "elements " << mesh.elements.size() << '\n';
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    out << e << ' ' << subdomain_name(el.subdomain) << ' ' << el.geometry_degree << ' ' << el.nodes.size();
    for (auto id : el.nodes) out << ' ' << id;
    out << '\n';
  }
  out << "facets " << mesh.facets.size() << '\n';
  for (const auto& f : mesh.facets) out << f.element << ' ' << f.face << ' ' << tag_name(f.tag) << '\n';
}

QuadMesh read_mesh(std::istream& in) {
  QuadMesh mesh;
  expect_word(in, "QUADMESH");
  expect_word(in, "v1");
  mesh.id = read_value<std::string>(in, "mesh id");
  if (mesh.id == "-") mesh.id.clear();

  expect_word(in, "nodes");
  const auto nn = read_value<std::size_t>(in, "node count");
  mesh.nodes.resize(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    if (read_value<std::size_t>(in, "node id") != i) throw MeshFormatError("node ids must be consecutive");
    mesh.nodes[i].r = read_value<double>(in, "node r");
    mesh.nodes[i].z = read_value<double>(in, "node z");
  }

  expect_word(in, "elements");
  const auto ne = read_value<std::size_t>(in, "element count");
  mesh.elements.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    if (read_value<std::size_t>(in, "element id") != e) throw MeshFormatError("element ids must be consecutive");
    auto& el = mesh.elements[e];
    const auto sd = read_value<std::string>(in, "subdomain");
    if (sd == "conductor") {
      el.subdomain = Subdomain::Conductor;
    } else if (sd == "dielectric") {
      el.subdomain = Subdomain::Dielectric;
    } else {
      throw MeshFormatError("unknown subdomain '" + sd + "'");
    }
    el.geometry_degree = read_value<int>(in, "geometry degree");
    if (el.geometry_degree < 1 || el.geometry_degree > 32) throw MeshFormatError("geometry degree out of range");
    const auto n = read_value<std::size_t>(in, "element node count");
    const auto expected = static_cast<std::size_t>((el.geometry_degree + 1) * (el.geometry_degree + 1));
    if (n != expected) throw MeshFormatError("element node count does not match its degree");
    el.nodes.resize(n);
    for (auto& id : el.nodes) {
      id = read_value<std::size_t>(in, "element node");
      if (id >= nn) throw MeshFormatError("element node id out of range");
    }
  }

  expect_word(in, "facets");
  const auto nf = read_value<std::size_t>(in, "facet count");
  mesh.facets.resize(nf);
  for (auto& f : mesh.facets) {
    f.element = read_value<std::size_t>(in, "facet element");
    f.face = read_value<int>(in, "facet face");
    if (f.element >= ne || f.face < 0 || f.face > 3) throw MeshFormatError("facet reference out of range");
    const auto tag = read_value<std::string>(in, "facet tag");
    if (tag == "outer") {
      f.tag = BoundaryTag::Outer;
    } else if (tag == "axis") {
      f.tag = BoundaryTag::Axis;
    } else if (tag == "interface") {
      f.tag = BoundaryTag::Interface;
    } else {
      throw MeshFormatError("unknown facet tag '" + tag + "'");
    }
  }
  return mesh;
}

}  // namespace skin::mesh
