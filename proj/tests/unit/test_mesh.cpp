#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "skin/errors.hpp"
#include "skin/mesh.hpp"
#include "skin/physics.hpp"
#include "skin/polynomial.hpp"

using namespace skin;
using namespace skin::mesh;
using geometry::ConfigId;
using geometry::MeridianDomain;

namespace {

std::size_t count_conductor(const QuadMesh& m) {
  std::size_t n = 0;
  for (const auto& e : m.elements) n += e.subdomain == Subdomain::Conductor ? 1 : 0;
  return n;
}

double total_area(const QuadMesh& m, Subdomain* only = nullptr) {
  double a = 0.0;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    if (only && m.elements[e].subdomain != *only) continue;
    a += m.element_area(e, 16);
  }
  return a;
}

// Distance to the ellipse (r/a)^2 + (z/c)^2 = 1 by Newton on the foot-point angle.
double ellipse_distance(double a, double c, Point p) {
  double best = 1e300;
  for (int k = 0; k <= 64; ++k) {
    double t = std::numbers::pi * k / 64.0;
    for (int it = 0; it < 50; ++it) {
      const double x = a * std::sin(t) - p.r, y = -c * std::cos(t) - p.z;
      const double dx = a * std::cos(t), dy = c * std::sin(t);
      const double g = x * dx + y * dy;
      const double dg = dx * dx + dy * dy + x * (-a * std::sin(t)) + y * (c * std::cos(t));
      if (dg <= 0.0) break;
      t -= g / dg;
    }
    best = std::min(best, std::hypot(a * std::sin(t) - p.r, -c * std::cos(t) - p.z));
  }
  return best;
}

LayeredMeshOptions opts(int layers) {
  LayeredMeshOptions o;
  o.n_layers = layers;
  return o;
}

}  // namespace

TEST_CASE("square meshes: element counts") {
  const auto m1 = square_mesh_A(1);
  CHECK(m1.element_count() == 8);
  CHECK(count_conductor(m1) == 2);
  const auto m2 = square_mesh_A(2);
  CHECK(m2.element_count() == 32);
  CHECK(count_conductor(m2) == 8);
  CHECK(square_mesh_A(4).element_count() == 128);
  CHECK_THROWS_AS(square_mesh_A(0), MeshGenerationError);
}

TEST_CASE("square meshes: interface facets lie on r = 1 or z = +-1") {
  for (int k : {1, 2, 3, 4}) {
    const auto m = square_mesh_A(k);
    std::size_t n_iface = 0;
    for (const auto& f : m.facets) {
      if (f.tag != BoundaryTag::Interface) continue;
      ++n_iface;
      CHECK(m.elements[f.element].subdomain == Subdomain::Conductor);
      for (int li : QuadMesh::face_local_indices(1, f.face)) {
        const Point p = m.nodes[m.elements[f.element].nodes[static_cast<std::size_t>(li)]];
        CHECK((p.r == 1.0 || std::abs(p.z) == 1.0));
      }
    }
    CHECK(n_iface == static_cast<std::size_t>(4 * k));
  }
}

TEST_CASE("square meshes nest") {
  for (int k : {1, 2, 4}) {
    const auto coarse = square_mesh_A(k);
    const auto fine = square_mesh_A(2 * k);
    std::set<std::pair<double, double>> fine_nodes;
    for (const auto& p : fine.nodes) fine_nodes.insert({p.r, p.z});
    for (const auto& p : coarse.nodes) CHECK(fine_nodes.contains({p.r, p.z}));
  }
}

TEST_CASE("conformity and area on every generated mesh") {
  std::vector<QuadMesh> meshes{square_mesh_A(1), square_mesh_A(2), square_mesh_A(3)};
  for (ConfigId id : {ConfigId::B1, ConfigId::B2, ConfigId::C1, ConfigId::C2}) {
    for (int layers : {1, 3, 6}) meshes.push_back(layered_mesh_B(id, opts(layers)));
  }
  for (const auto& m : meshes) {
    INFO(m.id);
    const auto rep = check_conformity(m);
    CHECK(rep.ok());
    CHECK(rep.interface_facets > 0);
    const auto cfg = geometry::parse_config(m.id.substr(0, m.id.find('-')));
    const auto dom = MeridianDomain::make(cfg);
    CHECK(std::abs(total_area(m) - dom.area()) <= 1e-6 * dom.area());
    Subdomain cond = Subdomain::Conductor;
    CHECK(std::abs(total_area(m, &cond) - dom.conductor_area()) <= 1e-6 * dom.area());
    for (const auto& p : m.nodes) CHECK(p.r >= 0.0);
    // Positive Jacobian at the quadrature points of the highest degree used.
    const auto rule = poly::gauss_legendre(23);
    double min_det = 1e300;
    for (std::size_t e = 0; e < m.element_count(); ++e) {
      for (double u : rule.nodes) {
        for (double v : rule.nodes) min_det = std::min(min_det, m.jacobian(e, u, v).det());
      }
    }
    CHECK(min_det > 0.0);
  }
}

TEST_CASE("layered meshes: band structure") {
  const LayeredMeshOptions o = opts(1);
  const double t = band_thickness(o);
  CHECK(t == doctest::Approx(6.0 * physics::PhysicalParams(80.0).ell()));
  for (ConfigId id : {ConfigId::B1, ConfigId::C1}) {
    const auto m = layered_mesh_B(id, o);
    const auto& sp = MeridianDomain::make(id).spheroid();
    for (const auto& f : m.facets) {
      if (f.tag != BoundaryTag::Interface) continue;
      // One element across the band: the opposite face sits at normal distance t.
      const int opposite = (f.face + 2) % 4;
      for (double s : {0.0, 0.5, 1.0}) {
        const auto ref = QuadMesh::face_reference_point(opposite, s);
        const Point p = m.map(f.element, ref[0], ref[1]);
        CHECK(ellipse_distance(sp.a, sp.c, p) == doctest::Approx(t).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("layered meshes: skin layers are elongated along the interface") {
  const auto m = layered_mesh_B(ConfigId::B1, opts(3));
  const double t = band_thickness(opts(3));
  std::size_t n_band = 0;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto c = m.corners(e);
    bool in_band = true;
    for (auto id : c) in_band = in_band && ellipse_distance(2.0, 1.0, m.nodes[id]) <= t * (1 + 1e-9);
    if (!in_band) continue;
    ++n_band;
    const double tangential = std::max(geometry::distance(m.nodes[c[0]], m.nodes[c[1]]),
                                       geometry::distance(m.nodes[c[3]], m.nodes[c[2]]));
    const double normal = std::max(geometry::distance(m.nodes[c[1]], m.nodes[c[2]]),
                                   geometry::distance(m.nodes[c[0]], m.nodes[c[3]]));
    CHECK(normal < tangential);
  }
  CHECK(n_band == 3 * 12);
}

TEST_CASE("layered meshes: curved interface facets follow the ellipse") {
  for (ConfigId id : {ConfigId::B1, ConfigId::B2, ConfigId::C2}) {
    const auto m = layered_mesh_B(id, opts(3));
    const auto& sp = MeridianDomain::make(id).spheroid();
    for (const auto& f : m.facets) {
      if (f.tag == BoundaryTag::Interface) {
        const auto ref = QuadMesh::face_reference_point(f.face, 0.5);
        CHECK(ellipse_distance(sp.a, sp.c, m.map(f.element, ref[0], ref[1])) <= 1e-8);
      } else if (f.tag == BoundaryTag::Axis) {
        const auto ref = QuadMesh::face_reference_point(f.face, 0.37);
        CHECK(m.map(f.element, ref[0], ref[1]).r == 0.0);
      }
    }
  }
}

TEST_CASE("layered meshes reject bands beyond the normal-coordinate range") {
  LayeredMeshOptions o;
  o.sigma_max = 5.0;
  o.band_factor = 6.0;  // 0.62 > 1/max|k| = 0.25 on B2
  CHECK_THROWS_AS(layered_mesh_B(ConfigId::B2, o), MeshGenerationError);
  CHECK_THROWS_AS(layered_mesh_B(ConfigId::A, LayeredMeshOptions{}), MeshGenerationError);
}

TEST_CASE("mesh text format round-trips bit-exactly") {
  for (const auto& m : {square_mesh_A(2), layered_mesh_B(ConfigId::C1, opts(3))}) {
    std::ostringstream out;
    write_mesh(out, m);
    std::istringstream in(out.str());
    const auto back = read_mesh(in);
    CHECK(back.id == m.id);
    CHECK(back.nodes == m.nodes);
    CHECK(back.facets.size() == m.facets.size());
    std::ostringstream again;
    write_mesh(again, back);
    CHECK(again.str() == out.str());
    CHECK(out.str().rfind("QUADMESH v1", 0) == 0);
  }
  std::istringstream bad("QUADMESH v1 x\nnodes 1\n0 0.5\n");
  CHECK_THROWS_AS(read_mesh(bad), MeshFormatError);
}
