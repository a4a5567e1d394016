#include <cmath>
#include <numeric>
#include <random>
#include <map>
#include <sstream>

#include "doctest.h"
#include "skin/errors.hpp"
#include "skin/fem.hpp"

using namespace skin;
using namespace skin::fem;
using cd = std::complex<double>;
using geometry::ConfigId;
using linsolve::Vector;

namespace {

// One straight element covering [0,1]^2.
std::shared_ptr<const QuadMesh> unit_square() {
  auto m = std::make_shared<QuadMesh>();
  m->id = "unit";
  m->nodes = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  m->elements.push_back({{0, 1, 2, 3}, 1, mesh::Subdomain::Conductor});
  return m;
}

std::shared_ptr<const QuadMesh> shared(QuadMesh m) { return std::make_shared<const QuadMesh>(std::move(m)); }

std::vector<Point> random_points_A(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ur(0.0, 2.0), uz(-2.0, 2.0);
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) pts.push_back({ur(rng), uz(rng)});
  return pts;
}

std::vector<Point> random_points_B1(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ur(0.0, 4.0), uz(-2.0, 2.0);
  std::vector<Point> pts;
  while (static_cast<int>(pts.size()) < n) {
    const Point p{ur(rng), uz(rng)};
    if (p.r * p.r / 16.0 + p.z * p.z / 4.0 < 0.98) pts.push_back(p);
  }
  return pts;
}

SourceSpec manufactured(double kappa) {
  SourceSpec s;
  s.dirichlet = [](Point x) { return x.r; };
  s.density = [kappa](Point x) { return -kappa * kappa * x.r; };
  return s;
}

}  // namespace

TEST_CASE("shape basis: cardinality, corners and partition of unity") {
  const auto b1 = shape_basis(1);
  CHECK(b1.size() == 4);
  const double corners[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  for (int c = 0; c < 4; ++c) {
    double vals[4];
    b1.values(corners[c][0], corners[c][1], vals);
    for (int a = 0; a < 4; ++a) CHECK(vals[a] == (a == c ? 1.0 : 0.0));
  }
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int p : {1, 2, 5, 10, 20}) {
    const auto b = shape_basis(p);
    CHECK(b.size() == (p + 1) * (p + 1));
    std::vector<double> vals(static_cast<std::size_t>(b.size())), du(vals.size()), dv(vals.size());
    for (int k = 0; k < 25; ++k) {
      const double x = u(rng), y = u(rng);
      b.values(x, y, vals.data());
      b.gradients(x, y, du.data(), dv.data());
      CHECK(std::abs(std::accumulate(vals.begin(), vals.end(), 0.0) - 1.0) <= 1e-12);
      CHECK(std::abs(std::accumulate(du.begin(), du.end(), 0.0)) <= 1e-9);
    }
  }
  CHECK_THROWS_AS(shape_basis(0), DomainError);
  CHECK_THROWS_AS(shape_basis(21), DomainError);
}

TEST_CASE("shape basis stays bounded at p = 10") {
  const auto b = shape_basis(10);
  std::vector<double> vals(121);
  double worst = 0.0;
  for (int j = 0; j <= 200; ++j) {
    for (int i = 0; i <= 200; ++i) {
      b.values(i / 200.0, j / 200.0, vals.data());
      for (double v : vals) worst = std::max(worst, std::abs(v));
    }
  }
  CHECK(worst <= 1e4);
}

TEST_CASE("energy of H = r on one element equals 2") {
  for (int p : {1, 3, 6}) {
    auto space = std::make_shared<const FeSpace>(unit_square(), p);
    const auto a = assemble_form(*space, FormCoefficients::uniform(0.0));
    const auto h = interpolate(space, [](Point x) { return cd(x.r, 0.0); });
    const cd energy = h.coefficients().transpose() * a.multiply(h.coefficients());
    CHECK(energy.real() == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(energy.imag() == 0.0);
  }
}

TEST_CASE("mass form of the constant equals kappa^2 / 2 on the unit square") {
  const double kappa = 0.1;
  for (int p : {1, 4}) {
    auto space = std::make_shared<const FeSpace>(unit_square(), p);
    FormCoefficients mass_only;
    mass_only.inv_eps_conductor = 0.0;
    mass_only.inv_eps_dielectric = 0.0;
    mass_only.kappa2 = kappa * kappa;
    const auto a = assemble_form(*space, mass_only);
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(space->dof_count()));
    const cd q = ones.transpose() * a.multiply(ones);
    CHECK(-q.real() == doctest::Approx(kappa * kappa * 0.5).epsilon(1e-13));
    const auto em = element_matrices(*space, 0);
    CHECK(em.mass.sum() == doctest::Approx(0.5).epsilon(1e-13));
  }
}

TEST_CASE("assembled matrices are exactly complex symmetric") {
  auto m = shared(mesh::layered_mesh_B(ConfigId::B1, {}));
  for (int p : {2, 5}) {
    const FeSpace space(m, p);
    const auto a = assemble_form(space, FormCoefficients::from_params(physics::PhysicalParams(80.0)));
    CHECK(a.asymmetry() == 0.0);
    const auto sys = assemble(space, physics::PhysicalParams(5.0), SourceSpec::boundary_data_r());
    CHECK(sys.matrix.asymmetry() == 0.0);
  }
}

TEST_CASE("assembly is bit-identical across thread counts") {
  auto m = shared(mesh::layered_mesh_B(ConfigId::C1, {}));
  auto space = std::make_shared<const FeSpace>(m, 4);
  const auto coeffs = FormCoefficients::from_params(physics::PhysicalParams(20.0));
  const auto a1 = assemble_form(*space, coeffs, 1);
  const auto a3 = assemble_form(*space, coeffs, 3);
  CHECK(a1.matrix().nonZeros() == a3.matrix().nonZeros());
  CHECK((a1.matrix() - a3.matrix()).norm() == 0.0);
  SolveOptions o1, o3;
  o3.threads = 3;
  const auto f1 = solve_problem(space, coeffs, SourceSpec::interior_ball(), o1);
  const auto f3 = solve_problem(space, coeffs, SourceSpec::interior_ball(), o3);
  CHECK(f1.coefficients() == f3.coefficients());
}

TEST_CASE("DOF identification and constraints") {
  auto m = shared(mesh::square_mesh_A(2));
  for (int p : {1, 3}) {
    const FeSpace s(m, p);
    // Global grid of a continuous Q_p space on a 4 x 8 array of squares.
    CHECK(s.dof_count() == static_cast<std::size_t>((4 * p + 1) * (8 * p + 1)));
    for (std::size_t d = 0; d < s.dof_count(); ++d) {
      const Point x = s.dof_points()[d];
      const bool boundary = x.r == 0.0 || x.r == 2.0 || x.z == -2.0 || x.z == 2.0;
      CHECK(s.constrained(d) == boundary);
      CHECK(s.on_axis(d) == (x.r == 0.0));
    }
  }
  CHECK_THROWS_AS(FeSpace(m, 0), DomainError);
  CHECK_THROWS_AS(FeSpace(m, 21), DomainError);
}

TEST_CASE("manufactured solution H = r is reproduced exactly") {
  const double kappa = physics::PhysicalParams(5.0).kappa();
  auto m = shared(mesh::square_mesh_A(2));
  const auto pts = random_points_A(50, 2024);
  for (int p : {1, 4, 10}) {
    auto space = std::make_shared<const FeSpace>(m, p);
    for (bool condense : {true, false}) {
      SolveOptions o;
      o.condense = condense;
      const auto h = solve_problem(space, FormCoefficients::uniform(kappa), manufactured(kappa), o);
      CHECK(h.info().residual <= 1e-10);
      double worst = 0.0;
      for (const auto& x : pts) worst = std::max(worst, std::abs(h.evaluate(x) - x.r));
      CHECK(worst <= 1e-10);
    }
  }
}

TEST_CASE("condensed and monolithic solves agree") {
  auto m = shared(mesh::layered_mesh_B(ConfigId::B1, {}));
  auto space = std::make_shared<const FeSpace>(m, 5);
  const physics::PhysicalParams params(20.0);
  SolveOptions full;
  full.condense = false;
  const auto a = solve_problem(space, params, SourceSpec::boundary_data_r());
  const auto b = solve_problem(space, params, SourceSpec::boundary_data_r(), full);
  CHECK(a.info().residual <= 1e-10);
  CHECK(b.info().residual <= 1e-10);
  CHECK((a.coefficients() - b.coefficients()).lpNorm<Eigen::Infinity>() <= 1e-9 * b.coefficients().lpNorm<Eigen::Infinity>());
}

TEST_CASE("Galerkin consistency against random test functions") {
  auto m = shared(mesh::layered_mesh_B(ConfigId::B1, {}));
  auto space = std::make_shared<const FeSpace>(m, 4);
  const physics::PhysicalParams params(80.0);
  const auto src = SourceSpec::boundary_data_r();
  const auto h = solve_problem(space, params, src);
  const auto a = assemble_form(*space, FormCoefficients::from_params(params));
  const Vector res = a.multiply(h.coefficients()) - assemble_load(*space, src);
  const auto sys = assemble(*space, params, src);
  const double bnorm = sys.rhs.lpNorm<Eigen::Infinity>();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    cd dot = 0.0;
    for (std::size_t d = 0; d < space->dof_count(); ++d) {
      if (!space->constrained(d)) dot += cd(u(rng), u(rng)) * res[static_cast<Eigen::Index>(d)];
    }
    CHECK(std::abs(dot) <= 1e-9 * bnorm);
  }
}

TEST_CASE("renumbering the DOFs does not change the field") {
  auto m = shared(mesh::layered_mesh_B(ConfigId::B1, {}));
  auto space = std::make_shared<const FeSpace>(m, 4);
  std::vector<std::size_t> perm(space->dof_count());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(99));
  auto pspace = std::make_shared<const FeSpace>(space->permuted(perm));
  const physics::PhysicalParams params(20.0);
  const auto a = solve_problem(space, params, SourceSpec::boundary_data_r());
  const auto b = solve_problem(pspace, params, SourceSpec::boundary_data_r());
  for (const auto& x : random_points_B1(20, 5)) CHECK(std::abs(a.evaluate(x) - b.evaluate(x)) <= 1e-9);
}

TEST_CASE("evaluation: interpolation, continuity, inverse map") {
  auto sq = shared(mesh::square_mesh_A(3));
  auto space = std::make_shared<const FeSpace>(sq, 2);
  const auto g = interpolate(space, [](Point x) { return cd(x.r, 0.0); });
  for (const auto& x : random_points_A(30, 8)) CHECK(std::abs(g.evaluate(x) - x.r) <= 1e-12);
  CHECK_THROWS_AS(g.evaluate({2.5, 0.0}), PointNotFoundError);

  auto m = shared(mesh::layered_mesh_B(ConfigId::B1, {}));
  auto bspace = std::make_shared<const FeSpace>(m, 6);
  const auto h = solve_problem(bspace, physics::PhysicalParams(20.0), SourceSpec::boundary_data_r());
  // Facet continuity: evaluate shared faces from both neighbours.
  std::map<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, int>> first;
  std::size_t compared = 0;
  for (std::size_t e = 0; e < m->element_count(); ++e) {
    const auto c = m->corners(e);
    for (int f = 0; f < 4; ++f) {
      const auto a = c[static_cast<std::size_t>(f)], b = c[static_cast<std::size_t>((f + 1) % 4)];
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      const auto it = first.find(key);
      if (it == first.end()) {
        first[key] = {e, f};
        continue;
      }
      for (double s : {0.13, 0.5, 0.71}) {
        const auto r1 = QuadMesh::face_reference_point(f, s);
        const auto r2 = QuadMesh::face_reference_point(it->second.second, 1.0 - s);
        CHECK(geometry::distance(m->map(e, r1[0], r1[1]), m->map(it->second.first, r2[0], r2[1])) <= 1e-10);
        CHECK(std::abs(h.evaluate_in_element(e, r1[0], r1[1]) -
                       h.evaluate_in_element(it->second.first, r2[0], r2[1])) <= 1e-10);
      }
      ++compared;
    }
  }
  CHECK(compared > 100);
  // Round trip through the inverse map on curved elements.
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t e = 0; e < m->element_count(); ++e) {
    const Point x = m->map(e, u(rng), u(rng));
    double uu = 0.0, vv = 0.0;
    REQUIRE(invert_map(*m, e, x, uu, vv));
    CHECK(geometry::distance(m->map(e, uu, vv), x) <= 1e-10);
    const auto loc = locate(*m, x);
    CHECK(geometry::distance(m->map(loc.element, loc.u, loc.v), x) <= 1e-10);
  }
}

TEST_CASE("interior source of configuration C") {
  auto m = shared(mesh::layered_mesh_B(ConfigId::C1, {}));
  const FeSpace space(m, 3);
  const auto b = assemble_load(space, SourceSpec::interior_ball());
  // int over the half ellipse r^2/4 + z^2 <= 0.8 of 100 r dr dz = 100 (2/3) A^2 C.
  const double A = 2.0 * std::sqrt(0.8), C = std::sqrt(0.8);
  const double exact = 100.0 * 2.0 / 3.0 * A * A * C;
  CHECK(std::abs(b.sum().real() - exact) <= 2e-3 * exact);
  CHECK(SourceSpec::for_config(ConfigId::C2).density);
  CHECK_FALSE(SourceSpec::for_config(ConfigId::B2).density);
}

TEST_CASE("field export") {
  auto space = std::make_shared<const FeSpace>(unit_square(), 1);
  const auto f = interpolate(space, [](Point x) { return cd(x.r, -x.z / 3.0); });
  std::ostringstream out;
  write_field(out, f);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "FIELD v1");
  std::getline(in, line);
  CHECK(line == "mesh unit");
  std::getline(in, line);
  CHECK(line == "degree 1");
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "dofs 4");
  double re = 0.0, im = 0.0;
  for (int i = 0; i < 4; ++i) {
    in >> re >> im;
    CHECK(cd(re, im) == f.coefficients()[i]);
  }
}
