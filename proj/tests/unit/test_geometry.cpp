#include <cmath>
#include <functional>
#include <numbers>

#include "doctest.h"
#include "skin/errors.hpp"
#include "skin/geometry.hpp"

using namespace skin;
using namespace skin::geometry;

namespace {

// Recursive adaptive Simpson, independent of the library's quadrature.
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50);
}

// Distance from p to the curve by dense sampling followed by golden-section refinement.
double distance_to_curve(const InterfaceCurve& c, Point p) {
  const int n = 2000;
  const double L = c.length();
  int best = 0;
  double best_d = 1e300;
  for (int i = 0; i <= n; ++i) {
    const double d = distance(c.point(L * i / n), p);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  double lo = L * std::max(0, best - 1) / n, hi = L * std::min(n, best + 1) / n;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    if (distance(c.point(x1), p) < distance(c.point(x2), p)) {
      hi = x2;
    } else {
      lo = x1;
    }
  }
  return distance(c.point(0.5 * (lo + hi)), p);
}

}  // namespace

TEST_CASE("straight segments have zero curvature and corners fail loudly") {
  const auto dom = MeridianDomain::make(ConfigId::A);
  const auto& curve = dom.interface();
  CHECK(curve.length() == doctest::Approx(4.0));
  CHECK(curvature(curve, 0.5) == 0.0);
  CHECK(curvature(curve, 2.0) == 0.0);
  CHECK_THROWS_AS(curvature(curve, 1.0), CornerPointError);
  CHECK_THROWS_AS(curvature(curve, 3.0), CornerPointError);
  CHECK_THROWS_AS(mean_curvature(curve, 3.0), CornerPointError);
  // Lateral face r = 1, inward normal (-1, 0).
  CHECK(curve.normal(2.0).r == doctest::Approx(-1.0));
  CHECK(curve.normal(2.0).z == doctest::Approx(0.0));
  CHECK(mean_curvature(curve, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mean_curvature(curve, 1.7) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("circle and sphere curvature") {
  for (double R : {0.5, 1.0, 3.0}) {
    const auto c = ellipse_arclength(R, R);
    CHECK(c->length() == doctest::Approx(std::numbers::pi * R).epsilon(1e-12));
    CHECK(c->max_abs_curvature() == doctest::Approx(1.0 / R).epsilon(1e-9));
    for (int i = 1; i < 20; ++i) {
      const double xi = c->length() * i / 20.0;
      CHECK(curvature(*c, xi) == doctest::Approx(1.0 / R).epsilon(1e-9));
      CHECK(mean_curvature(*c, xi) == doctest::Approx(1.0 / R).epsilon(1e-9));
    }
  }
}

TEST_CASE("B1 equator curvature, mean curvature and normal coordinates") {
  const auto dom = MeridianDomain::make(ConfigId::B1);
  const auto& c = dom.interface();
  const double xe = dom.equator_xi();
  CHECK(c.point(xe).r == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(c.point(xe).z) < 1e-12);
  CHECK(curvature(c, xe) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(mean_curvature(c, xe) == doctest::Approx(1.25).epsilon(1e-9));
  const Point q = normal_coords(c, xe, 0.1);
  CHECK(q.r == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(std::abs(q.z) < 1e-12);
  CHECK(normal_coords(c, 1.234, 0.0) == c.point(1.234));
  CHECK_THROWS_AS(normal_coords(c, xe, 0.5), DomainError);  // 1/max|k| = 1/2
  CHECK_THROWS_AS(normal_coords(c, xe, -0.01), DomainError);
  CHECK_THROWS_AS(mean_curvature(c, 0.0), DomainError);
}

TEST_CASE("normal coordinates keep the requested distance to the curve") {
  const auto dom = MeridianDomain::make(ConfigId::B1);
  const auto& c = dom.interface();
  for (double h : {0.01, 0.1, 0.3, 0.45}) {
    for (double f : {0.2, 0.35, 0.5, 0.8}) {
      const Point q = normal_coords(c, f * c.length(), h);
      CHECK(distance_to_curve(c, q) == doctest::Approx(h).epsilon(1e-10));
    }
  }
}

TEST_CASE("ellipse length matches an independent adaptive quadrature") {
  for (auto [a, cc] : {std::pair{2.0, 1.0}, std::pair{4.0, 1.0}, std::pair{1.5, 1.5}}) {
    const auto curve = ellipse_arclength(a, cc);
    const double ref = adaptive_simpson(
        [a, cc](double t) { return std::hypot(a * std::cos(t), cc * std::sin(t)); }, 0.0, std::numbers::pi, 1e-14);
    CHECK(std::abs(curve->length() - ref) <= 1e-8);
    CHECK(curve->point(0.0).r == 0.0);
    CHECK(curve->point(curve->length()).r == 0.0);
  }
  CHECK_THROWS_AS(ellipse_arclength(1.0, 2.0), DomainError);
  CHECK_THROWS_AS(ellipse_arclength(1.0, 0.0), DomainError);
}

TEST_CASE("unit speed and inward normal on every configuration") {
  for (ConfigId id : {ConfigId::A, ConfigId::B1, ConfigId::B2, ConfigId::C1, ConfigId::C2}) {
    const auto dom = MeridianDomain::make(id);
    const auto& c = dom.interface();
    for (int i = 0; i <= 100; ++i) {
      const double xi = c.length() * (i + 0.37) / 101.0;
      if (c.is_corner(xi)) continue;
      CHECK(std::abs(norm(c.tangent(xi)) - 1.0) <= 1e-10);
      const Point x = c.point(xi);
      const Point n = c.normal(xi);
      // A short step along the normal enters the conductor, a step against it leaves.
      const double eps = 1e-3;
      CHECK(dom.in_conductor(x + eps * n, 0.0));
      CHECK_FALSE(dom.in_conductor(x - eps * n, 0.0));
    }
  }
}

TEST_CASE("mean curvature sign: positive on B, negative on C") {
  for (ConfigId id : {ConfigId::B1, ConfigId::B2, ConfigId::C1, ConfigId::C2}) {
    const auto dom = MeridianDomain::make(id);
    const auto& c = dom.interface();
    const double sign = dom.conductor_inside() ? 1.0 : -1.0;
    for (int i = 1; i <= 50; ++i) {
      const double xi = c.length() * i / 51.0;
      CHECK(sign * mean_curvature(c, xi) > 0.0);
    }
  }
}

TEST_CASE("reparametrization is idempotent") {
  const auto dom = MeridianDomain::make(ConfigId::B2);
  const auto c = dom.interface_ptr();
  const auto again = reparametrize(c);
  CHECK(again->length() == doctest::Approx(c->length()).epsilon(1e-12));
  for (int i = 0; i < 100; ++i) {
    const double xi = c->length() * i / 99.0;
    CHECK(distance(again->point(xi), c->point(xi)) <= 1e-10);
  }
}

TEST_CASE("Frenet consistency: derivative of the tangent is curvature times normal") {
  for (ConfigId id : {ConfigId::B1, ConfigId::C2}) {
    const auto dom = MeridianDomain::make(id);
    const auto& c = dom.interface();
    for (double f : {0.1, 0.3, 0.5, 0.77}) {
      const double xi = f * c.length();
      double prev = 0.0;
      for (double h : {2e-3, 1e-3}) {
        const Point dt = (1.0 / (2.0 * h)) * (c.tangent(xi + h) - c.tangent(xi - h));
        const double err = norm(dt - curvature(c, xi) * c.normal(xi));
        CHECK(err < 1e-3);
        if (prev > 0.0) CHECK(prev / err > 3.0);
        prev = err;
      }
    }
  }
}

TEST_CASE("configuration parameters and names") {
  CHECK(parse_config("B2") == ConfigId::B2);
  CHECK(to_string(ConfigId::C1) == "C1");
  CHECK_THROWS_AS(parse_config("D"), DomainError);
  const auto a = MeridianDomain::make(ConfigId::A).cylinder();
  CHECK(a.r0 == 1.0);
  CHECK(a.l0 == 2.0);
  CHECK(a.r1 == 2.0);
  CHECK(a.l1 == 4.0);
  const auto b2 = MeridianDomain::make(ConfigId::C2).spheroid();
  CHECK(b2.a == 4.0);
  CHECK(b2.b == 8.0);
  CHECK(b2.c == 1.0);
  CHECK(b2.d == 2.0);
  const auto c1 = MeridianDomain::make(ConfigId::C1);
  CHECK(c1.in_conductor({3.0, 0.0}));
  CHECK_FALSE(c1.in_conductor({1.0, 0.0}));
  CHECK(c1.equator_radius() == 2.0);
}
