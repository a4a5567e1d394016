#include "skin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "skin/errors.hpp"

namespace skin::geometry {

namespace {

constexpr int kKnotCount = 128;
constexpr int kCurvatureSamples = 1024;

double cross(Point a, Point b) { return a.r * b.z - a.z * b.r; }
double dot(Point a, Point b) { return a.r * b.r + a.z * b.z; }

// sin and cos on [0, pi] that are exact at both endpoints, so that axis points
// of an ellipse land on r = 0 without rounding residue.
double sin_half_turn(double phi) {
  return phi <= 0.5 * std::numbers::pi ? std::sin(phi) : std::sin(std::numbers::pi - phi);
}
double cos_half_turn(double phi) {
  return phi <= 0.5 * std::numbers::pi ? std::cos(phi) : -std::cos(std::numbers::pi - phi);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  // Knot spacing is far below the analyticity radius of the speed, so a fixed rule is exact to rounding.
  return boost::math::quadrature::gauss<double, 30>::integrate(f, a, b);
}

}  // namespace

double norm(Point p) { return std::hypot(p.r, p.z); }
double distance(Point a, Point b) { return norm(a - b); }

ParametricCurve ParametricCurve::reversed() const {
  ParametricCurve rev;
  const double a = t0;
  const double b = t1;
  auto f = x;
  auto df = dx;
  auto ddf = ddx;
  // Evaluate endpoints without forming a + b - t so they stay exact.
  auto flip = [a, b](double t) {
    if (t <= a) return b;
    if (t >= b) return a;
    return a + b - t;
  };
  rev.x = [f, flip](double t) { return f(flip(t)); };
  rev.dx = [df, flip](double t) { return -1.0 * df(flip(t)); };
  rev.ddx = [ddf, flip](double t) { return ddf(flip(t)); };
  rev.t0 = a;
  rev.t1 = b;
  return rev;
}

Point InterfaceCurve::normal(double xi) const {
  const Point t = tangent(xi);
  return {-t.z, t.r};
}

// ---------------------------------------------------------------------------
// ArcLengthCurve

ArcLengthCurve::ArcLengthCurve(ParametricCurve curve) : curve_(std::move(curve)) {
  if (!(curve_.t1 > curve_.t0)) throw DomainError("parametric curve needs t1 > t0");
  knots_t_.resize(kKnotCount + 1);
  knots_s_.resize(kKnotCount + 1);
  const double span = curve_.t1 - curve_.t0;
  knots_t_[0] = curve_.t0;
  knots_s_[0] = 0.0;
  auto sp = [this](double t) { return speed(t); };
  for (int k = 1; k <= kKnotCount; ++k) {
    knots_t_[k] = k == kKnotCount ? curve_.t1 : curve_.t0 + span * k / kKnotCount;
    knots_s_[k] = knots_s_[k - 1] + integrate(sp, knots_t_[k - 1], knots_t_[k]);
  }
  length_ = knots_s_.back();

  for (int k = 0; k <= kCurvatureSamples; ++k) {
    const double t = curve_.t0 + span * k / kCurvatureSamples;
    const Point d1 = curve_.dx(t);
    const double s = norm(d1);
    max_curvature_ = std::max(max_curvature_, std::abs(cross(d1, curve_.ddx(t))) / (s * s * s));
  }
}

double ArcLengthCurve::speed(double t) const { return norm(curve_.dx(t)); }

double ArcLengthCurve::arclength_at(double t) const {
  if (t <= curve_.t0) return 0.0;
  if (t >= curve_.t1) return length_;
  const auto it = std::upper_bound(knots_t_.begin(), knots_t_.end(), t);
  const auto k = static_cast<std::size_t>(std::distance(knots_t_.begin(), it)) - 1;
  auto sp = [this](double s) { return speed(s); };
  return knots_s_[k] + integrate(sp, knots_t_[k], t);
}

double ArcLengthCurve::parameter_at(double xi) const {
  if (xi <= 0.0) return curve_.t0;
  if (xi >= length_) return curve_.t1;
  const auto it = std::upper_bound(knots_s_.begin(), knots_s_.end(), xi);
  const auto k = static_cast<std::size_t>(std::distance(knots_s_.begin(), it)) - 1;
  double lo = knots_t_[k];
  double hi = knots_t_[k + 1];
  if (xi == knots_s_[k]) return lo;

  auto sp = [this](double s) { return speed(s); };
  double t = lo + (hi - lo) * (xi - knots_s_[k]) / (knots_s_[k + 1] - knots_s_[k]);
  for (int iter = 0; iter < 60; ++iter) {
    const double residual = knots_s_[k] + integrate(sp, knots_t_[k], t) - xi;
    if (residual > 0.0) hi = t; else lo = t;
    double next = t - residual / speed(t);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-16 * (1.0 + std::abs(t))) return next;
    t = next;
  }
  return t;
}

Point ArcLengthCurve::point(double xi) const { return curve_.x(parameter_at(xi)); }

Point ArcLengthCurve::tangent(double xi) const {
  const Point d1 = curve_.dx(parameter_at(xi));
  return (1.0 / norm(d1)) * d1;
}

Point ArcLengthCurve::second_derivative(double xi) const {
  const double t = parameter_at(xi);
  const Point d1 = curve_.dx(t);
  const Point d2 = curve_.ddx(t);
  const double s2 = dot(d1, d1);
  const Point unit = (1.0 / std::sqrt(s2)) * d1;
  return (1.0 / s2) * (d2 - dot(d2, unit) * unit);
}

// ---------------------------------------------------------------------------
// PolylineCurve

PolylineCurve::PolylineCurve(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 2) throw DomainError("polyline needs at least two vertices");
  cumulative_.assign(1, 0.0);
  for (std::size_t i = 1; i < vertices_.size(); ++i) {
    const double len = distance(vertices_[i - 1], vertices_[i]);
    if (!(len > 0.0)) throw DomainError("polyline has a zero-length segment");
    cumulative_.push_back(cumulative_.back() + len);
  }
}

std::size_t PolylineCurve::segment_of(double xi) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), xi);
  const auto idx = static_cast<std::ptrdiff_t>(std::distance(cumulative_.begin(), it)) - 1;
  return static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(vertices_.size()) - 2));
}

Point PolylineCurve::point(double xi) const {
  const std::size_t k = segment_of(xi);
  const double len = cumulative_[k + 1] - cumulative_[k];
  const double s = (xi - cumulative_[k]) / len;
  if (s <= 0.0) return vertices_[k];
  if (s >= 1.0) return vertices_[k + 1];
  return vertices_[k] + s * (vertices_[k + 1] - vertices_[k]);
}

Point PolylineCurve::tangent(double xi) const {
  const std::size_t k = segment_of(xi);
  const Point d = vertices_[k + 1] - vertices_[k];
  return (1.0 / norm(d)) * d;
}

Point PolylineCurve::second_derivative(double /*xi*/) const { return {0.0, 0.0}; }

bool PolylineCurve::is_corner(double xi) const {
  const double tol = 1e-12 * length();
  for (std::size_t k = 1; k + 1 < cumulative_.size(); ++k) {
    if (std::abs(xi - cumulative_[k]) <= tol) return true;
  }
  return false;
}

std::vector<double> PolylineCurve::corner_positions() const {
  return {cumulative_.begin() + 1, cumulative_.end() - 1};
}

// ---------------------------------------------------------------------------
// Free functions

double curvature(const InterfaceCurve& curve, double xi) {
  if (curve.is_corner(xi)) throw CornerPointError(xi);
  return cross(curve.tangent(xi), curve.second_derivative(xi));
}

double mean_curvature(const InterfaceCurve& curve, double xi) {
  const double k = curvature(curve, xi);
  const Point p = curve.point(xi);
  if (!(p.r > 0.0)) throw DomainError("mean curvature undefined on the axis r = 0");
  return 0.5 * (k + curve.tangent(xi).z / p.r);
}

Point normal_coords(const InterfaceCurve& curve, double xi, double h) {
  const double kmax = curve.max_abs_curvature();
  if (!(h >= 0.0) || (kmax > 0.0 && !(h < 1.0 / kmax))) {
    throw DomainError("normal distance outside the tubular neighbourhood: h=" + std::to_string(h));
  }
  const Point x = curve.point(xi);
  const Point t = curve.tangent(xi);
  return {x.r - h * t.z, x.z + h * t.r};
}

std::shared_ptr<ArcLengthCurve> ellipse_arclength(double a, double c) {
  if (!(c > 0.0) || !(a >= c)) throw DomainError("ellipse requires a >= c > 0");
  ParametricCurve pc;
  pc.x = [a, c](double phi) { return Point{a * sin_half_turn(phi), -c * cos_half_turn(phi)}; };
  pc.dx = [a, c](double phi) { return Point{a * std::cos(phi), c * std::sin(phi)}; };
  pc.ddx = [a, c](double phi) { return Point{-a * std::sin(phi), c * std::cos(phi)}; };
  pc.t0 = 0.0;
  pc.t1 = std::numbers::pi;
  return std::make_shared<ArcLengthCurve>(std::move(pc));
}

std::shared_ptr<ArcLengthCurve> reparametrize(const std::shared_ptr<const InterfaceCurve>& curve) {
  ParametricCurve pc;
  pc.x = [curve](double s) { return curve->point(s); };
  pc.dx = [curve](double s) { return curve->tangent(s); };
  pc.ddx = [curve](double s) { return curve->second_derivative(s); };
  pc.t0 = 0.0;
  pc.t1 = curve->length();
  return std::make_shared<ArcLengthCurve>(std::move(pc));
}

// ---------------------------------------------------------------------------
// MeridianDomain

std::string_view to_string(ConfigId id) {
  switch (id) {
    case ConfigId::A: return "A";
    case ConfigId::B1: return "B1";
    case ConfigId::B2: return "B2";
    case ConfigId::C1: return "C1";
    case ConfigId::C2: return "C2";
  }
  return "?";
}

ConfigId parse_config(std::string_view name) {
  for (ConfigId id : {ConfigId::A, ConfigId::B1, ConfigId::B2, ConfigId::C1, ConfigId::C2}) {
    if (name == to_string(id)) return id;
  }
  throw DomainError("unknown configuration '" + std::string(name) + "'");
}

MeridianDomain::MeridianDomain(ConfigId id, std::shared_ptr<const InterfaceCurve> interface)
    : id_(id), interface_(std::move(interface)) {}

MeridianDomain MeridianDomain::make(ConfigId id) {
  if (id == ConfigId::A) {
    const CylinderParams cp{};
    const double h = 0.5 * cp.l0;
    auto curve = std::make_shared<PolylineCurve>(
        std::vector<Point>{{0.0, -h}, {cp.r0, -h}, {cp.r0, h}, {0.0, h}});
    MeridianDomain dom(id, std::move(curve));
    dom.cylinder_ = cp;
    return dom;
  }
  SpheroidParams sp{};
  if (id == ConfigId::B2 || id == ConfigId::C2) {
    sp.a = 4.0;
    sp.b = 8.0;
  }
  std::shared_ptr<const InterfaceCurve> curve;
  if (id == ConfigId::B1 || id == ConfigId::B2) {
    curve = ellipse_arclength(sp.a, sp.c);
  } else {
    // Conductor outside the inner ellipse: traverse top to bottom to flip the normal.
    curve = std::make_shared<ArcLengthCurve>(ellipse_arclength(sp.a, sp.c)->parametric().reversed());
  }
  MeridianDomain dom(id, std::move(curve));
  dom.spheroid_ = sp;
  return dom;
}

bool MeridianDomain::conductor_inside() const noexcept {
  return id_ == ConfigId::A || id_ == ConfigId::B1 || id_ == ConfigId::B2;
}

const CylinderParams& MeridianDomain::cylinder() const {
  if (!cylinder_) throw DomainError("not a cylindrical configuration");
  return *cylinder_;
}

const SpheroidParams& MeridianDomain::spheroid() const {
  if (!spheroid_) throw DomainError("not a spheroidal configuration");
  return *spheroid_;
}

bool MeridianDomain::contains(Point p, double tol) const {
  if (p.r < -tol) return false;
  if (cylinder_) {
    return p.r <= cylinder_->r1 + tol && std::abs(p.z) <= 0.5 * cylinder_->l1 + tol;
  }
  const auto& s = *spheroid_;
  return (p.r * p.r) / (s.b * s.b) + (p.z * p.z) / (s.d * s.d) <= 1.0 + tol;
}

bool MeridianDomain::inside_interface(Point p, double tol) const {
  if (cylinder_) {
    return p.r >= -tol && p.r <= cylinder_->r0 + tol && std::abs(p.z) <= 0.5 * cylinder_->l0 + tol;
  }
  const auto& s = *spheroid_;
  return p.r >= -tol && (p.r * p.r) / (s.a * s.a) + (p.z * p.z) / (s.c * s.c) <= 1.0 + tol;
}

bool MeridianDomain::in_conductor(Point p, double tol) const {
  if (conductor_inside()) return inside_interface(p, tol);
  if (!contains(p, tol)) return false;
  const auto& s = *spheroid_;
  return (p.r * p.r) / (s.a * s.a) + (p.z * p.z) / (s.c * s.c) >= 1.0 - tol;
}

double MeridianDomain::area() const {
  if (cylinder_) return cylinder_->r1 * cylinder_->l1;
  return 0.5 * std::numbers::pi * spheroid_->b * spheroid_->d;
}

double MeridianDomain::conductor_area() const {
  if (cylinder_) return cylinder_->r0 * cylinder_->l0;
  const double inner = 0.5 * std::numbers::pi * spheroid_->a * spheroid_->c;
  return conductor_inside() ? inner : area() - inner;
}

double MeridianDomain::equator_radius() const {
  return cylinder_ ? cylinder_->r0 : spheroid_->a;
}

double MeridianDomain::equator_xi() const { return 0.5 * interface_->length(); }

}  // namespace skin::geometry
