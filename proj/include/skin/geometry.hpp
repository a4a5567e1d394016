#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace skin::geometry {

/// A point or vector of the meridian half-plane, cylindrical (r, z) components.
struct Point {
  double r = 0.0;
  double z = 0.0;

  friend Point operator+(Point a, Point b) { return {a.r + b.r, a.z + b.z}; }
  friend Point operator-(Point a, Point b) { return {a.r - b.r, a.z - b.z}; }
  friend Point operator*(double s, Point a) { return {s * a.r, s * a.z}; }
  friend bool operator==(const Point&, const Point&) = default;
};

double norm(Point p);
double distance(Point a, Point b);

/// Regular parametric curve t in [t0, t1] with first and second derivatives.
struct ParametricCurve {
  std::function<Point(double)> x;
  std::function<Point(double)> dx;
  std::function<Point(double)> ddx;
  double t0 = 0.0;
  double t1 = 1.0;

  /// Same trace traversed in the opposite direction.
  ParametricCurve reversed() const;
};

/// Arc-length parametrized interface curve of the meridian domain.
///
/// The unit normal (-z', r') points into the conductor.
class InterfaceCurve {
public:
  virtual ~InterfaceCurve() = default;

  virtual double length() const = 0;
  virtual Point point(double xi) const = 0;
  /// Unit tangent (r'(xi), z'(xi)).
  virtual Point tangent(double xi) const = 0;
  virtual Point second_derivative(double xi) const = 0;
  virtual bool is_corner(double /*xi*/) const { return false; }
  /// Supremum of |k| over the curve (0 for piecewise-straight curves).
  virtual double max_abs_curvature() const = 0;

  Point normal(double xi) const;
};

/// Numerical arc-length reparametrization of a smooth parametric curve.
class ArcLengthCurve final : public InterfaceCurve {
public:
  explicit ArcLengthCurve(ParametricCurve curve);

  double length() const override { return length_; }
  Point point(double xi) const override;
  Point tangent(double xi) const override;
  Point second_derivative(double xi) const override;
  double max_abs_curvature() const override { return max_curvature_; }

  /// Original parameter t with arc length xi measured from t0.
  double parameter_at(double xi) const;
  /// Arc length from t0 to parameter t.
  double arclength_at(double t) const;

  const ParametricCurve& parametric() const noexcept { return curve_; }

private:
  double speed(double t) const;

  ParametricCurve curve_;
  std::vector<double> knots_t_;
  std::vector<double> knots_s_;
  double length_ = 0.0;
  double max_curvature_ = 0.0;
};

/// Chain of straight segments; interior vertices are corner points.
class PolylineCurve final : public InterfaceCurve {
public:
  explicit PolylineCurve(std::vector<Point> vertices);

  double length() const override { return cumulative_.back(); }
  Point point(double xi) const override;
  Point tangent(double xi) const override;
  Point second_derivative(double xi) const override;
  bool is_corner(double xi) const override;
  double max_abs_curvature() const override { return 0.0; }

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  /// Arc-length positions of the interior vertices.
  std::vector<double> corner_positions() const;

private:
  std::size_t segment_of(double xi) const;

  std::vector<Point> vertices_;
  std::vector<double> cumulative_;
};

/// Curvature k = r' z'' - z' r''. Throws CornerPointError at a corner.
double curvature(const InterfaceCurve& curve, double xi);

/// Mean curvature of the surface of revolution, (k + z'/r)/2.
/// Throws DomainError on the axis (r = 0) and CornerPointError at corners.
double mean_curvature(const InterfaceCurve& curve, double xi);

/// Point at signed normal distance h from curve(xi): (r - h z', z + h r').
/// Requires 0 <= h < 1/max|k|.
Point normal_coords(const InterfaceCurve& curve, double xi, double h);

/// Half ellipse r = a sin(phi), z = -c cos(phi), phi in [0, pi], traversed from the
/// lower axis point to the upper one, so that the normal points inside the ellipse.
std::shared_ptr<ArcLengthCurve> ellipse_arclength(double a, double c);

/// Arc-length reparametrization of an existing curve (idempotent up to quadrature error).
std::shared_ptr<ArcLengthCurve> reparametrize(const std::shared_ptr<const InterfaceCurve>& curve);

enum class ConfigId { A, B1, B2, C1, C2 };

std::string_view to_string(ConfigId id);
/// Parses "A", "B1", ...; throws DomainError for unknown names.
ConfigId parse_config(std::string_view name);

struct CylinderParams {
  double r0 = 1.0;  // conductor radius
  double l0 = 2.0;  // conductor length
  double r1 = 2.0;  // domain radius
  double l1 = 4.0;  // domain length
};

struct SpheroidParams {
  double a = 2.0;  // interface semi-axis along r
  double b = 4.0;  // outer semi-axis along r
  double c = 1.0;  // interface semi-axis along z
  double d = 2.0;  // outer semi-axis along z
};

/// Meridian cross-section of one of the benchmark configurations.
class MeridianDomain {
public:
  static MeridianDomain make(ConfigId id);

  ConfigId id() const noexcept { return id_; }
  bool is_cylindrical() const noexcept { return id_ == ConfigId::A; }
  /// True for A and B (conductor enclosed by the interface), false for C.
  bool conductor_inside() const noexcept;

  const CylinderParams& cylinder() const;
  const SpheroidParams& spheroid() const;

  /// Interface oriented with its normal pointing into the conductor.
  const InterfaceCurve& interface() const noexcept { return *interface_; }
  std::shared_ptr<const InterfaceCurve> interface_ptr() const noexcept { return interface_; }

  bool contains(Point p, double tol = 1e-12) const;
  /// Closed conductor region.
  bool in_conductor(Point p, double tol = 1e-12) const;

  double area() const;
  double conductor_area() const;

  /// Interface radius on the plane z = 0.
  double equator_radius() const;
  /// Arc-length position of the interface point on z = 0.
  double equator_xi() const;

private:
  MeridianDomain(ConfigId id, std::shared_ptr<const InterfaceCurve> interface);

  bool inside_interface(Point p, double tol) const;

  ConfigId id_;
  std::optional<CylinderParams> cylinder_;
  std::optional<SpheroidParams> spheroid_;
  std::shared_ptr<const InterfaceCurve> interface_;
};

}  // namespace skin::geometry
