#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skin/linsolve.hpp"
#include "skin/mesh.hpp"
#include "skin/physics.hpp"

namespace skin::fem {

using cplx = std::complex<double>;
using geometry::Point;
using mesh::QuadMesh;

constexpr int kMinDegree = 1;
constexpr int kMaxDegree = 20;

/// Tensor Lagrange basis of Q_p on the Gauss-Lobatto grid of [0,1]^2.
/// Function (i, j) has local index i + (p+1) j.
class ShapeBasis {
public:
  explicit ShapeBasis(int p);

  int degree() const noexcept { return p_; }
  int size() const noexcept { return (p_ + 1) * (p_ + 1); }
  const std::vector<double>& nodes() const noexcept;

  void values(double u, double v, double* out) const;
  void gradients(double u, double v, double* du, double* dv) const;

private:
  int p_;
};

ShapeBasis shape_basis(int p);

/// Continuous Q_p space over a quadrilateral mesh with Dirichlet constraints on
/// the outer boundary and the symmetry axis.
class FeSpace {
public:
  FeSpace(std::shared_ptr<const QuadMesh> mesh, int p);

  const QuadMesh& mesh() const noexcept { return *mesh_; }
  std::shared_ptr<const QuadMesh> mesh_ptr() const noexcept { return mesh_; }
  int degree() const noexcept { return p_; }
  std::size_t dof_count() const noexcept { return dof_points_.size(); }
  std::size_t local_size() const noexcept { return static_cast<std::size_t>((p_ + 1) * (p_ + 1)); }

  /// Global DOF of local tensor index `local` in element e.
  std::size_t dof(std::size_t e, std::size_t local) const { return element_dofs_[e * local_size() + local]; }
  const std::vector<std::size_t>& element_dofs() const noexcept { return element_dofs_; }

  const std::vector<Point>& dof_points() const noexcept { return dof_points_; }
  bool constrained(std::size_t dof) const { return constrained_[dof] != 0; }
  bool on_axis(std::size_t dof) const { return axis_[dof] != 0; }
  std::size_t constrained_count() const noexcept;

  /// Same space with DOF d renamed to perm[d].
  FeSpace permuted(const std::vector<std::size_t>& perm) const;

private:
  FeSpace() = default;

  std::shared_ptr<const QuadMesh> mesh_;
  int p_ = 1;
  std::vector<std::size_t> element_dofs_;
  std::vector<Point> dof_points_;
  std::vector<char> constrained_;
  std::vector<char> axis_;
};

/// Coefficients of a(H, w) = int (1/eps)(dz H dz w + (dr H + H/r)(dr w + w/r)) r - kappa^2 int H w r.
struct FormCoefficients {
  cplx inv_eps_conductor{1.0, 0.0};
  cplx inv_eps_dielectric{1.0, 0.0};
  double kappa2 = 0.0;

  static FormCoefficients from_params(const physics::PhysicalParams& params);
  /// eps = 1 everywhere with the given wavenumber.
  static FormCoefficients uniform(double kappa);
};

/// Dirichlet data g on the outer boundary and an interior density f, both optional.
/// f may jump across the zero set of `level`; elements crossed by it are integrated
/// on a subdivided rule.
struct SourceSpec {
  std::function<double(Point)> dirichlet;
  std::function<double(Point)> density;
  std::function<double(Point)> level;

  /// g = r on the outer boundary (configurations A and B).
  static SourceSpec boundary_data_r();
  /// f = 100 on r^2/4 + z^2 <= 0.8, g = 0 (configuration C).
  static SourceSpec interior_ball();
  static SourceSpec for_config(geometry::ConfigId id);
};

struct ElementMatrices {
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd mass;
};

/// Real r-weighted stiffness and mass of element e, exactly symmetric.
ElementMatrices element_matrices(const FeSpace& space, std::size_t e);
/// Load int f phi r over element e.
Eigen::VectorXd element_load(const FeSpace& space, std::size_t e, const SourceSpec& source);

/// Unconstrained global matrix of a(., .).
linsolve::SparseComplexMatrix assemble_form(const FeSpace& space, const FormCoefficients& coeffs,
                                            int threads = 1);
/// Unconstrained load vector int f phi_i r.
linsolve::Vector assemble_load(const FeSpace& space, const SourceSpec& source);
/// Interpolated Dirichlet values: g at outer-boundary DOFs, 0 on the axis and elsewhere.
linsolve::Vector dirichlet_values(const FeSpace& space, const SourceSpec& source);

struct LinearSystem {
  linsolve::SparseComplexMatrix matrix;
  linsolve::Vector rhs;
};

/// Constrained system: identity rows and columns at constrained DOFs, with the
/// Dirichlet lifting moved to the right-hand side.
LinearSystem assemble(const FeSpace& space, const FormCoefficients& coeffs, const SourceSpec& source,
                      int threads = 1);
LinearSystem assemble(const FeSpace& space, const physics::PhysicalParams& params, const SourceSpec& source,
                      int threads = 1);

struct FieldInfo {
  double sigma = 0.0;
  int degree = 0;
  std::string mesh_id;
  /// Relative residual of the final sparse solve.
  double residual = 0.0;
};

/// Located point: element and reference coordinates.
struct ReferencePoint {
  std::size_t element = 0;
  double u = 0.0;
  double v = 0.0;
};

class DiscreteField {
public:
  DiscreteField(std::shared_ptr<const FeSpace> space, linsolve::Vector coefficients, FieldInfo info = {});

  const FeSpace& space() const noexcept { return *space_; }
  std::shared_ptr<const FeSpace> space_ptr() const noexcept { return space_; }
  const linsolve::Vector& coefficients() const noexcept { return coeffs_; }
  const FieldInfo& info() const noexcept { return info_; }

  cplx evaluate_in_element(std::size_t e, double u, double v) const;
  cplx evaluate(Point x) const;

private:
  std::shared_ptr<const FeSpace> space_;
  linsolve::Vector coeffs_;
  FieldInfo info_;
};

/// Element containing x and its reference coordinates, by damped Newton on the
/// geometric map. Throws PointNotFoundError or GeometryError.
ReferencePoint locate(const QuadMesh& mesh, Point x);
/// Reference coordinates of x in element e; false if Newton does not converge.
bool invert_map(const QuadMesh& mesh, std::size_t e, Point x, double& u, double& v);

/// Nodal interpolant of a function.
DiscreteField interpolate(std::shared_ptr<const FeSpace> space, const std::function<cplx(Point)>& f);

/// Solves a constrained system by sparse LU.
DiscreteField solve(std::shared_ptr<const FeSpace> space, const LinearSystem& system, FieldInfo info = {});

struct SolveOptions {
  int threads = 1;
  /// Eliminate element-interior DOFs before the sparse factorization.
  bool condense = true;
};

/// Assembles and solves the problem for the given coefficients and source.
DiscreteField solve_problem(std::shared_ptr<const FeSpace> space, const FormCoefficients& coeffs,
                            const SourceSpec& source, const SolveOptions& options = {}, FieldInfo info = {});
DiscreteField solve_problem(std::shared_ptr<const FeSpace> space, const physics::PhysicalParams& params,
                            const SourceSpec& source, const SolveOptions& options = {});

/// Plain-text "FIELD v1" export.
void write_field(std::ostream& out, const DiscreteField& field);

}  // namespace skin::fem
