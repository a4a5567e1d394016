#include "skin/fem.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "skin/errors.hpp"
#include "skin/polynomial.hpp"

namespace skin::fem {

namespace {

void check_degree(int p) {
  if (p < kMinDegree || p > kMaxDegree) {
    throw DomainError("polynomial degree " + std::to_string(p) + " outside [1, 20]");
  }
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be written to
// per-index slots so the outcome does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Basis values and reference derivatives at the tensor quadrature points.
struct ReferenceTables {
  std::vector<double> u;  // quadrature abscissa per point
  std::vector<double> v;
  std::vector<double> weight;
  Eigen::MatrixXd phi;  // points x basis
  Eigen::MatrixXd phi_u;
  Eigen::MatrixXd phi_v;
};

ReferenceTables make_tables(int p, const poly::Rule& rule) {
  const auto& basis = poly::lobatto_basis(p);
  const int n1 = p + 1;
  const auto nq = static_cast<Eigen::Index>(rule.nodes.size());
  Eigen::MatrixXd bt(nq, n1), dt(nq, n1);
  for (Eigen::Index q = 0; q < nq; ++q) {
    std::vector<double> vals(static_cast<std::size_t>(n1)), ders(static_cast<std::size_t>(n1));
    basis.eval(rule.nodes[static_cast<std::size_t>(q)], vals.data(), ders.data());
    for (int i = 0; i < n1; ++i) {
      bt(q, i) = vals[static_cast<std::size_t>(i)];
      dt(q, i) = ders[static_cast<std::size_t>(i)];
    }
  }
  ReferenceTables t;
  const Eigen::Index npts = nq * nq;
  const Eigen::Index nb = static_cast<Eigen::Index>(n1) * n1;
  t.phi.resize(npts, nb);
  t.phi_u.resize(npts, nb);
  t.phi_v.resize(npts, nb);
  for (Eigen::Index qj = 0; qj < nq; ++qj) {
    for (Eigen::Index qi = 0; qi < nq; ++qi) {
      const Eigen::Index q = qi + nq * qj;
      t.u.push_back(rule.nodes[static_cast<std::size_t>(qi)]);
      t.v.push_back(rule.nodes[static_cast<std::size_t>(qj)]);
      t.weight.push_back(rule.weights[static_cast<std::size_t>(qi)] * rule.weights[static_cast<std::size_t>(qj)]);
      for (int j = 0; j < n1; ++j) {
        for (int i = 0; i < n1; ++i) {
          const Eigen::Index a = i + n1 * j;
          t.phi(q, a) = bt(qi, i) * bt(qj, j);
          t.phi_u(q, a) = dt(qi, i) * bt(qj, j);
          t.phi_v(q, a) = bt(qi, i) * dt(qj, j);
        }
      }
    }
  }
  return t;
}

const ReferenceTables& tables_for(int p) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<ReferenceTables>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[p];
  if (!slot) slot = std::make_unique<ReferenceTables>(make_tables(p, poly::gauss_legendre(p + 3)));
  return *slot;
}

std::vector<int> boundary_local_indices(int p) {
  std::vector<int> idx;
  for (int j = 0; j <= p; ++j) {
    for (int i = 0; i <= p; ++i) {
      if (i == 0 || j == 0 || i == p || j == p) idx.push_back(i + (p + 1) * j);
    }
  }
  return idx;
}

std::vector<int> interior_local_indices(int p) {
  std::vector<int> idx;
  for (int j = 1; j < p; ++j) {
    for (int i = 1; i < p; ++i) idx.push_back(i + (p + 1) * j);
  }
  return idx;
}

cplx inverse_permittivity(const FormCoefficients& c, mesh::Subdomain sd) {
  return sd == mesh::Subdomain::Conductor ? c.inv_eps_conductor : c.inv_eps_dielectric;
}

Eigen::MatrixXcd element_operator(const ElementMatrices& m, cplx inv_eps, double kappa2) {
  Eigen::MatrixXcd k = inv_eps * m.stiffness.cast<cplx>();
  k -= cplx(kappa2, 0.0) * m.mass.cast<cplx>();
  return k;
}

// Identity rows and columns at constrained DOFs, lifting moved to the rhs.
LinearSystem constrain(const linsolve::SparseMatrix& a, linsolve::Vector b, const std::vector<char>& mask,
                       const linsolve::Vector& values) {
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Triplet<cplx, int>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros()));
  for (int col = 0; col < a.outerSize(); ++col) {
    const bool col_fixed = mask[static_cast<std::size_t>(col)] != 0;
    for (linsolve::SparseMatrix::InnerIterator it(a, col); it; ++it) {
      const bool row_fixed = mask[static_cast<std::size_t>(it.row())] != 0;
      if (row_fixed) continue;
      if (col_fixed) {
        b[it.row()] -= it.value() * values[col];
        continue;
      }
      triplets.emplace_back(static_cast<int>(it.row()), col, it.value());
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask[static_cast<std::size_t>(i)] != 0) {
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), cplx(1.0, 0.0));
      b[i] = values[i];
    }
  }
  linsolve::SparseComplexMatrix m(n);
  m.reserve(triplets.size());
  for (const auto& t : triplets) m.add(t.row(), t.col(), t.value());
  m.set_symmetric(true);
  m.finalize();
  return {std::move(m), std::move(b)};
}

}  // namespace

// ---------------------------------------------------------------------------
// ShapeBasis

ShapeBasis::ShapeBasis(int p) : p_(p) { check_degree(p); }

const std::vector<double>& ShapeBasis::nodes() const noexcept { return poly::lobatto_basis(p_).nodes(); }

void ShapeBasis::values(double u, double v, double* out) const {
  const auto& b = poly::lobatto_basis(p_);
  const int n1 = p_ + 1;
  std::vector<double> bu(static_cast<std::size_t>(n1)), bv(static_cast<std::size_t>(n1));
  b.eval(u, bu.data());
  b.eval(v, bv.data());
  for (int j = 0; j < n1; ++j) {
    for (int i = 0; i < n1; ++i) out[i + n1 * j] = bu[static_cast<std::size_t>(i)] * bv[static_cast<std::size_t>(j)];
  }
}

void ShapeBasis::gradients(double u, double v, double* du, double* dv) const {
  const auto& b = poly::lobatto_basis(p_);
  const auto n1 = static_cast<std::size_t>(p_ + 1);
  std::vector<double> bu(n1), bv(n1), du1(n1), dv1(n1);
  b.eval(u, bu.data(), du1.data());
  b.eval(v, bv.data(), dv1.data());
  for (std::size_t j = 0; j < n1; ++j) {
    for (std::size_t i = 0; i < n1; ++i) {
      du[i + n1 * j] = du1[i] * bv[j];
      dv[i + n1 * j] = bu[i] * dv1[j];
    }
  }
}

ShapeBasis shape_basis(int p) { return ShapeBasis(p); }

// ---------------------------------------------------------------------------
// FeSpace

FeSpace::FeSpace(std::shared_ptr<const QuadMesh> mesh, int p) : mesh_(std::move(mesh)), p_(p) {
  check_degree(p);
  if (!mesh_) throw DomainError("null mesh");
  const auto& m = *mesh_;
  const auto& x = poly::gauss_lobatto_points(p);
  const int n1 = p + 1;
  const std::size_t nloc = local_size();
  element_dofs_.resize(m.element_count() * nloc);

  // Shared entities: kind 0 vertex (node id), kind 1 edge interior (sorted corner pair, position).
  std::map<std::tuple<int, std::size_t, std::size_t, int>, std::size_t> entity;
  auto new_dof = [&](std::size_t e, int i, int j) {
    dof_points_.push_back(m.map(e, x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)]));
    return dof_points_.size() - 1;
  };

  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto c = m.corners(e);
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n1; ++i) {
        const bool ei = i == 0 || i == p;
        const bool ej = j == 0 || j == p;
        std::size_t d = 0;
        if (ei && ej) {
          const int slot = (i == 0 ? (j == 0 ? 0 : 3) : (j == 0 ? 1 : 2));
          const auto key = std::make_tuple(0, c[static_cast<std::size_t>(slot)], std::size_t{0}, 0);
          const auto it = entity.find(key);
          d = it != entity.end() ? it->second : (entity[key] = new_dof(e, i, j));
        } else if (ei || ej) {
          int face = 0;
          int pos = 0;
          if (j == 0) {
            face = 0;
            pos = i;
          } else if (i == p) {
            face = 1;
            pos = j;
          } else if (j == p) {
            face = 2;
            pos = p - i;
          } else {
            face = 3;
            pos = p - j;
          }
          const std::size_t a = c[static_cast<std::size_t>(face)];
          const std::size_t b = c[static_cast<std::size_t>((face + 1) % 4)];
          const int canonical = a < b ? pos : p - pos;
          const auto key = std::make_tuple(1, std::min(a, b), std::max(a, b), canonical);
          const auto it = entity.find(key);
          d = it != entity.end() ? it->second : (entity[key] = new_dof(e, i, j));
        } else {
          d = new_dof(e, i, j);
        }
        element_dofs_[e * nloc + static_cast<std::size_t>(i + n1 * j)] = d;
      }
    }
  }

  constrained_.assign(dof_points_.size(), 0);
  axis_.assign(dof_points_.size(), 0);
  for (const auto& f : m.facets) {
    if (f.tag == mesh::BoundaryTag::Interface) continue;
    for (int li : QuadMesh::face_local_indices(p, f.face)) {
      const std::size_t d = dof(f.element, static_cast<std::size_t>(li));
      constrained_[d] = 1;
      if (f.tag == mesh::BoundaryTag::Axis) axis_[d] = 1;
    }
  }
}

std::size_t FeSpace::constrained_count() const noexcept {
  return static_cast<std::size_t>(std::count(constrained_.begin(), constrained_.end(), 1));
}

FeSpace FeSpace::permuted(const std::vector<std::size_t>& perm) const {
  const std::size_t n = dof_count();
  if (perm.size() != n) throw DomainError("permutation size does not match the DOF count");
  std::vector<char> seen(n, 0);
  for (auto q : perm) {
    if (q >= n || seen[q]) throw DomainError("not a permutation");
    seen[q] = 1;
  }
  FeSpace s;
  s.mesh_ = mesh_;
  s.p_ = p_;
  s.element_dofs_.resize(element_dofs_.size());
  for (std::size_t k = 0; k < element_dofs_.size(); ++k) s.element_dofs_[k] = perm[element_dofs_[k]];
  s.dof_points_.resize(n);
  s.constrained_.resize(n);
  s.axis_.resize(n);
  for (std::size_t d = 0; d < n; ++d) {
    s.dof_points_[perm[d]] = dof_points_[d];
    s.constrained_[perm[d]] = constrained_[d];
    s.axis_[perm[d]] = axis_[d];
  }
  return s;
}

// ---------------------------------------------------------------------------
// Coefficients and sources

FormCoefficients FormCoefficients::from_params(const physics::PhysicalParams& params) {
  FormCoefficients c;
  c.inv_eps_conductor = 1.0 / params.conductor_permittivity();
  c.inv_eps_dielectric = 1.0;
  c.kappa2 = params.kappa() * params.kappa();
  return c;
}

FormCoefficients FormCoefficients::uniform(double kappa) {
  FormCoefficients c;
  c.kappa2 = kappa * kappa;
  return c;
}

SourceSpec SourceSpec::boundary_data_r() {
  SourceSpec s;
  s.dirichlet = [](Point x) { return x.r; };
  return s;
}

SourceSpec SourceSpec::interior_ball() {
  SourceSpec s;
  s.level = [](Point x) { return 0.25 * x.r * x.r + x.z * x.z - 0.8; };
  s.density = [](Point x) { return 0.25 * x.r * x.r + x.z * x.z <= 0.8 ? 100.0 : 0.0; };
  return s;
}

SourceSpec SourceSpec::for_config(geometry::ConfigId id) {
  using geometry::ConfigId;
  return (id == ConfigId::C1 || id == ConfigId::C2) ? interior_ball() : boundary_data_r();
}

// ---------------------------------------------------------------------------
// Element integrals

ElementMatrices element_matrices(const FeSpace& space, std::size_t e) {
  const auto& m = space.mesh();
  const auto& t = tables_for(space.degree());
  const auto npts = static_cast<Eigen::Index>(t.weight.size());
  const auto nb = static_cast<Eigen::Index>(space.local_size());
  Eigen::MatrixXd ar(npts, nb), az(npts, nb), am(npts, nb);
  for (Eigen::Index q = 0; q < npts; ++q) {
    const auto sq = static_cast<std::size_t>(q);
    const auto jac = m.jacobian(e, t.u[sq], t.v[sq]);
    const double det = jac.det();
    if (!(det > 0.0)) throw InternalError("non-positive Jacobian in element " + std::to_string(e));
    const double r = m.map(e, t.u[sq], t.v[sq]).r;
    if (!(r > 0.0)) throw InternalError("quadrature point on the axis in element " + std::to_string(e));
    const double sw = std::sqrt(t.weight[sq] * det * r);
    const double inv = 1.0 / det;
    for (Eigen::Index a = 0; a < nb; ++a) {
      const double pu = t.phi_u(q, a);
      const double pv = t.phi_v(q, a);
      const double ph = t.phi(q, a);
      ar(q, a) = sw * ((jac.dz_dv * pu - jac.dz_du * pv) * inv + ph / r);
      az(q, a) = sw * ((-jac.dr_dv * pu + jac.dr_du * pv) * inv);
      am(q, a) = sw * ph;
    }
  }
  ElementMatrices out;
  out.stiffness.noalias() = ar.transpose() * ar;
  out.stiffness.noalias() += az.transpose() * az;
  out.mass.noalias() = am.transpose() * am;
  // Exact symmetry regardless of the product kernel's summation order.
  out.stiffness = 0.5 * (out.stiffness + out.stiffness.transpose()).eval();
  out.mass = 0.5 * (out.mass + out.mass.transpose()).eval();
  return out;
}

Eigen::VectorXd element_load(const FeSpace& space, std::size_t e, const SourceSpec& source) {
  const auto nb = static_cast<Eigen::Index>(space.local_size());
  Eigen::VectorXd load = Eigen::VectorXd::Zero(nb);
  if (!source.density) return load;
  const auto& m = space.mesh();
  const int p = space.degree();

  bool cut = false;
  if (source.level) {
    bool any_in = false;
    bool any_out = false;
    const int ns = 16;
    for (int j = 0; j <= ns && !cut; ++j) {
      for (int i = 0; i <= ns; ++i) {
        const double lv = source.level(m.map(e, static_cast<double>(i) / ns, static_cast<double>(j) / ns));
        (lv <= 0.0 ? any_in : any_out) = true;
        if (any_in && any_out) {
          cut = true;
          break;
        }
      }
    }
  }
  const int sub = cut ? 4 : 1;
  const auto rule = poly::gauss_legendre(p + 3);
  const ShapeBasis basis(p);
  std::vector<double> phi(static_cast<std::size_t>(nb));
  for (int sj = 0; sj < sub; ++sj) {
    for (int si = 0; si < sub; ++si) {
      for (std::size_t qj = 0; qj < rule.nodes.size(); ++qj) {
        for (std::size_t qi = 0; qi < rule.nodes.size(); ++qi) {
          const double u = (si + rule.nodes[qi]) / sub;
          const double v = (sj + rule.nodes[qj]) / sub;
          const double w = rule.weights[qi] * rule.weights[qj] / (sub * sub);
          const Point x = m.map(e, u, v);
          const double f = source.density(x);
          if (f == 0.0) continue;
          const double det = m.jacobian(e, u, v).det();
          basis.values(u, v, phi.data());
          const double scale = w * det * x.r * f;
          for (Eigen::Index a = 0; a < nb; ++a) load[a] += scale * phi[static_cast<std::size_t>(a)];
        }
      }
    }
  }
  return load;
}

// ---------------------------------------------------------------------------
// Global assembly

linsolve::SparseComplexMatrix assemble_form(const FeSpace& space, const FormCoefficients& coeffs, int threads) {
  const auto& m = space.mesh();
  const std::size_t ne = m.element_count();
  const std::size_t nloc = space.local_size();
  std::vector<Eigen::MatrixXcd> local(ne);
  parallel_for(ne, threads, [&](std::size_t e) {
    local[e] = element_operator(element_matrices(space, e), inverse_permittivity(coeffs, m.elements[e].subdomain),
                                coeffs.kappa2);
  });
  linsolve::SparseComplexMatrix a(static_cast<Eigen::Index>(space.dof_count()));
  a.reserve(ne * nloc * nloc);
  for (std::size_t e = 0; e < ne; ++e) {
    for (std::size_t j = 0; j < nloc; ++j) {
      for (std::size_t i = 0; i < nloc; ++i) {
        a.add(static_cast<Eigen::Index>(space.dof(e, i)), static_cast<Eigen::Index>(space.dof(e, j)),
              local[e](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    }
  }
  a.set_symmetric(true);
  a.finalize();
  return a;
}

linsolve::Vector assemble_load(const FeSpace& space, const SourceSpec& source) {
  linsolve::Vector b = linsolve::Vector::Zero(static_cast<Eigen::Index>(space.dof_count()));
  if (!source.density) return b;
  for (std::size_t e = 0; e < space.mesh().element_count(); ++e) {
    const auto le = element_load(space, e, source);
    for (std::size_t i = 0; i < space.local_size(); ++i) b[static_cast<Eigen::Index>(space.dof(e, i))] += le[static_cast<Eigen::Index>(i)];
  }
  return b;
}

linsolve::Vector dirichlet_values(const FeSpace& space, const SourceSpec& source) {
  linsolve::Vector g = linsolve::Vector::Zero(static_cast<Eigen::Index>(space.dof_count()));
  for (std::size_t d = 0; d < space.dof_count(); ++d) {
    if (!space.constrained(d) || space.on_axis(d) || !source.dirichlet) continue;
    g[static_cast<Eigen::Index>(d)] = source.dirichlet(space.dof_points()[d]);
  }
  return g;
}

namespace {

std::vector<char> constraint_mask(const FeSpace& space) {
  std::vector<char> mask(space.dof_count());
  for (std::size_t d = 0; d < space.dof_count(); ++d) mask[d] = space.constrained(d) ? 1 : 0;
  return mask;
}

}  // namespace

LinearSystem assemble(const FeSpace& space, const FormCoefficients& coeffs, const SourceSpec& source, int threads) {
  const auto a = assemble_form(space, coeffs, threads);
  return constrain(a.matrix(), assemble_load(space, source), constraint_mask(space), dirichlet_values(space, source));
}

LinearSystem assemble(const FeSpace& space, const physics::PhysicalParams& params, const SourceSpec& source,
                      int threads) {
  return assemble(space, FormCoefficients::from_params(params), source, threads);
}

// ---------------------------------------------------------------------------
// Fields and evaluation

DiscreteField::DiscreteField(std::shared_ptr<const FeSpace> space, linsolve::Vector coefficients, FieldInfo info)
    : space_(std::move(space)), coeffs_(std::move(coefficients)), info_(std::move(info)) {
  if (!space_) throw DomainError("null space");
  if (static_cast<std::size_t>(coeffs_.size()) != space_->dof_count()) {
    throw DomainError("coefficient vector length does not match the DOF count");
  }
  if (info_.degree == 0) info_.degree = space_->degree();
  if (info_.mesh_id.empty()) info_.mesh_id = space_->mesh().id;
}

cplx DiscreteField::evaluate_in_element(std::size_t e, double u, double v) const {
  const int p = space_->degree();
  const auto& b = poly::lobatto_basis(p);
  const auto n1 = static_cast<std::size_t>(p + 1);
  std::array<double, kMaxDegree + 1> bu{}, bv{};
  b.eval(u, bu.data());
  b.eval(v, bv.data());
  cplx s = 0.0;
  for (std::size_t j = 0; j < n1; ++j) {
    cplx row = 0.0;
    for (std::size_t i = 0; i < n1; ++i) row += bu[i] * coeffs_[static_cast<Eigen::Index>(space_->dof(e, i + n1 * j))];
    s += bv[j] * row;
  }
  return s;
}

cplx DiscreteField::evaluate(Point x) const {
  const auto rp = locate(space_->mesh(), x);
  return evaluate_in_element(rp.element, rp.u, rp.v);
}

bool invert_map(const QuadMesh& mesh, std::size_t e, Point x, double& u, double& v) {
  u = 0.5;
  v = 0.5;
  auto residual = [&](double uu, double vv) {
    const Point y = mesh.map(e, uu, vv);
    return Point{y.r - x.r, y.z - x.z};
  };
  Point f = residual(u, v);
  for (int iter = 0; iter < 60; ++iter) {
    const auto j = mesh.jacobian(e, u, v);
    const double det = j.det();
    if (det == 0.0 || !std::isfinite(det)) return false;
    const double du = (j.dz_dv * f.r - j.dr_dv * f.z) / det;
    const double dv = (-j.dz_du * f.r + j.dr_du * f.z) / det;
    double step = 1.0;
    const double fn = geometry::norm(f);
    double un = u - du, vn = v - dv;
    Point fnew = residual(un, vn);
    while (geometry::norm(fnew) > fn && step > 1e-4) {
      step *= 0.5;
      un = u - step * du;
      vn = v - step * dv;
      fnew = residual(un, vn);
    }
    const double change = std::max(std::abs(un - u), std::abs(vn - v));
    u = un;
    v = vn;
    f = fnew;
    if (std::abs(u) > 10.0 || std::abs(v) > 10.0) return false;
    if (change < 1e-12 || geometry::norm(f) == 0.0) return true;
  }
  return false;
}

ReferencePoint locate(const QuadMesh& mesh, Point x) {
  constexpr double kInside = 1e-10;
  bool newton_failed = false;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    double rmin = 1e300, rmax = -1e300, zmin = 1e300, zmax = -1e300;
    for (auto id : mesh.elements[e].nodes) {
      const Point& p = mesh.nodes[id];
      rmin = std::min(rmin, p.r);
      rmax = std::max(rmax, p.r);
      zmin = std::min(zmin, p.z);
      zmax = std::max(zmax, p.z);
    }
    const double pad = 0.1 * std::max(rmax - rmin, zmax - zmin) + 1e-12;
    if (x.r < rmin - pad || x.r > rmax + pad || x.z < zmin - pad || x.z > zmax + pad) continue;
    double u = 0.0, v = 0.0;
    if (!invert_map(mesh, e, x, u, v)) {
      newton_failed = true;
      continue;
    }
    if (u >= -kInside && u <= 1.0 + kInside && v >= -kInside && v <= 1.0 + kInside) {
      return {e, std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)};
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.17g, %.17g)", x.r, x.z);
  if (newton_failed) throw GeometryError(std::string("inverse map did not converge near ") + buf);
  throw PointNotFoundError(std::string("point outside the mesh: ") + buf);
}

DiscreteField interpolate(std::shared_ptr<const FeSpace> space, const std::function<cplx(Point)>& f) {
  linsolve::Vector c(static_cast<Eigen::Index>(space->dof_count()));
  for (std::size_t d = 0; d < space->dof_count(); ++d) c[static_cast<Eigen::Index>(d)] = f(space->dof_points()[d]);
  return DiscreteField(std::move(space), std::move(c));
}

// ---------------------------------------------------------------------------
// Solves

DiscreteField solve(std::shared_ptr<const FeSpace> space, const LinearSystem& system, FieldInfo info) {
  const auto lu = linsolve::factor(system.matrix);
  linsolve::Vector x = linsolve::backsolve(lu, system.rhs);
  info.residual = linsolve::relative_residual(system.matrix, x, system.rhs);
  if (info.degree == 0) info.degree = space->degree();
  if (info.mesh_id.empty()) info.mesh_id = space->mesh().id;
  return DiscreteField(std::move(space), std::move(x), std::move(info));
}

DiscreteField solve_problem(std::shared_ptr<const FeSpace> space, const FormCoefficients& coeffs,
                            const SourceSpec& source, const SolveOptions& options, FieldInfo info) {
  const FeSpace& sp = *space;
  if (info.degree == 0) info.degree = sp.degree();
  if (info.mesh_id.empty()) info.mesh_id = sp.mesh().id;
  if (!options.condense || sp.degree() < 2) {
    return solve(space, assemble(sp, coeffs, source, options.threads), std::move(info));
  }
  const auto& m = sp.mesh();
  const int p = sp.degree();
  const std::size_t ne = m.element_count();
  const auto bidx = boundary_local_indices(p);
  const auto iidx = interior_local_indices(p);
  const auto nB = static_cast<Eigen::Index>(bidx.size());
  const auto nI = static_cast<Eigen::Index>(iidx.size());

  // Skeleton numbering: every DOF on an element boundary, in global order.
  std::vector<Eigen::Index> skel(sp.dof_count(), -1);
  for (std::size_t e = 0; e < ne; ++e) {
    for (int li : bidx) skel[sp.dof(e, static_cast<std::size_t>(li))] = 0;
  }
  Eigen::Index ns = 0;
  std::vector<std::size_t> skel_dofs;
  for (std::size_t d = 0; d < skel.size(); ++d) {
    if (skel[d] >= 0) {
      skel[d] = ns++;
      skel_dofs.push_back(d);
    }
  }

  struct Condensed {
    Eigen::MatrixXcd schur;
    Eigen::VectorXcd load;
    Eigen::MatrixXcd x;  // K_II^{-1} [K_IB | F_I]
  };
  std::vector<Condensed> cond(ne);
  parallel_for(ne, options.threads, [&](std::size_t e) {
    const auto k = element_operator(element_matrices(sp, e), inverse_permittivity(coeffs, m.elements[e].subdomain),
                                    coeffs.kappa2);
    const Eigen::VectorXcd f = element_load(sp, e, source).cast<cplx>();
    Eigen::MatrixXcd kbb(nB, nB), kbi(nB, nI), rhs(nI, nB + 1), kii(nI, nI);
    for (Eigen::Index a = 0; a < nB; ++a) {
      for (Eigen::Index b = 0; b < nB; ++b) kbb(a, b) = k(bidx[static_cast<std::size_t>(a)], bidx[static_cast<std::size_t>(b)]);
      for (Eigen::Index b = 0; b < nI; ++b) kbi(a, b) = k(bidx[static_cast<std::size_t>(a)], iidx[static_cast<std::size_t>(b)]);
    }
    for (Eigen::Index a = 0; a < nI; ++a) {
      for (Eigen::Index b = 0; b < nI; ++b) kii(a, b) = k(iidx[static_cast<std::size_t>(a)], iidx[static_cast<std::size_t>(b)]);
      for (Eigen::Index b = 0; b < nB; ++b) rhs(a, b) = k(iidx[static_cast<std::size_t>(a)], bidx[static_cast<std::size_t>(b)]);
      rhs(a, nB) = f[iidx[static_cast<std::size_t>(a)]];
    }
    Condensed c;
    c.x = kii.partialPivLu().solve(rhs);
    c.schur = kbb;
    c.schur.noalias() -= kbi * c.x.leftCols(nB);
    c.schur = (0.5 * (c.schur + c.schur.transpose())).eval();
    c.load.resize(nB);
    for (Eigen::Index a = 0; a < nB; ++a) c.load[a] = f[bidx[static_cast<std::size_t>(a)]];
    c.load.noalias() -= kbi * c.x.col(nB);
    cond[e] = std::move(c);
  });

  std::vector<Eigen::Triplet<cplx, int>> triplets;
  triplets.reserve(ne * static_cast<std::size_t>(nB * nB));
  linsolve::Vector bs = linsolve::Vector::Zero(ns);
  for (std::size_t e = 0; e < ne; ++e) {
    for (Eigen::Index b = 0; b < nB; ++b) {
      const auto gb = skel[sp.dof(e, static_cast<std::size_t>(bidx[static_cast<std::size_t>(b)]))];
      for (Eigen::Index a = 0; a < nB; ++a) {
        const auto ga = skel[sp.dof(e, static_cast<std::size_t>(bidx[static_cast<std::size_t>(a)]))];
        triplets.emplace_back(static_cast<int>(ga), static_cast<int>(gb), cond[e].schur(a, b));
      }
      bs[gb] += cond[e].load[b];
    }
  }
  linsolve::SparseMatrix s(ns, ns);
  s.setFromTriplets(triplets.begin(), triplets.end());
  triplets.clear();
  triplets.shrink_to_fit();

  const auto g_full = dirichlet_values(sp, source);
  std::vector<char> mask(static_cast<std::size_t>(ns));
  linsolve::Vector g(ns);
  for (Eigen::Index k = 0; k < ns; ++k) {
    const std::size_t d = skel_dofs[static_cast<std::size_t>(k)];
    mask[static_cast<std::size_t>(k)] = sp.constrained(d) ? 1 : 0;
    g[k] = g_full[static_cast<Eigen::Index>(d)];
  }
  const auto system = constrain(s, std::move(bs), mask, g);
  const auto lu = linsolve::factor(system.matrix);
  const linsolve::Vector xs = linsolve::backsolve(lu, system.rhs);
  info.residual = linsolve::relative_residual(system.matrix, xs, system.rhs);

  linsolve::Vector x(static_cast<Eigen::Index>(sp.dof_count()));
  for (Eigen::Index k = 0; k < ns; ++k) x[static_cast<Eigen::Index>(skel_dofs[static_cast<std::size_t>(k)])] = xs[k];
  for (std::size_t e = 0; e < ne; ++e) {
    Eigen::VectorXcd ub(nB);
    for (Eigen::Index b = 0; b < nB; ++b) ub[b] = xs[skel[sp.dof(e, static_cast<std::size_t>(bidx[static_cast<std::size_t>(b)]))]];
    const Eigen::VectorXcd ui = cond[e].x.col(nB) - cond[e].x.leftCols(nB) * ub;
    for (Eigen::Index a = 0; a < nI; ++a) x[static_cast<Eigen::Index>(sp.dof(e, static_cast<std::size_t>(iidx[static_cast<std::size_t>(a)])))] = ui[a];
  }
  return DiscreteField(std::move(space), std::move(x), std::move(info));
}

DiscreteField solve_problem(std::shared_ptr<const FeSpace> space, const physics::PhysicalParams& params,
                            const SourceSpec& source, const SolveOptions& options) {
  FieldInfo info;
  info.sigma = params.sigma();
  return solve_problem(std::move(space), FormCoefficients::from_params(params), source, options, std::move(info));
}

void write_field(std::ostream& out, const DiscreteField& field) {
  const auto& info = field.info();
  char buf[96];
  out << "FIELD v1\n";
  out << "mesh " << (info.mesh_id.empty() ? "-" : info.mesh_id) << '\n';
  out << "degree " << info.degree << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", info.sigma);
  out << "sigma " << buf << '\n';
  out << "dofs " << field.coefficients().size() << '\n';
  for (Eigen::Index i = 0; i < field.coefficients().size(); ++i) {
    const cplx c = field.coefficients()[i];
    std::snprintf(buf, sizeof buf, "%.17g %.17g", c.real(), c.imag());
    out << buf << '\n';
  }
}

}  // namespace skin::fem
