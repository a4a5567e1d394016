#pragma once

#include <vector>

namespace skin::poly {

/// Quadrature rule on [0, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [0, 1]; exact for degree 2n - 1.
Rule gauss_legendre(int n);

/// The p + 1 Gauss-Lobatto points on [0, 1] (endpoints included, symmetric bit-for-bit).
std::vector<double> gauss_lobatto_points(int p);

/// Lagrange interpolation basis on a fixed node set, evaluated in barycentric form.
class LagrangeBasis {
public:
  explicit LagrangeBasis(std::vector<double> nodes);

  int size() const noexcept { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }

  /// values[j] = L_j(x).
  void eval(double x, double* values) const;
  /// values[j] = L_j(x), derivs[j] = L_j'(x).
  void eval(double x, double* values, double* derivs) const;

private:
  std::vector<double> nodes_;
  std::vector<double> bary_;
};

/// Cached Lagrange basis on the degree-p Gauss-Lobatto points (1 <= p <= 32).
const LagrangeBasis& lobatto_basis(int p);

}  // namespace skin::poly
