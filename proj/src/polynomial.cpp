#include "skin/polynomial.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "skin/errors.hpp"

namespace skin::poly {

namespace {

// Legendre P_n(x) and its derivative by the three-term recurrence.
void legendre(int n, double x, double& p, double& dp) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

constexpr int kMaxCachedDegree = 32;

}  // namespace

Rule gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre rule needs n >= 1");
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double p = 0.0;
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      legendre(n, x, p, dp);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(n, x, p, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // x_i > 0 descending; store ascending on [0, 1] with mirrored partner.
    const int lo = i;
    const int hi = n - 1 - i;
    rule.nodes[lo] = 0.5 * (1.0 - x);
    rule.nodes[hi] = 1.0 - rule.nodes[lo];
    rule.weights[lo] = 0.5 * w;
    rule.weights[hi] = 0.5 * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.5;
  return rule;
}

std::vector<double> gauss_lobatto_points(int p) {
  if (p < 1) throw DomainError("Gauss-Lobatto points need p >= 1");
  std::vector<double> y(p + 1);
  y[0] = 0.0;
  y[p] = 1.0;
  // Interior points are the roots of P_p'(x); Newton on q(x) = (1 - x^2) P_p'(x).
  for (int i = 1; 2 * i < p; ++i) {
    double x = -std::cos(std::numbers::pi * i / p);
    for (int iter = 0; iter < 100; ++iter) {
      double pn = 0.0;
      double dpn = 0.0;
      legendre(p, x, pn, dpn);
      // (1-x^2) P'' = 2x P' - p(p+1) P
      const double d2 = (2.0 * x * dpn - p * (p + 1.0) * pn) / (1.0 - x * x);
      const double dx = dpn / d2;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    y[i] = 0.5 * (1.0 + x);
    y[p - i] = 1.0 - y[i];
  }
  if (p % 2 == 0) y[p / 2] = 0.5;
  return y;
}

LagrangeBasis::LagrangeBasis(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  const std::size_t n = nodes_.size();
  bary_.assign(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) bary_[j] /= (nodes_[j] - nodes_[k]);
    }
  }
}

void LagrangeBasis::eval(double x, double* values) const {
  const std::size_t n = nodes_.size();
  for (std::size_t m = 0; m < n; ++m) {
    if (x == nodes_[m]) {
      for (std::size_t j = 0; j < n; ++j) values[j] = j == m ? 1.0 : 0.0;
      return;
    }
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = bary_[j] / (x - nodes_[j]);
    sum += values[j];
  }
  for (std::size_t j = 0; j < n; ++j) values[j] /= sum;
}

void LagrangeBasis::eval(double x, double* values, double* derivs) const {
  const std::size_t n = nodes_.size();
  for (std::size_t m = 0; m < n; ++m) {
    if (x != nodes_[m]) continue;
    double diag = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      values[j] = j == m ? 1.0 : 0.0;
      if (j != m) {
        derivs[j] = (bary_[j] / bary_[m]) / (x - nodes_[j]);
        diag += 1.0 / (x - nodes_[j]);
      }
    }
    derivs[m] = diag;
    return;
  }
  eval(x, values);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) s += 1.0 / (x - nodes_[k]);
    }
    derivs[j] = values[j] * s;
  }
}

const LagrangeBasis& lobatto_basis(int p) {
  if (p < 1 || p > kMaxCachedDegree) throw DomainError("Lobatto basis degree out of range");
  static std::array<std::unique_ptr<LagrangeBasis>, kMaxCachedDegree + 1> cache;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  auto& slot = cache[static_cast<std::size_t>(p)];
  if (!slot) slot = std::make_unique<LagrangeBasis>(gauss_lobatto_points(p));
  return *slot;
}

}  // namespace skin::poly
