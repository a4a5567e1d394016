#include "skin/linsolve.hpp"

#include <cctype>
#include <string>

#include <Eigen/SparseLU>

#include "skin/errors.hpp"

namespace skin::linsolve {

namespace {

// SparseLU reports the failing column only inside its message text.
std::ptrdiff_t trailing_index(const std::string& msg) {
  std::size_t end = msg.size();
  while (end > 0 && !std::isdigit(static_cast<unsigned char>(msg[end - 1]))) --end;
  std::size_t begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(msg[begin - 1]))) --begin;
  if (begin == end) return -1;
  return std::stoll(msg.substr(begin, end - begin));
}

}  // namespace

SparseComplexMatrix::SparseComplexMatrix(Eigen::Index n) : n_(n), matrix_(n, n) {
  if (n < 0) throw DomainError("negative matrix dimension");
}

SparseComplexMatrix::SparseComplexMatrix(SparseMatrix m, bool symmetric)
    : n_(m.rows()), symmetric_(symmetric), matrix_(std::move(m)) {
  if (matrix_.rows() != matrix_.cols()) throw DomainError("matrix must be square");
  matrix_.makeCompressed();
  finalized_ = true;
  if (symmetric_ && asymmetry() != 0.0) throw DomainError("matrix flagged symmetric is not symmetric");
}

void SparseComplexMatrix::add(Eigen::Index i, Eigen::Index j, cplx value) {
  if (finalized_) throw DomainError("matrix already finalized");
  if (i < 0 || j < 0 || i >= n_ || j >= n_) throw DomainError("matrix index out of range");
  triplets_.emplace_back(static_cast<int>(i), static_cast<int>(j), value);
}

void SparseComplexMatrix::finalize() {
  if (finalized_) return;
  matrix_.resize(n_, n_);
  matrix_.setFromTriplets(triplets_.begin(), triplets_.end());
  matrix_.makeCompressed();
  triplets_.clear();
  triplets_.shrink_to_fit();
  finalized_ = true;
  if (symmetric_ && asymmetry() != 0.0) throw InternalError("matrix flagged symmetric is not symmetric");
}

const SparseMatrix& SparseComplexMatrix::matrix() const {
  if (!finalized_) throw DomainError("matrix not finalized");
  return matrix_;
}

Vector SparseComplexMatrix::multiply(const Vector& x) const {
  if (x.size() != n_) throw DomainError("vector size does not match the matrix");
  return matrix() * x;
}

double SparseComplexMatrix::asymmetry() const {
  const SparseMatrix t = matrix().transpose();
  const SparseMatrix d = matrix() - t;
  double m = 0.0;
  for (int k = 0; k < d.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

struct Factorization::Impl {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
};

Factorization factor(const SparseComplexMatrix& matrix) {
  const auto& a = matrix.matrix();
  auto impl = std::make_shared<Factorization::Impl>();
  impl->lu.analyzePattern(a);
  impl->lu.factorize(a);
  if (impl->lu.info() != Eigen::Success) {
    const std::string msg = impl->lu.lastErrorMessage();
    throw SingularMatrixError("sparse LU failed: " + msg, trailing_index(msg));
  }
  Factorization f;
  f.impl_ = std::move(impl);
  f.n_ = matrix.size();
  return f;
}

Vector Factorization::solve(const Vector& rhs) const {
  if (!impl_) throw DomainError("empty factorization");
  if (rhs.size() != n_) throw DomainError("right-hand side size does not match the factorization");
  if (n_ == 0) return rhs;
  Vector x = impl_->lu.solve(rhs);
  return x;
}

Vector backsolve(const Factorization& factorization, const Vector& rhs) { return factorization.solve(rhs); }

double relative_residual(const SparseComplexMatrix& a, const Vector& x, const Vector& b) {
  const Vector r = a.multiply(x) - b;
  const double nb = b.lpNorm<Eigen::Infinity>();
  const double nr = r.size() ? r.lpNorm<Eigen::Infinity>() : 0.0;
  return nb > 0.0 ? nr / nb : nr;
}

}  // namespace skin::linsolve
