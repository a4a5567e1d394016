#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/SparseCore>

namespace skin::linsolve {

using cplx = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXcd;

/// Square sparse complex matrix built from triplets.
///
/// Duplicates are summed in insertion order on finalize(), so two matrices built from
/// the same triplet sequence are bit-identical.
class SparseComplexMatrix {
public:
  explicit SparseComplexMatrix(Eigen::Index n = 0);
  SparseComplexMatrix(SparseMatrix m, bool symmetric);

  Eigen::Index size() const noexcept { return n_; }
  bool finalized() const noexcept { return finalized_; }

  void add(Eigen::Index i, Eigen::Index j, cplx value);
  void reserve(std::size_t triplets) { triplets_.reserve(triplets); }
  /// Marks the matrix as complex symmetric; checked exactly by finalize().
  void set_symmetric(bool flag) noexcept { symmetric_ = flag; }
  bool symmetric() const noexcept { return symmetric_; }

  void finalize();

  const SparseMatrix& matrix() const;
  Vector multiply(const Vector& x) const;
  /// max |A_ij - A_ji|.
  double asymmetry() const;

private:
  Eigen::Index n_ = 0;
  bool symmetric_ = false;
  bool finalized_ = false;
  std::vector<Eigen::Triplet<cplx, int>> triplets_;
  SparseMatrix matrix_;
};

/// Sparse LU factorization with partial pivoting and a COLAMD fill-reducing ordering.
class Factorization {
public:
  Eigen::Index size() const noexcept { return n_; }
  Vector solve(const Vector& rhs) const;

private:
  friend Factorization factor(const SparseComplexMatrix& matrix);
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  Eigen::Index n_ = 0;
};

/// Throws SingularMatrixError carrying the failing column when the matrix is singular.
Factorization factor(const SparseComplexMatrix& matrix);
Vector backsolve(const Factorization& factorization, const Vector& rhs);

/// ||A x - b||_inf / ||b||_inf (or ||A x||_inf when b = 0).
double relative_residual(const SparseComplexMatrix& a, const Vector& x, const Vector& b);

}  // namespace skin::linsolve
