#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skin {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Curvature requested exactly at a corner of a piecewise-straight interface.
class CornerPointError : public DomainError {
public:
  explicit CornerPointError(double xi)
      : DomainError("curvature undefined at corner point xi=" + std::to_string(xi)), xi_(xi) {}
  double xi() const noexcept { return xi_; }

private:
  double xi_;
};

class MeshGenerationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class MeshFormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Inverse geometric map failed to converge.
class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class PointNotFoundError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Unreachable-by-construction failures inside assembly.
class InternalError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

class SingularMatrixError : public std::runtime_error {
public:
  SingularMatrixError(const std::string& what, std::ptrdiff_t index)
      : std::runtime_error(what + " (pivot index " + std::to_string(index) + ")"), index_(index) {}
  std::ptrdiff_t index() const noexcept { return index_; }

private:
  std::ptrdiff_t index_;
};

/// Postprocessing could not produce a well-posed result (e.g. too few samples).
class ReportError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace skin
