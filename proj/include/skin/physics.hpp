#pragma once

#include <complex>
#include <numbers>

namespace skin::physics {

using cplx = std::complex<double>;

inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr double kVacuumPermeability = 4.0e-7 * std::numbers::pi;  // H/m
inline constexpr double kDefaultOmega = 3.0e7;  // rad/s

/// Physical scalars of the transmission problem and the quantities derived from them.
///
/// Only omega, eps0, mu0 and sigma are stored; delta, kappa, lambda and the skin depth
/// are computed on demand so that the defining relations hold exactly.
class PhysicalParams {
public:
  /// Throws DomainError unless every argument is strictly positive.
  PhysicalParams(double sigma, double omega = kDefaultOmega, double eps0 = kVacuumPermittivity,
                 double mu0 = kVacuumPermeability);

  double omega() const noexcept { return omega_; }
  double eps0() const noexcept { return eps0_; }
  double mu0() const noexcept { return mu0_; }
  double sigma() const noexcept { return sigma_; }

  /// Small parameter sqrt(omega eps0 / sigma).
  double delta() const noexcept;
  /// Vacuum wavenumber omega sqrt(eps0 mu0).
  double kappa() const noexcept;
  /// Complex decay rate kappa exp(-i pi/4).
  cplx lambda() const noexcept;
  /// Classical skin depth sqrt(2 / (omega mu0 sigma)).
  double ell() const noexcept;

  /// Relative permittivity 1 + i/delta^2 of the conductor.
  cplx conductor_permittivity() const noexcept;

private:
  double omega_;
  double eps0_;
  double mu0_;
  double sigma_;
};

double skin_depth(double omega, double mu0, double sigma);

/// Decay slope of log10|H| predicted by the curvature-corrected expansion:
/// (1/ln 10) (1/ell - H).
double theoretical_slope(const PhysicalParams& params, double mean_curv);

/// H / (1/ell - H). Throws DomainError when 1/ell <= H.
double curv_ratio(const PhysicalParams& params, double mean_curv);

/// Two-term skin depth ell (1 + H ell).
double skin_depth_first_order(const PhysicalParams& params, double mean_curv);

/// Traces on the interface of the first two dielectric terms, at arc-length position xi.
struct ProfileTrace {
  cplx h0;
  cplx h1;
  double xi = 0.0;
};

/// Leading conductor profile exp(-lambda Y) h0 in the stretched variable Y = y3/delta.
cplx profile_v0(const ProfileTrace& trace, double Y, const PhysicalParams& params);

/// First-order corrector exp(-lambda Y) [h1 + (Y/2)(k + z'/r) h0].
cplx profile_v1(const ProfileTrace& trace, double Y, double curvature, double zprime_over_r,
                const PhysicalParams& params);

}  // namespace skin::physics
