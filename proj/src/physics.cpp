#include "skin/physics.hpp"

#include <cmath>
#include <numbers>

#include "skin/errors.hpp"

namespace skin::physics {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be strictly positive and finite");
  }
}

// exp(-i pi/4) in closed form.
const cplx kRotation{std::numbers::sqrt2 / 2.0, -std::numbers::sqrt2 / 2.0};

}  // namespace

PhysicalParams::PhysicalParams(double sigma, double omega, double eps0, double mu0)
    : omega_(omega), eps0_(eps0), mu0_(mu0), sigma_(sigma) {
  require_positive(sigma, "sigma");
  require_positive(omega, "omega");
  require_positive(eps0, "eps0");
  require_positive(mu0, "mu0");
}

double PhysicalParams::delta() const noexcept { return std::sqrt(omega_ * eps0_ / sigma_); }

double PhysicalParams::kappa() const noexcept { return omega_ * std::sqrt(eps0_ * mu0_); }

cplx PhysicalParams::lambda() const noexcept { return kappa() * kRotation; }

double PhysicalParams::ell() const noexcept { return std::sqrt(2.0 / (omega_ * mu0_ * sigma_)); }

cplx PhysicalParams::conductor_permittivity() const noexcept {
  const double d = delta();
  return {1.0, 1.0 / (d * d)};
}

double skin_depth(double omega, double mu0, double sigma) {
  require_positive(omega, "omega");
  require_positive(mu0, "mu0");
  require_positive(sigma, "sigma");
  return std::sqrt(2.0 / (omega * mu0 * sigma));
}

double theoretical_slope(const PhysicalParams& params, double mean_curv) {
  return (1.0 / params.ell() - mean_curv) / std::numbers::ln10;
}

double curv_ratio(const PhysicalParams& params, double mean_curv) {
  const double denom = 1.0 / params.ell() - mean_curv;
  if (!(denom > 0.0)) {
    throw DomainError("skin depth too large for the asymptotic regime: 1/ell <= mean curvature");
  }
  return mean_curv / denom;
}

double skin_depth_first_order(const PhysicalParams& params, double mean_curv) {
  const double ell = params.ell();
  return ell * (1.0 + mean_curv * ell);
}

cplx profile_v0(const ProfileTrace& trace, double Y, const PhysicalParams& params) {
  return std::exp(-params.lambda() * Y) * trace.h0;
}

cplx profile_v1(const ProfileTrace& trace, double Y, double curvature, double zprime_over_r,
                const PhysicalParams& params) {
  return std::exp(-params.lambda() * Y) *
         (trace.h1 + 0.5 * Y * (curvature + zprime_over_r) * trace.h0);
}

}  // namespace skin::physics
