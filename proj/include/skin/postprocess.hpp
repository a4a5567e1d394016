#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "skin/fem.hpp"
#include "skin/geometry.hpp"

namespace skin::postprocess {

/// sqrt(int over the conductor of |H|^2 r dr dz).
double conductor_norm(const fem::DiscreteField& field);

/// Least-squares slope of log A against log sigma; needs at least 3 positive pairs.
double scaling_exponent(const std::vector<std::pair<double, double>>& sigma_and_norm);

struct RadialSample {
  double y3 = 0.0;
  double log10_modulus = 0.0;
};

/// |H| along z = 0 inside the conductor at the mesh nodes of element edges lying on
/// that line. y3 is the distance to the interface; samples are sorted by y3.
/// Throws ReportError when no sample falls within one skin depth.
std::vector<RadialSample> extract_radial(const fem::DiscreteField& field, geometry::ConfigId config, double sigma);

struct RegressionFit {
  double slope = 0.0;  // s~ with log10|H| = -s~ y3 + b
  double intercept = 0.0;
  std::size_t n_used = 0;
};

/// Ordinary least squares over the samples with y3 <= ell.
RegressionFit regression_slope(const std::vector<RadialSample>& samples, double ell);

struct CornerSample {
  double rho = 0.0;
  double log10_modulus = 0.0;
};

struct CornerSlope {
  double rho = 0.0;  // distance of the nearer sample of the pair
  double slope = 0.0;
};

/// Pointwise slopes between consecutive samples sorted by rho.
/// Throws ReportError on coincident distances.
std::vector<CornerSlope> pointwise_slopes(std::vector<CornerSample> samples);

/// Samples |H| on the diagonal r = z from the conductor corner (1, 1) of configuration A,
/// at spacing ell/4 together with the mesh nodes on the diagonal, for rho <= rho_max_factor ell.
std::vector<CornerSample> corner_samples(const fem::DiscreteField& field, double sigma, double rho_max_factor = 6.0);
std::vector<CornerSlope> corner_slopes(const fem::DiscreteField& field, double sigma, double rho_max_factor = 6.0);

struct SlopeReport {
  double sigma = 0.0;
  int degree = 0;
  std::vector<RadialSample> samples;
  std::size_t n_used = 0;
  double slope_fit = 0.0;
  double intercept = 0.0;
  double slope_theory = 0.0;
  double rel_err = 0.0;
  double curv_ratio = 0.0;
  double ell = 0.0;
  double mean_curvature = 0.0;
};

/// Radial extraction, regression, and comparison with the curvature-corrected slope
/// at the equator of a spheroidal configuration.
SlopeReport slope_report(const fem::DiscreteField& field, geometry::ConfigId config, double sigma);

struct FieldRaster {
  double r0 = 0.0, r1 = 0.0, z0 = 0.0, z1 = 0.0;
  int nr = 0, nz = 0;
  /// Row-major by z then r; absent outside the mesh.
  std::vector<std::optional<double>> abs_h;
  std::vector<std::optional<double>> abs_imag_h;

  double r_at(int i) const { return nr > 1 ? r0 + (r1 - r0) * i / (nr - 1) : r0; }
  double z_at(int j) const { return nz > 1 ? z0 + (z1 - z0) * j / (nz - 1) : z0; }
};

struct Grid {
  double r0 = 0.0, r1 = 1.0, z0 = 0.0, z1 = 1.0;
  int nr = 2, nz = 2;
};

FieldRaster imag_field_map(const fem::DiscreteField& field, const Grid& grid);

void write_radial_csv(std::ostream& out, const std::vector<RadialSample>& samples);
void write_corner_csv(std::ostream& out, const std::vector<CornerSlope>& slopes);
void write_scaling_csv(std::ostream& out, const std::vector<std::pair<double, double>>& sigma_and_norm);
void write_raster_csv(std::ostream& out, const FieldRaster& raster);

/// Decimal form with 17 significant digits.
std::string format17(double x);

}  // namespace skin::postprocess
