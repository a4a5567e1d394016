#include "skin/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>

#include "skin/errors.hpp"
#include "skin/physics.hpp"
#include "skin/polynomial.hpp"

namespace skin::postprocess {

using fem::DiscreteField;
using geometry::ConfigId;

std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double conductor_norm(const DiscreteField& field) {
  const auto& m = field.space().mesh();
  const auto rule = poly::gauss_legendre(field.space().degree() + 3);
  double sum = 0.0;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    if (m.elements[e].subdomain != mesh::Subdomain::Conductor) continue;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double u = rule.nodes[i], v = rule.nodes[j];
        const double w = rule.weights[i] * rule.weights[j] * m.jacobian(e, u, v).det() * m.map(e, u, v).r;
        sum += w * std::norm(field.evaluate_in_element(e, u, v));
      }
    }
  }
  return std::sqrt(sum);
}

double scaling_exponent(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw ReportError("scaling fit needs at least 3 (sigma, A) pairs");
  double sx = 0.0, sy = 0.0;
  for (const auto& [s, a] : pairs) {
    if (!(s > 0.0) || !(a > 0.0)) throw ReportError("scaling fit needs positive sigma and norm");
    sx += std::log(s);
    sy += std::log(a);
  }
  const double n = static_cast<double>(pairs.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [s, a] : pairs) {
    const double dx = std::log(s) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(a) - my);
  }
  if (sxx == 0.0) throw ReportError("scaling fit needs distinct sigma values");
  return sxy / sxx;
}

std::vector<RadialSample> extract_radial(const DiscreteField& field, ConfigId config, double sigma) {
  if (config == ConfigId::A) throw DomainError("radial extraction needs a spheroidal configuration");
  const auto dom = geometry::MeridianDomain::make(config);
  const double a = dom.equator_radius();
  const double sign = dom.conductor_inside() ? -1.0 : 1.0;
  const auto& m = field.space().mesh();

  std::map<std::size_t, RadialSample> by_node;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto& el = m.elements[e];
    if (el.subdomain != mesh::Subdomain::Conductor) continue;
    const int g = el.geometry_degree;
    const auto& s = poly::gauss_lobatto_points(g);
    for (int f = 0; f < 4; ++f) {
      const auto local = mesh::QuadMesh::face_local_indices(g, f);
      bool on_line = true;
      for (int li : local) on_line = on_line && m.nodes[el.nodes[static_cast<std::size_t>(li)]].z == 0.0;
      if (!on_line) continue;
      for (std::size_t k = 0; k < local.size(); ++k) {
        const std::size_t node = el.nodes[static_cast<std::size_t>(local[k])];
        if (by_node.contains(node)) continue;
        const auto ref = mesh::QuadMesh::face_reference_point(f, s[k]);
        const double mod = std::abs(field.evaluate_in_element(e, ref[0], ref[1]));
        if (mod == 0.0) continue;
        by_node[node] = {sign * (m.nodes[node].r - a), std::log10(mod)};
      }
    }
  }
  std::vector<RadialSample> out;
  out.reserve(by_node.size());
  for (const auto& [node, sample] : by_node) out.push_back(sample);
  std::sort(out.begin(), out.end(), [](const RadialSample& x, const RadialSample& y) { return x.y3 < y.y3; });

  const double ell = physics::PhysicalParams(sigma).ell();
  const bool any = std::any_of(out.begin(), out.end(), [ell](const RadialSample& x) { return x.y3 <= ell; });
  if (!any) throw ReportError("no extraction sample within one skin depth of the interface");
  return out;
}

RegressionFit regression_slope(const std::vector<RadialSample>& samples, double ell) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (const auto& s : samples) {
    if (s.y3 > ell) continue;
    sx += s.y3;
    sy += s.log10_modulus;
    ++n;
  }
  if (n < 2) throw ReportError("regression needs at least 2 samples within the skin depth");
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (const auto& s : samples) {
    if (s.y3 > ell) continue;
    sxx += (s.y3 - mx) * (s.y3 - mx);
    sxy += (s.y3 - mx) * (s.log10_modulus - my);
  }
  if (sxx == 0.0) throw ReportError("regression samples share one depth");
  RegressionFit fit;
  fit.slope = -sxy / sxx;
  fit.intercept = my + fit.slope * mx;
  fit.n_used = n;
  return fit;
}

std::vector<CornerSlope> pointwise_slopes(std::vector<CornerSample> samples) {
  std::sort(samples.begin(), samples.end(), [](const CornerSample& x, const CornerSample& y) { return x.rho < y.rho; });
  std::vector<CornerSlope> out;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const double d = samples[i + 1].rho - samples[i].rho;
    if (d == 0.0) throw ReportError("coincident corner sample distances");
    out.push_back({samples[i].rho, (samples[i].log10_modulus - samples[i + 1].log10_modulus) / d});
  }
  return out;
}

std::vector<CornerSample> corner_samples(const DiscreteField& field, double sigma, double rho_max_factor) {
  const double ell = physics::PhysicalParams(sigma).ell();
  const double rho_max = rho_max_factor * ell;
  const auto& m = field.space().mesh();
  // Diagonal offsets t with points (1 - t, 1 - t) and rho = sqrt(2) t.
  std::vector<double> ts;
  const double dt = 0.25 * ell / std::numbers::sqrt2;
  for (int k = 0; k * dt * std::numbers::sqrt2 <= rho_max * (1.0 + 1e-12); ++k) ts.push_back(k * dt);
  for (const auto& p : m.nodes) {
    const double t = 1.0 - p.r;
    if (p.r == p.z && t >= 0.0 && std::numbers::sqrt2 * t <= rho_max) ts.push_back(t);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(), [](double x, double y) { return std::abs(x - y) <= 1e-12; }), ts.end());

  std::vector<CornerSample> out;
  for (double t : ts) {
    const double mod = std::abs(field.evaluate({1.0 - t, 1.0 - t}));
    if (mod == 0.0) continue;
    out.push_back({std::numbers::sqrt2 * t, std::log10(mod)});
  }
  return out;
}

std::vector<CornerSlope> corner_slopes(const DiscreteField& field, double sigma, double rho_max_factor) {
  return pointwise_slopes(corner_samples(field, sigma, rho_max_factor));
}

SlopeReport slope_report(const DiscreteField& field, ConfigId config, double sigma) {
  const physics::PhysicalParams params(sigma);
  const auto dom = geometry::MeridianDomain::make(config);
  SlopeReport rep;
  rep.sigma = sigma;
  rep.degree = field.space().degree();
  rep.ell = params.ell();
  rep.mean_curvature = geometry::mean_curvature(dom.interface(), dom.equator_xi());
  rep.samples = extract_radial(field, config, sigma);
  const auto fit = regression_slope(rep.samples, rep.ell);
  rep.n_used = fit.n_used;
  rep.slope_fit = fit.slope;
  rep.intercept = fit.intercept;
  rep.slope_theory = physics::theoretical_slope(params, rep.mean_curvature);
  rep.rel_err = std::abs(rep.slope_theory - rep.slope_fit) / rep.slope_theory;
  rep.curv_ratio = physics::curv_ratio(params, rep.mean_curvature);
  return rep;
}

FieldRaster imag_field_map(const DiscreteField& field, const Grid& grid) {
  if (grid.nr < 1 || grid.nz < 1) throw DomainError("raster needs at least one point per direction");
  FieldRaster out;
  out.r0 = grid.r0;
  out.r1 = grid.r1;
  out.z0 = grid.z0;
  out.z1 = grid.z1;
  out.nr = grid.nr;
  out.nz = grid.nz;
  const auto n = static_cast<std::size_t>(grid.nr) * static_cast<std::size_t>(grid.nz);
  out.abs_h.resize(n);
  out.abs_imag_h.resize(n);
  for (int j = 0; j < grid.nz; ++j) {
    for (int i = 0; i < grid.nr; ++i) {
      const auto k = static_cast<std::size_t>(i) + static_cast<std::size_t>(grid.nr) * static_cast<std::size_t>(j);
      try {
        const auto h = field.evaluate({out.r_at(i), out.z_at(j)});
        out.abs_h[k] = std::abs(h);
        out.abs_imag_h[k] = std::abs(h.imag());
      } catch (const PointNotFoundError&) {
      }
    }
  }
  return out;
}

void write_radial_csv(std::ostream& out, const std::vector<RadialSample>& samples) {
  out << "y3,log10H\n";
  for (const auto& s : samples) out << format17(s.y3) << ',' << format17(s.log10_modulus) << '\n';
}

void write_corner_csv(std::ostream& out, const std::vector<CornerSlope>& slopes) {
  out << "rho,slope\n";
  for (const auto& s : slopes) out << format17(s.rho) << ',' << format17(s.slope) << '\n';
}

void write_scaling_csv(std::ostream& out, const std::vector<std::pair<double, double>>& pairs) {
  out << "sigma,A\n";
  for (const auto& [s, a] : pairs) out << format17(s) << ',' << format17(a) << '\n';
}

void write_raster_csv(std::ostream& out, const FieldRaster& raster) {
  out << "r,z,absH,absImH\n";
  for (int j = 0; j < raster.nz; ++j) {
    for (int i = 0; i < raster.nr; ++i) {
      const auto k = static_cast<std::size_t>(i) + static_cast<std::size_t>(raster.nr) * static_cast<std::size_t>(j);
      out << format17(raster.r_at(i)) << ',' << format17(raster.z_at(j)) << ',';
      if (raster.abs_h[k]) {
        out << format17(*raster.abs_h[k]) << ',' << format17(*raster.abs_imag_h[k]);
      } else {
        out << ',';
      }
      out << '\n';
    }
  }
}

}  // namespace skin::postprocess
