#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "skin/geometry.hpp"

namespace skin::mesh {

using geometry::Point;

enum class Subdomain : std::uint8_t { Conductor, Dielectric };
enum class BoundaryTag : std::uint8_t { Outer, Axis, Interface };

/// Curved quadrilateral of geometry degree g: (g+1)^2 nodes in tensor order
/// (index i + (g+1) j, i along the first reference coordinate u, j along v),
/// placed at Gauss-Lobatto points of [0,1]^2.
///
/// Faces: 0 is v=0, 1 is u=1, 2 is v=1, 3 is u=0.
struct Element {
  std::vector<std::size_t> nodes;
  int geometry_degree = 1;
  Subdomain subdomain = Subdomain::Dielectric;
};

/// A tagged element face. Boundary faces (outer, axis) belong to one element;
/// interface faces are recorded once, from the conductor side.
struct Facet {
  std::size_t element = 0;
  int face = 0;
  BoundaryTag tag = BoundaryTag::Outer;
};

struct Jacobian {
  double dr_du = 0.0;
  double dr_dv = 0.0;
  double dz_du = 0.0;
  double dz_dv = 0.0;

  double det() const noexcept { return dr_du * dz_dv - dr_dv * dz_du; }
};

class QuadMesh {
public:
  std::string id;
  std::vector<Point> nodes;
  std::vector<Element> elements;
  std::vector<Facet> facets;

  std::size_t element_count() const noexcept { return elements.size(); }

  /// Physical point of reference coordinates (u, v) in element e.
  Point map(std::size_t e, double u, double v) const;
  Jacobian jacobian(std::size_t e, double u, double v) const;

  /// Corner node ids in counter-clockwise reference order (00, 10, 11, 01).
  std::array<std::size_t, 4> corners(std::size_t e) const;
  /// Local node indices along a face, ordered counter-clockwise.
  static std::vector<int> face_local_indices(int degree, int face);
  /// Reference coordinates of a point on face `face` at face parameter s in [0, 1].
  static std::array<double, 2> face_reference_point(int face, double s);

  /// Area of element e by Gauss quadrature of |det J|.
  double element_area(std::size_t e, int quad_points = 12) const;
};

/// Uniform square elements of side 1/k on [0,2]x[-2,2] (configuration A, mesh M_k).
QuadMesh square_mesh_A(int k);

struct LayeredMeshOptions {
  int n_layers = 3;
  double sigma_max = 80.0;
  double omega = 3.0e7;
  int geometry_degree = 4;
  /// Skin band thickness in units of the skin depth at sigma_max.
  double band_factor = 6.0;
  /// Thickness ratio between a layer and the next one away from the interface.
  double grading = 0.5;
  /// Inner block subdivisions; the angular partition has 2 core_r + core_z arcs.
  int core_r = 3;
  int core_z = 6;
};

/// Boundary-layer mesh M_n of a spheroidal configuration (B1, B2, C1, C2): n_layers
/// graded layers in the skin band on the conductor side of the interface, a transition
/// ring, an inner block, and an outer ring up to the outer ellipse.
QuadMesh layered_mesh_B(geometry::ConfigId config, const LayeredMeshOptions& options);

/// Skin band thickness used by layered_mesh_B.
double band_thickness(const LayeredMeshOptions& options);

struct ConformityReport {
  std::size_t interior_facets = 0;
  std::size_t boundary_facets = 0;
  std::size_t interface_facets = 0;
  std::vector<std::string> problems;
  bool ok() const noexcept { return problems.empty(); }
};

/// Checks facet sharing and tagging invariants.
ConformityReport check_conformity(const QuadMesh& mesh);

/// Plain-text "QUADMESH v1" format.
void write_mesh(std::ostream& out, const QuadMesh& mesh);
QuadMesh read_mesh(std::istream& in);

}  // namespace skin::mesh
