#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace foldlab::geometry {

using Point = Eigen::Vector3d;  // 2D points carry z = 0

struct Disk {
  double radius = 1.0;
};
// Semi-axes a (along x) and b (along y).
struct Ellipse {
  double a = 1.0;
  double b = 1.0;
};
// Side lengths a (along x) and b (along y), centered at the origin.
struct Rectangle {
  double a = 1.0;
  double b = 1.0;
};
struct Ball3 {
  double radius = 1.0;
};
struct Box3 {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
};
// Two disks of radius r centered at (+-(r + neck/2), 0), joined by the strip
// |y| <= eps. The junction is a sharp corner (no fillet).
struct Dumbbell {
  double r = 1.0;
  double eps = 0.1;
  double neck = 0.5;

  double center_offset() const { return r + 0.5 * neck; }
};
// Simple polygon, counter-clockwise.
struct Polygon {
  std::vector<Eigen::Vector2d> vertices;
};

// Rigid motion: rotate by `angle` about the z axis (2D only), then translate.
struct Placement {
  Point offset = Point::Zero();
  double angle = 0.0;

  Point apply(const Point& x) const;
  Point apply_linear(const Point& v) const;
};

struct PlacedDomain;
struct DisjointUnion {
  std::vector<PlacedDomain> parts;
};

using Shape = std::variant<Disk, Ellipse, Rectangle, Ball3, Box3, Dumbbell, Polygon, DisjointUnion>;

struct DomainSpec {
  Shape shape;

  int dim() const;
  bool is_union() const { return std::holds_alternative<DisjointUnion>(shape); }
};

struct PlacedDomain {
  DomainSpec spec;
  Placement placement;
};

DomainSpec make_union(std::vector<PlacedDomain> parts);

/// Throws ValidityError on nonpositive parameters, mixed dimensions, or
/// overlapping union components.
void validate(const DomainSpec& spec);

double volume(const DomainSpec& spec);

struct EquivalentRadii {
  double R;  // ball of volume |Omega|
  double r;  // ball of volume |Omega| / 2
};
EquivalentRadii equivalent_radii(const DomainSpec& spec, int dim);

/// Connected pieces of a domain, flattened through nested unions.
std::vector<PlacedDomain> components(const DomainSpec& spec);

/// Axis-aligned bounding box (min, max corners).
std::pair<Point, Point> bounding_box(const DomainSpec& spec);

/// Inside test (closure).
bool contains(const DomainSpec& spec, const Point& x);

/// Text form understood by parse_domain.
std::string describe(const DomainSpec& spec);

/// Domain strings: disk:R, ellipse:a,b, rectangle:a,b, square:AREA,
/// ball3:R, box3:a,b,c, dumbbell:r,eps,neck, polygon:x,y;x,y;...,
/// lshape:s, union:PART@dx,dy|PART@dx,dy|...
/// Reals accept a `pi` suffix ("2pi", "0.5pi", "pi"). Throws ConfigError.
DomainSpec parse_domain(const std::string& text);

// ---------------------------------------------------------------- meshes

struct Mesh {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> boundary_edges;
  double h = 0.0;  // max element diameter

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  double triangle_area(int t) const;
  double area() const;
  /// Smallest interior angle over all triangles, in degrees.
  double min_angle_degrees() const;
  /// FNV-1a hash of vertex coordinates and connectivity.
  std::uint64_t checksum() const;
  /// Connected-component label per vertex, labels 0..count-1 ordered by
  /// lowest vertex index.
  std::vector<int> vertex_components(int* count = nullptr) const;
};

/// Recomputes h and boundary edges from the triangles.
void finalize_mesh(Mesh& mesh);

/// Checks orientation, index ranges, closed boundary loops. Throws
/// ValidityError.
void check_mesh(const Mesh& mesh);

Mesh generate_mesh(const DomainSpec& spec, double target_h);

void export_mesh(const Mesh& mesh, std::ostream& out);
void export_mesh(const Mesh& mesh, const std::string& path);
Mesh import_mesh(std::istream& in);
Mesh import_mesh(const std::string& path);

// ------------------------------------------------------------ quadrature

struct Quadrature {
  int dim = 2;
  int degree = 0;
  std::vector<Point> nodes;
  std::vector<double> weights;
  // For mesh rules: parent triangle and barycentric coordinates of each node,
  // used to interpolate P1 fields. Empty for analytic rules.
  std::vector<int> parent;
  std::vector<Eigen::Vector3d> barycentric;

  std::size_t size() const { return weights.size(); }
  double total() const;
  /// Values of a P1 nodal field at the quadrature nodes.
  std::vector<double> interpolate(const Mesh& mesh, const Eigen::VectorXd& nodal) const;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Positive-weight rule on the reference triangle exact to `degree` (1..6).
/// Returns barycentric points and weights summing to 1.
void triangle_rule(int degree, std::vector<Eigen::Vector3d>& bary, std::vector<double>& weights);

Quadrature domain_quadrature(const Mesh& mesh, int degree);

/// Same as domain_quadrature, but triangles crossed by the plane
/// {x : (x - origin) . normal = 0} are split so that every node lies on one
/// side of it.
Quadrature cut_domain_quadrature(const Mesh& mesh, int degree, const Point& origin,
                                 const Point& normal);

/// Tensor Gauss rules on the exact analytic region (disk, ellipse,
/// rectangle, ball3, box3 and unions of them). `order` is the number of
/// Gauss points per direction per panel.
Quadrature analytic_quadrature(const DomainSpec& spec, int order);

}  // namespace foldlab::geometry
