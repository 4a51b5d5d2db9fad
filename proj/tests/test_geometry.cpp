#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "foldlab/errors.hpp"
#include "foldlab/geometry.hpp"

using namespace foldlab;
using namespace foldlab::geometry;

namespace {

constexpr double kPi = std::numbers::pi;

DomainSpec two_disks(double gap = 1.0) {
  PlacedDomain a{DomainSpec{Disk{1.0}}, {}};
  PlacedDomain b{DomainSpec{Disk{1.0}}, {}};
  a.placement.offset = Point(-1.0 - 0.5 * gap, 0, 0);
  b.placement.offset = Point(1.0 + 0.5 * gap, 0, 0);
  return make_union({a, b});
}

// Adaptive Simpson, used as an independent oracle for the dumbbell area.
double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 0) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double left = (m - a) / 6 * (fa + 4 * f(lm) + fm);
  const double right = (b - m) / 6 * (fm + 4 * f(rm) + fb);
  if (depth > 40 || std::abs(left + right - whole) < 15 * tol) return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, tol / 2, depth + 1) + simpson(f, m, b, tol / 2, depth + 1);
}

double monomial_exact(int p, int q) {
  // integral of x^p y^q over the reference triangle (0,0),(1,0),(0,1)
  return std::tgamma(p + 1) * std::tgamma(q + 1) / std::tgamma(p + q + 3);
}

}  // namespace

TEST_CASE("volume examples") {
  CHECK(volume(DomainSpec{Disk{1}}) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(volume(two_disks()) == doctest::Approx(2 * kPi).epsilon(1e-15));
  CHECK(volume(DomainSpec{Ellipse{2, 1}}) == doctest::Approx(2 * kPi).epsilon(1e-15));
  CHECK(volume(DomainSpec{Box3{1, 1, 2}}) == doctest::Approx(2.0));
  CHECK(volume(parse_domain("lshape:1")) == doctest::Approx(3.0));
}

TEST_CASE("union volume is additive and overlap is rejected") {
  const auto u = parse_domain("union:disk:1@-2,0|ellipse:0.5,0.25@2,0|rectangle:1,1@0,3");
  CHECK(volume(u) == doctest::Approx(kPi + kPi * 0.125 + 1.0).epsilon(1e-14));
  CHECK_THROWS_AS(volume(two_disks(-0.5)), ValidityError);
  CHECK_THROWS_AS(parse_domain("union:disk:1@0,0|disk:1@1,0"), ConfigError);
  CHECK_THROWS_AS(parse_domain("union:ball3:1@0,0,0|ball3:1@1.5,0,0"), ConfigError);
  CHECK_NOTHROW(parse_domain("union:ball3:1@-1.5,0,0|ball3:1@1.5,0,0"));
}

TEST_CASE("dumbbell volume against adaptive quadrature") {
  for (double eps : {0.5, 0.2, 0.1, 0.05, 0.01}) {
    const Dumbbell d{1.0, eps, 0.5};
    const double c = d.center_offset();
    // width of the region at height y, integrated over y in [-r, r]
    auto width = [&](double y) {
      const double disk = 2.0 * 2.0 * std::sqrt(std::max(0.0, 1.0 - y * y));
      if (std::abs(y) > eps) return disk;
      return disk + 2.0 * (c - std::sqrt(1.0 - y * y));
    };
    const double oracle = simpson(width, -1, -eps, 1e-13) + simpson(width, -eps, eps, 1e-13) +
                          simpson(width, eps, 1, 1e-13);
    CHECK(std::abs(volume(DomainSpec{d}) - oracle) < 1e-10);
  }
  // monotone convergence to two disks
  double prev = 1e300;
  for (double eps : {0.5, 0.2, 0.1, 0.05, 0.01, 1e-4}) {
    const double v = volume(DomainSpec{Dumbbell{1.0, eps, 0.5}});
    CHECK(v < prev);
    CHECK(v > 2 * kPi);
    prev = v;
  }
  CHECK(prev - 2 * kPi < 1e-3);
}

TEST_CASE("equivalent radii") {
  auto r = equivalent_radii(DomainSpec{Disk{1}}, 2);
  CHECK(r.R == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.r == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-15));
  r = equivalent_radii(two_disks(), 2);
  CHECK(r.R == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(r.r == doctest::Approx(1.0).epsilon(1e-15));
  r = equivalent_radii(DomainSpec{Box3{1, 1, 1}}, 3);
  CHECK(r.R == doctest::Approx(std::cbrt(3 / (4 * kPi))).epsilon(1e-14));
  for (const char* s : {"ellipse:1.5,1", "dumbbell:1,0.1,0.5", "lshape:1"}) {
    const auto spec = parse_domain(s);
    const auto er = equivalent_radii(spec, 2);
    CHECK(std::abs(kPi * er.r * er.r - volume(spec) / 2) < 1e-12 * volume(spec));
  }
}

TEST_CASE("domain string parsing") {
  const auto sq = parse_domain("square:2pi");
  CHECK(volume(sq) == doctest::Approx(2 * kPi).epsilon(1e-14));
  CHECK(parse_domain("rectangle:pi,0.5pi").dim() == 2);
  CHECK(parse_domain("box3:1,1,2").dim() == 3);
  CHECK_THROWS_AS(parse_domain("disk"), ConfigError);
  CHECK_THROWS_AS(parse_domain("disk:abc"), ConfigError);
  CHECK_THROWS_AS(parse_domain("disk:-1"), ConfigError);
  CHECK_THROWS_AS(parse_domain("ellipse:1"), ConfigError);
  CHECK_THROWS_AS(parse_domain("torus:1,2"), ConfigError);
  CHECK_THROWS_AS(parse_domain("dumbbell:1,1.5,0.5"), ConfigError);
  // describe/parse round trip
  const auto u = parse_domain("union:disk:1@-2,0|disk:1@2,0");
  CHECK(volume(parse_domain(describe(u))) == doctest::Approx(volume(u)));
}

TEST_CASE("rectangle mesh is exact") {
  const Mesh m = generate_mesh(DomainSpec{Rectangle{kPi, kPi / 2}}, 0.1);
  CHECK(m.h <= 0.1);
  CHECK(m.area() == doctest::Approx(kPi * kPi / 2).epsilon(1e-13));
  CHECK_NOTHROW(check_mesh(m));
  CHECK(m.min_angle_degrees() > 40.0);
}

TEST_CASE("disk mesh converges at second order") {
  double prev_err = 0;
  for (double h : {0.2, 0.1, 0.05}) {
    const Mesh m = generate_mesh(DomainSpec{Disk{1}}, h);
    CHECK(m.h <= h);
    CHECK_NOTHROW(check_mesh(m));
    const double err = kPi - m.area();
    CHECK(err > 0);  // inscribed polygon
    CHECK(err < 2.0 * m.h * m.h);
    for (const auto& e : m.boundary_edges) {
      CHECK(std::abs(m.vertices[e[0]].norm() - 1.0) < 1e-12);
    }
    if (prev_err > 0) CHECK(prev_err / err > 3.0);
    prev_err = err;
  }
}

TEST_CASE("dumbbell mesh quality") {
  const auto spec = DomainSpec{Dumbbell{1.0, 0.05, 0.5}};
  const Mesh m = generate_mesh(spec, 0.02);
  CHECK(m.h <= 0.02);
  CHECK_NOTHROW(check_mesh(m));
  CHECK(m.min_angle_degrees() >= 20.0);
  int comps = 0;
  m.vertex_components(&comps);
  CHECK(comps == 1);
  CHECK(m.area() <= volume(spec));
  CHECK(m.area() > volume(spec) - 0.01);
  // boundary vertices on the analytic boundary
  const double c = 1.25;
  for (const auto& e : m.boundary_edges) {
    const auto& v = m.vertices[e[0]];
    const double on_disk = std::min(std::abs((v - Eigen::Vector2d(c, 0)).norm() - 1.0),
                                    std::abs((v - Eigen::Vector2d(-c, 0)).norm() - 1.0));
    const double on_neck = std::abs(std::abs(v.y()) - 0.05);
    CHECK(std::min(on_disk, on_neck) < 1e-12);
  }
  CHECK_THROWS_AS(generate_mesh(DomainSpec{Dumbbell{1.0, 0.005, 0.5}}, 0.02), MeshRefinementError);
}

TEST_CASE("ellipse, polygon and union meshes") {
  const Mesh e = generate_mesh(DomainSpec{Ellipse{3, 1}}, 0.1);
  CHECK(e.h <= 0.1);
  CHECK(e.area() == doctest::Approx(3 * kPi).epsilon(5e-3));
  const Mesh l = generate_mesh(parse_domain("lshape:1"), 0.1);
  CHECK(l.h <= 0.1);
  CHECK(l.area() == doctest::Approx(3.0).epsilon(1e-13));
  CHECK_NOTHROW(check_mesh(l));
  const Mesh u = generate_mesh(two_disks(), 0.1);
  int comps = 0;
  u.vertex_components(&comps);
  CHECK(comps == 2);
  CHECK_THROWS_AS(generate_mesh(DomainSpec{Ball3{1}}, 0.1), ValidityError);
}

TEST_CASE("triangle rules are exact to their degree") {
  for (int deg = 1; deg <= 6; ++deg) {
    std::vector<Eigen::Vector3d> b;
    std::vector<double> w;
    triangle_rule(deg, b, w);
    for (double wk : w) CHECK(wk > 0);
    for (int p = 0; p <= deg; ++p) {
      for (int q = 0; p + q <= deg; ++q) {
        double s = 0;
        for (std::size_t k = 0; k < w.size(); ++k) s += 0.5 * w[k] * std::pow(b[k][1], p) * std::pow(b[k][2], q);
        CHECK(std::abs(s - monomial_exact(p, q)) < 1e-14);
      }
    }
  }
  std::vector<Eigen::Vector3d> b;
  std::vector<double> w;
  CHECK_THROWS_AS(triangle_rule(7, b, w), RangeError);
}

TEST_CASE("gauss legendre") {
  std::vector<double> x, w;
  for (int n : {1, 2, 5, 20, 64}) {
    gauss_legendre(n, x, w);
    double s = 0;
    for (double v : w) s += v;
    CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
    // exact for x^(2n-2)
    double m = 0;
    for (int k = 0; k < n; ++k) m += w[k] * std::pow(x[k], 2 * n - 2);
    CHECK(m == doctest::Approx(2.0 / (2 * n - 1)).epsilon(1e-13));
  }
}

TEST_CASE("mesh quadrature examples") {
  const Mesh m = generate_mesh(DomainSpec{Disk{1}}, 0.05);
  const Quadrature q = domain_quadrature(m, 4);
  CHECK(q.total() == doctest::Approx(m.area()).epsilon(1e-12));
  double mx = 0, r2 = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    mx += q.weights[k] * q.nodes[k].x();
    r2 += q.weights[k] * q.nodes[k].squaredNorm();
  }
  CHECK(std::abs(mx) < 1e-13);
  CHECK(std::abs(r2 - kPi / 2) < 2 * m.h * m.h);

  // cut rule: same total, nodes strictly on one side
  const Point o(0.123, -0.05, 0), n = Point(1, 2, 0).normalized();
  const Quadrature c = cut_domain_quadrature(m, 4, o, n);
  CHECK(c.total() == doctest::Approx(m.area()).epsilon(1e-12));
  for (const auto& x : c.nodes) CHECK(std::abs((x - o).dot(n)) > 0);
  // interpolation of a linear field is exact
  Eigen::VectorXd lin(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) lin[v] = 2 * m.vertices[v].x() - m.vertices[v].y();
  const auto vals = c.interpolate(m, lin);
  for (std::size_t k = 0; k < c.size(); ++k) {
    CHECK(vals[k] == doctest::Approx(2 * c.nodes[k].x() - c.nodes[k].y()).epsilon(1e-12));
  }
}

TEST_CASE("analytic quadrature") {
  const auto q = analytic_quadrature(DomainSpec{Disk{1}}, 24);
  CHECK(q.total() == doctest::Approx(kPi).epsilon(1e-14));
  double r2 = 0;
  for (std::size_t k = 0; k < q.size(); ++k) r2 += q.weights[k] * q.nodes[k].squaredNorm();
  CHECK(r2 == doctest::Approx(kPi / 2).epsilon(1e-14));
  CHECK(analytic_quadrature(DomainSpec{Ball3{1}}, 16).total() == doctest::Approx(4 * kPi / 3).epsilon(1e-14));
  CHECK(analytic_quadrature(parse_domain("box3:1,1,2"), 4).total() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(analytic_quadrature(parse_domain("ellipse:2,1"), 8).total() == doctest::Approx(2 * kPi).epsilon(1e-14));
  CHECK(analytic_quadrature(two_disks(), 8).total() == doctest::Approx(2 * kPi).epsilon(1e-14));
}

TEST_CASE("mesh export/import round trip") {
  const Mesh m = generate_mesh(DomainSpec{Disk{1}}, 0.2);
  std::stringstream ss;
  export_mesh(m, ss);
  const Mesh r = import_mesh(ss);
  REQUIRE(r.num_vertices() == m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) {
    CHECK(r.vertices[v].x() == m.vertices[v].x());
    CHECK(r.vertices[v].y() == m.vertices[v].y());
  }
  CHECK(r.triangles == m.triangles);
  CHECK(r.checksum() == m.checksum());
}

TEST_CASE("mesh import validation") {
  const std::string negative =
      "mesh2d 3 1 3\n0 0\n1 0\n0 1\n0 2 1\n0 2\n2 1\n1 0\n";
  std::istringstream a(negative);
  try {
    import_mesh(a);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
  }
  const std::string dangling = "# comment\nmesh2d 3 1 3\n0 0\n1 0\n0 1\n0 1 7\n0 1\n1 2\n2 0\n";
  std::istringstream b(dangling);
  try {
    import_mesh(b);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 6);
  }
  std::istringstream c("mesh2d 2\n");
  CHECK_THROWS_AS(import_mesh(c), ParseError);
  std::istringstream d("mesh2d 3 1 3\n0 0\n1 zero\n0 1\n0 1 2\n0 1\n1 2\n2 0\n");
  CHECK_THROWS_AS(import_mesh(d), ParseError);
}
