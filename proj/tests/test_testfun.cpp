#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "foldlab/errors.hpp"
#include "foldlab/testfun.hpp"

using namespace foldlab;
using namespace foldlab::testfun;

namespace {

constexpr double kPi = std::numbers::pi;

Point rand_point(std::mt19937_64& rng, int dim, double s = 2.0) {
  std::uniform_real_distribution<double> u(-s, s);
  Point p = Point::Zero();
  for (int i = 0; i < dim; ++i) p[i] = u(rng);
  return p;
}

// Radial integrals over the ball B_R in R^n of G^2 and of the energy density,
// by composite Gauss-Legendre in t with the surface factor.
std::pair<double, double> ball_quotient_parts(const specfun::WeinbergerProfile& g, bool with_t2) {
  const int n = g.dim();
  std::vector<double> x, w;
  geometry::gauss_legendre(40, x, w);
  double num = 0.0, den = 0.0;
  const double R = g.radius();
  for (int p = 0; p < 8; ++p) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double t = R * (p + 0.5 * (x[k] + 1.0)) / 8.0;
      const double wt = 0.5 * R / 8.0 * w[k] * std::pow(t, n - 1);
      const double G = g.eval(t), Gp = g.deriv(t);
      num += wt * G * G;
      den += wt * (Gp * Gp + (n - 1) * G * G / (with_t2 ? t * t : 1.0));
    }
  }
  return {num, den};
}

}  // namespace

TEST_CASE("g_A examples") {
  const auto g = specfun::weinberger_profile(2, 1.0);
  const Point a(0.3, -0.2, 0.0);
  CHECK(eval_gA(g, a, a).norm() == 0.0);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    const Point x = rand_point(rng, 2);
    CHECK(eval_gA(g, a, x).norm() == doctest::Approx(g.eval((x - a).norm())).epsilon(1e-14));
  }
  CHECK(eval_gA(g, a, a + Point(2.0, 0, 0)).norm() == doctest::Approx(g.plateau()).epsilon(1e-15));
}

TEST_CASE("reflection T_AB") {
  const auto f = FoldingFrame::make(Point(0, 0, 0), Point(1, 2, 0.5));
  CHECK((reflect_T_AB(f, f.ab) + f.ab).norm() < 1e-15);
  const Point perp = f.ab.cross(Point(0, 0, 1)).normalized();
  CHECK((reflect_T_AB(f, perp) - perp).norm() < 1e-15);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const Point v = rand_point(rng, 3);
    CHECK((reflect_T_AB(f, reflect_T_AB(f, v)) - v).norm() < 1e-14);
    CHECK(reflect_T_AB(f, v).norm() == doctest::Approx(v.norm()).epsilon(1e-14));
  }
  CHECK_THROWS_AS(FoldingFrame::make(Point(1, 1, 0), Point(1, 1, 0)), DomainError);
}

TEST_CASE("g_AB is continuous across the mediator") {
  std::mt19937_64 rng(3);
  for (int dim : {2, 3}) {
    const auto g = specfun::weinberger_profile(dim, 0.8);
    const auto f = FoldingFrame::make(rand_point(rng, dim, 1.0), rand_point(rng, dim, 1.0));
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      Point x = f.midpoint + rand_point(rng, dim);
      x -= f.side(x) * f.ab;  // project onto the hyperplane
      const Point from_a = eval_gA(g, f.a, x);
      const Point from_b = reflect_T_AB(f, eval_gA(g, f.b, x));
      worst = std::max(worst, (from_a - from_b).norm());
    }
    CHECK(worst < 1e-10);
    CHECK(eval_gAB(g, f, f.a).value.norm() == 0.0);
  }
}

TEST_CASE("energy densities match finite differences and sum to |grad g|^2") {
  std::mt19937_64 rng(4);
  for (int dim : {2, 3}) {
    const auto g = specfun::weinberger_profile(dim, 1.0);
    const auto f = FoldingFrame::make(Point(-0.7, 0.1, 0.0), Point(0.8, -0.2, dim == 3 ? 0.3 : 0.0));
    for (int k = 0; k < 40; ++k) {
      const Point x = rand_point(rng, dim, 1.5);
      if (std::abs(f.side(x)) < 1e-3) continue;
      const auto ev = eval_gAB(g, f, x);
      double total = 0.0;
      for (int i = 0; i < dim; ++i) {
        const Point e = Point::Unit(i);
        // central differences of phi = g_AB . e
        double grad2 = 0.0;
        const double h = 1e-6;
        for (int c = 0; c < dim; ++c) {
          const Point d = h * Point::Unit(c);
          const double der = (eval_gAB(g, f, x + d).value.dot(e) - eval_gAB(g, f, x - d).value.dot(e)) / (2 * h);
          grad2 += der * der;
        }
        const double dens = coordinate_energy_density(f, ev, dim, e);
        CHECK(dens == doctest::Approx(grad2).epsilon(1e-6).scale(1e-8));
        total += dens;
      }
      CHECK(total == doctest::Approx(ev.gradient_energy_density).epsilon(1e-13));
      CHECK(ev.gradient_energy_density >= 0.0);
    }
  }
}

TEST_CASE("profile sign property and the ball quotient") {
  for (int dim : {2, 3, 4}) {
    const auto g = specfun::weinberger_profile(dim, 1.3);
    for (int k = 1; k <= 200; ++k) {
      const double t = 1.3 * k / 200.0;
      CHECK(g.deriv(t) * g.deriv(t) - std::pow(g.eval(t) / t, 2) <= 1e-15);
    }
    // int G^2 / int (G'^2 + (n-1) G^2 / t^2) = 1/mu_1(B_R)
    const auto [num, den] = ball_quotient_parts(g, true);
    CHECK(num / den == doctest::Approx(1.0 / g.mu1_ball()).epsilon(1e-12));
    // dropping the 1/t^2 breaks the identity
    const auto [num2, den2] = ball_quotient_parts(g, false);
    CHECK(std::abs(num2 / den2 - 1.0 / g.mu1_ball()) > 1e-3);
  }
}

TEST_CASE("center of mass of symmetric domains") {
  for (const char* d : {"disk:1", "rectangle:2,1", "ellipse:2,1", "union:disk:0.7@0.4,-0.3"}) {
    CAPTURE(d);
    const auto spec = geometry::parse_domain(d);
    const auto dom = FieldDomain::from_spec(spec);
    const auto g = specfun::weinberger_profile(2, dom.full_radius());
    const auto c = solve_center_of_mass(dom, g);
    CHECK(c.residual <= 1e-9);
    const auto box = geometry::bounding_box(spec);
    const Point center = 0.5 * (box.first + box.second);
    CHECK((c.a - center).norm() < 1e-8);
  }
}

TEST_CASE("folding pair for two disjoint disks sits at the centers") {
  const auto spec = geometry::parse_domain("union:disk:1@-1.5,0|disk:1@1.5,0");
  const auto dom = FieldDomain::from_spec(spec);
  const auto g = specfun::weinberger_profile(2, dom.half_radius());
  CHECK(dom.half_radius() == doctest::Approx(1.0).epsilon(1e-14));
  const auto sp = eigensolve::analytic_spectrum(spec, 6);
  const auto frame = FoldingFrame::make(Point(-1.5, 0, 0), Point(1.5, 0, 0));
  for (double r : folding_residuals(dom, g, sp, frame)) CHECK(std::abs(r) < 1e-13);

  const auto fold = solve_folding_pair(dom, g, sp);
  CHECK(fold.residual_norm <= 1e-6);
  CHECK(fold.residuals.size() == 4);
}

TEST_CASE("mirror-symmetric frame on a rectangle") {
  const auto spec = geometry::parse_domain("rectangle:pi,0.5pi");
  const auto mesh = geometry::generate_mesh(spec, 0.05);
  const auto dom = FieldDomain::from_mesh(mesh);
  const auto g = specfun::weinberger_profile(2, dom.half_radius());
  const auto sp = eigensolve::analytic_spectrum(spec, 4);
  // f1 = -sin x is odd across the short axis x = 0; A and B mirror images.
  const auto frame = FoldingFrame::make(Point(-0.9, 0, 0), Point(0.9, 0, 0));
  const auto r = folding_residuals(dom, g, sp, frame);
  // The triangulation is not mirror symmetric, so odd integrands vanish
  // only up to the degree-4 rule's error on these non-polynomial fields.
  CHECK(std::abs(r[1]) < 1e-9);  // int g.e2: odd in y
  CHECK(std::abs(r[2]) < 1e-9);  // int g.e1 f1: even times odd in x
  CHECK(std::abs(r[3]) < 1e-9);  // int g.e2 f1: odd in y
  CHECK(std::abs(r[0]) > 1e-3);   // int g.e1 is even in x; it fixes the spacing

  const auto fold = solve_folding_pair(dom, g, sp);
  CHECK(fold.residual_norm <= 1e-6);
  CHECK(std::abs(fold.frame.a.y()) < 1e-4);
  CHECK(fold.frame.a.x() == doctest::Approx(-fold.frame.b.x()).epsilon(1e-4));
}

TEST_CASE("Borsuk basis in two dimensions") {
  const auto spec = geometry::parse_domain("union:disk:1@-1.5,0|disk:1@1.5,0");
  const auto dom = FieldDomain::from_spec(spec);
  const auto g = specfun::weinberger_profile(2, dom.half_radius());
  const auto sp = eigensolve::analytic_spectrum(spec, 6);
  const auto frame = FoldingFrame::make(Point(-1.5, 0, 0), Point(1.5, 0, 0));
  const auto b = borsuk_basis(dom, g, sp, frame);
  CHECK(b.residual_norm <= 1e-7);
  CHECK(std::abs(b.e[0].dot(b.e[1])) < 1e-15);
  CHECK(b.e[1].norm() == doctest::Approx(1.0).epsilon(1e-15));
  // symmetric configuration: e2 is along the axis or across it
  CHECK(std::min(std::abs(b.e[1].x()), std::abs(b.e[1].y())) < 1e-9);
}

TEST_CASE("Borsuk basis in three dimensions agrees with the linear-algebra solution") {
  const auto spec = geometry::parse_domain("union:box3:1,1.2,0.9@-1,0,0|box3:1.1,0.8,1@1.2,0.3,0");
  const auto dom = FieldDomain::from_spec(spec, 12);
  const auto g = specfun::weinberger_profile(3, dom.half_radius());
  const auto sp = eigensolve::analytic_spectrum(spec, 6);
  const auto frame = FoldingFrame::make(Point(-1.1, 0.1, 0.05), Point(1.1, 0.2, -0.1));
  const auto b = borsuk_basis(dom, g, sp, frame);
  CHECK(b.residual_norm < 1e-7);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(std::abs(b.e[i].dot(b.e[j]) - (i == j ? 1.0 : 0.0)) < 1e-12);
  }
  // F_3 is linear in p: its zero is the normal of the two moment vectors.
  const auto q = dom.rule();
  Point v2 = Point::Zero(), v3 = Point::Zero();
  const auto f2 = sp.sample(2, q), f3 = sp.sample(3, q);
  for (std::size_t k = 0; k < q.size(); ++k) {
    const Point gv = eval_gAB(g, frame, q.nodes[k]).value;
    v2 += q.weights[k] * f2[k] * gv;
    v3 += q.weights[k] * f3[k] * gv;
  }
  const Point normal = v2.cross(v3).normalized();
  CHECK(std::abs(std::abs(normal.dot(b.e[2])) - 1.0) < 1e-9);
}

TEST_CASE("certificate: two disks are the equality case") {
  const auto spec = geometry::parse_domain("union:disk:1@-1.5,0|disk:1@1.5,0");
  const auto dom = FieldDomain::from_spec(spec);
  const auto g = specfun::weinberger_profile(2, dom.half_radius());
  const auto sp = eigensolve::analytic_spectrum(spec, 6);
  const auto fold = solve_folding_pair(dom, g, sp);
  const auto basis = borsuk_basis(dom, g, sp, fold.frame);
  const auto c = reciprocal_sum_certificate(dom, g, sp, fold, basis);
  CHECK(c.lhs == doctest::Approx(1.0 / 3.38995771667188873).epsilon(1e-12));
  CHECK(c.rhs == doctest::Approx(c.lhs).epsilon(1e-12));
  CHECK(c.rhs == doctest::Approx(c.rhs_direct).epsilon(1e-13));
  CHECK(std::abs(c.margin_total) < 1e-12);
  CHECK(c.intermediate == doctest::Approx(1.0 / c.mu1_ball).epsilon(1e-9));
  CHECK(c.l2_identity_error < 1e-12);
  CHECK(c.sign_term_max <= 0.0);
  CHECK(c.wang_xia_margin >= -1e-12);
  const auto j = c.to_json();
  CHECK(j.contains("margin_chain"));
}

TEST_CASE("certificate: square of area 2 pi has a positive margin") {
  const auto spec = geometry::parse_domain("square:2pi");
  const auto mesh = geometry::generate_mesh(spec, 0.05);
  const auto dom = FieldDomain::from_mesh(mesh);
  const auto g = specfun::weinberger_profile(2, dom.half_radius());
  const auto sp = eigensolve::analytic_spectrum(spec, 5);
  const auto fold = solve_folding_pair(dom, g, sp);
  const auto basis = borsuk_basis(dom, g, sp, fold.frame);
  const auto c = reciprocal_sum_certificate(dom, g, sp, fold, basis);
  // mu_2 = pi^2 / (2 pi) = pi / 2
  CHECK(c.lhs == doctest::Approx(2.0 / kPi).epsilon(1e-13));
  CHECK(c.rhs == doctest::Approx(1.0 / 3.38995771667188873).epsilon(1e-12));
  CHECK(c.margin_total > 0.3);
  CHECK(c.margin_chain >= -c.chain_uncertainty - 1e-9);
  CHECK(c.margin_mass > 0.0);
  for (double m : c.coordinate_margin) CHECK(m >= -1e-9);
}

TEST_CASE("certificate from a FEM spectrum") {
  const auto spec = geometry::parse_domain("ellipse:1.6,1");
  const auto mesh = geometry::generate_mesh(spec, 0.05);
  const auto sp = eigensolve::fem_spectrum(mesh, 5, 1e-9);
  const auto dom = FieldDomain::from_mesh(mesh);
  const auto g = specfun::weinberger_profile(2, dom.half_radius());
  const auto fold = solve_folding_pair(dom, g, sp);
  const auto basis = borsuk_basis(dom, g, sp, fold.frame);
  const auto c = reciprocal_sum_certificate(dom, g, sp, fold, basis);
  CHECK(c.margin_total > 0.0);
  CHECK(c.margin_mass > 0.0);
  CHECK(c.margin_chain >= -c.chain_uncertainty - 1e-9);
  CHECK(c.l2_identity_error < 1e-10);
  // the frame makes phi_i orthogonal to f_0 and f_1 up to the folding residual
  CHECK(c.slack[0] < 1e-8);

  eigensolve::SpectralResult short_sp = sp;
  short_sp.eigenvalues.resize(2);
  short_sp.eigenfunctions.resize(2);
  CHECK_THROWS_AS(reciprocal_sum_certificate(dom, g, short_sp, fold, basis), PreconditionError);
}
