#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <optional>
#include <vector>

#include "foldlab/eigensolve.hpp"
#include "foldlab/geometry.hpp"
#include "foldlab/specfun.hpp"

namespace foldlab::testfun {

using geometry::Point;

/// Region on which test-field integrals are taken: a mesh (integrated with
/// a degree-4 rule whose elements are cut along the fold) or an analytic
/// domain (tensor Gauss rule, not split at the fold).
struct FieldDomain {
  int dim = 2;
  double volume = 0.0;
  std::optional<geometry::Mesh> mesh;
  geometry::DomainSpec spec;
  int mesh_degree = 4;
  int analytic_order = 24;

  static FieldDomain from_mesh(const geometry::Mesh& mesh, int degree = 4);
  static FieldDomain from_spec(const geometry::DomainSpec& spec, int order = 24);

  /// Plain rule, or (for meshes) one split by the plane through `origin`
  /// with the given normal.
  geometry::Quadrature rule() const;
  geometry::Quadrature rule(const Point& origin, const Point& normal) const;
  const geometry::Mesh* mesh_ptr() const { return mesh ? &*mesh : nullptr; }
  /// Radius of the ball with half the volume.
  double half_radius() const;
  /// Radius of the ball with the same volume.
  double full_radius() const;
};

struct FoldingFrame {
  Point a = Point::Zero();
  Point b = Point::Zero();
  Point ab = Point::UnitX();  // unit vector from a to b
  Point midpoint = Point::Zero();

  /// Throws DomainError when a and b coincide.
  static FoldingFrame make(const Point& a, const Point& b);
  /// Signed distance to the mediator plane; negative on the a side.
  double side(const Point& x) const { return (x - midpoint).dot(ab); }
  bool on_a_side(const Point& x) const { return side(x) < 0.0; }
};

enum class Side { A, B };

struct TestFieldEvaluation {
  Point value = Point::Zero();
  double gradient_energy_density = 0.0;  // |grad g_AB|^2 = G'^2 + (n-1) G^2/d^2
  Side side = Side::A;
  double distance = 0.0;                  // d_A or d_B
  double profile = 0.0;                   // G(d)
  double profile_slope = 0.0;             // G'(d)
  Point direction = Point::Zero();        // unit (x - center)/d, zero at the center
};

/// g_A(x) = G(d_A)/d_A (x - A), zero at x = A.
Point eval_gA(const specfun::WeinbergerProfile& profile, const Point& a, const Point& x);
/// Reflection across the mediator direction: v - 2 (ab.v) ab.
Point reflect_T_AB(const FoldingFrame& frame, const Point& v);
TestFieldEvaluation eval_gAB(const specfun::WeinbergerProfile& profile, const FoldingFrame& frame,
                             const Point& x);
/// |grad (g_AB . e)|^2 at an evaluated point.
double coordinate_energy_density(const FoldingFrame& frame, const TestFieldEvaluation& ev, int dim,
                                 const Point& e);

struct CenterOfMass {
  Point a = Point::Zero();
  double residual = 0.0;  // ||int g_A|| / (|Omega| G(R))
  int iterations = 0;
  bool used_fallback = false;
};

/// A with int_Omega g_A = 0, for a profile built at the full-volume radius.
CenterOfMass solve_center_of_mass(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
                                  double tol = 1e-9);

struct FoldingResult {
  FoldingFrame frame;
  std::vector<double> residuals;  // 2n scaled residuals: int g.e_i, then int g.e_i f1
  double residual_norm = 0.0;     // max |residual|
  double scale = 0.0;             // |Omega|^{1/2} G(r_Omega)
  int start_index = -1;           // which multistart succeeded
  int evaluations = 0;

  nlohmann::json to_json() const;
};

struct FoldingOptions {
  int starts = 16;
  std::uint64_t seed = 20240611;
  double tol = 1e-6;
  int max_evaluations = 400;  // per start
};

/// Residuals of the folding conditions for a given frame, unscaled.
std::vector<double> folding_residuals(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
                                      const eigensolve::SpectralResult& spectrum, const FoldingFrame& frame);

/// Folding pair (A, B) with g_AB orthogonal to 1 and f1 componentwise. f1 is
/// spectrum eigenfunction 1. Throws SolverError if no start converges.
FoldingResult solve_folding_pair(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
                                 const eigensolve::SpectralResult& spectrum, const FoldingOptions& options = {});

struct BorsukBasis {
  std::vector<Point> e;          // e[0] = e_1, ..., e[n-1] = e_n
  std::vector<double> residuals;  // scaled F_i(e_i) entries, i = 2..n
  double residual_norm = 0.0;
};

/// Orthonormal e_1..e_n with int (g_AB.e_i) f_j = 0 for 2 <= j <= i. n = 2
/// uses bisection on the circle, n = 3 a sphere grid plus Newton refinement.
/// Throws SolverError when the grid misses the zero.
BorsukBasis borsuk_basis(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
                         const eigensolve::SpectralResult& spectrum, const FoldingFrame& frame,
                         double tol = 1e-7, int grid = 4000);

struct Certificate {
  int dim = 2;
  double volume = 0.0;
  double r_omega = 0.0;
  double mu1_ball = 0.0;            // mu_1(B_{r_Omega})
  std::vector<double> mu;           // mu_0 .. mu_{n+1}
  std::vector<double> norm2;        // int phi_i^2, i = 1..n
  std::vector<double> energy;       // int |grad phi_i|^2
  std::vector<double> rayleigh;     // energy / norm2
  std::vector<double> slack;        // sum_{j<=i} (mu_{i+1} - mu_j) <phi_i, f_j>^2
  std::vector<double> coordinate_margin;  // energy + slack - mu_{i+1} norm2
  double lhs = 0.0;                 // sum_{i=2}^n 1/mu_i
  double rhs = 0.0;                 // (n-1)|Omega|^{2/n} / (mu_2(B u B) |B u B|^{2/n})
  double rhs_direct = 0.0;          // (n-1) / mu_1(B_{r_Omega}), must equal rhs
  double intermediate = 0.0;        // int G^2 / int (G'^2 + (n-1) G^2/d^2), both sides
  double margin_chain = 0.0;        // lhs/(n-1) - intermediate
  double margin_mass = 0.0;         // intermediate - 1/mu1_ball
  double margin_total = 0.0;        // lhs - rhs
  double chain_uncertainty = 0.0;   // sum_i slack_i/mu_{i+1} / denominator
  double wang_xia_margin = 0.0;     // algebraic step after dropping the signed term
  double l2_identity_error = 0.0;   // |sum int phi_i^2 - int G^2| relative
  double sign_term_max = 0.0;       // max over nodes inside r of G'^2 - G^2/d^2 (<= 0)
  double folding_residual = 0.0;
  double basis_residual = 0.0;
  int quadrature_nodes = 0;
  std::string quadrature;

  nlohmann::json to_json() const;
};

/// Evaluates the whole inequality chain for the given frame and basis.
/// spectrum must hold at least n + 2 eigenvalues.
Certificate reciprocal_sum_certificate(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
                                       const eigensolve::SpectralResult& spectrum, const FoldingResult& folding,
                                       const BorsukBasis& basis);

}  // namespace foldlab::testfun
