#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "foldlab/eigensolve.hpp"

namespace foldlab::sphere {

using Vec = Eigen::VectorXd;

/// phi_xi(x) = xi + (1 - |xi|^2)/|x + xi|^2 (x + xi). Needs |x| = 1 and
/// |xi| <= 1 - 1e-10; throws DomainError if |x + xi| < 1e-12.
Vec mobius(const Vec& xi, const Vec& x);
/// Conformal factor of phi_xi at x: (1 - |xi|^2)/|x + xi|^2.
double mobius_factor(const Vec& xi, const Vec& x);
/// R_p(x) = x - 2 <x, p> p.
Vec reflect(const Vec& p, const Vec& x);

/// Weighted point cloud on S^n (nodes are unit vectors in R^{n+1}).
struct SphereMeasure {
  int dim = 2;
  std::vector<Vec> nodes;
  std::vector<double> weights;

  double total() const;
  /// Nonnegative weights, positive total, every atom below half the mass.
  /// Nodes that coincide count as one atom.
  void validate() const;
};

struct CenterOfMass {
  Vec xi;
  double residual = 0.0;   // ||int phi_xi dmu|| / total
  int iterations = 0;
  double start_gap = 0.0;  // distance between the two independent solves
};

/// xi with int phi_xi dmu = 0. Newton with a finite-difference Jacobian and
/// backtracking that keeps |xi| < 1. With `check_uniqueness` a second solve
/// from another start must land within 1e-8.
CenterOfMass sphere_center_of_mass(const SphereMeasure& measure, double tol = 1e-10,
                                   bool check_uniqueness = true, const Vec* start = nullptr);

/// Cap C_(p,t) = phi_{-tp}({<x,p> > 0}) = {<x,p> > -2t/(1+t^2)}.
struct Cap {
  Vec p;
  double t = 0.0;

  /// Normalizes p; t must lie in (-1, 1).
  static Cap make(const Vec& p, double t);
  /// Height of the boundary circle along p.
  double boundary_height() const { return -2.0 * t / (1.0 + t * t); }
  /// Membership through the pullback <phi_{tp}(x), p> > 0.
  bool contains(const Vec& x) const;
};

/// tau_C = phi_{-tp} o R_p o phi_{tp}.
Vec cap_reflection(const Cap& cap, const Vec& x);
/// Conformal factor of tau_C at x.
double cap_reflection_factor(const Cap& cap, const Vec& x);
/// x inside C, tau_C(x) otherwise.
Vec fold_map(const Cap& cap, const Vec& x);

/// Tensor rule on S^n (n = 2, 3): Gauss-Legendre in the polar angle about
/// `axis` (weight sin^{n-1}), uniform in the remaining angles. If `split`
/// is given the polar range is cut at the circle <x, axis> = split, so a
/// function smooth on both sides is integrated to full accuracy.
struct SphereGrid {
  int dim = 2;
  std::vector<Vec> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};
SphereGrid polar_grid(int dim, int polar, const Vec& axis, std::optional<double> split = std::nullopt);
/// Rule used by the S^2 Galerkin solver: 2L+2 Gauss-Legendre nodes in cos(theta)
/// and 2(2L+1) uniform azimuths; `refine` multiplies both counts.
SphereGrid galerkin_grid(int L, int refine = 1);

/// Conformal factor u of g = e^{2u} g0 on S^2 (or S^n for bumps).
struct Bump {
  Vec center;  // unit vector
  double amplitude = 0.0;
  double width = 1.0;
};

struct ConformalFactor {
  enum class Kind { Harmonic, Bumps, Bubbles };
  Kind kind = Kind::Harmonic;
  int dim = 2;
  struct Term {
    int l = 0, m = 0;
    double value = 0.0;
  };
  std::vector<Term> coeffs;  // real spherical harmonics, see real_sh
  std::vector<Bump> bumps;   // u = sum a exp(-dist^2/w^2), geodesic dist
  // e^{2u} = sum_c lambda_c^2 with lambda_c the conformal factor of
  // phi_{-s c}; one center gives a round metric, two equal ones pinch into
  // two round spheres as s -> 1.
  std::vector<Vec> centers;
  double concentration = 0.0;

  static ConformalFactor round(int dim = 2);
  static ConformalFactor harmonic(std::vector<Term> coeffs);
  static ConformalFactor bump(const Vec& center, double amplitude, double width);
  static ConformalFactor multi_bump(std::vector<Bump> bumps);
  static ConformalFactor bubbles(std::vector<Vec> centers, double concentration);

  /// {"type":"harmonic","coeffs":[[l,m,v],...]}, {"type":"bump","center":[..],
  /// "amplitude":a,"width":w}, {"type":"bumps","bumps":[{bump},...]} or
  /// {"type":"bubbles","centers":[[..],..],"concentration":s}.
  /// Throws ConfigError on malformed input.
  static ConformalFactor from_json(const nlohmann::json& j);
  static ConformalFactor from_file(const std::string& path);
  nlohmann::json to_json() const;
  std::string describe() const;

  double u(const Vec& x) const;
  /// e^{n u(x)}, the volume density against dv_0.
  double density(const Vec& x) const;
};

/// vol(S^n, e^{2u} g0) on a polar grid with the given resolution.
double metric_volume(const ConformalFactor& u, int polar = 96);

struct EnergyResult {
  double value = 0.0;
  double error_estimate = 0.0;  // |E(N) - E(N/2)|
  bool resolved = true;         // error_estimate below the target accuracy
  int nodes = 0;
};

/// int_{S^n} |grad_0 (X_v o phi_xi o F_C)|^n dv_0 for n = 2, 3. With a cap
/// the grid is split along its boundary. resolved = false flags a grid that
/// misses 1e-8 (n = 2) or 1e-6 (n = 3) by its own doubling estimate.
EnergyResult conformal_energy(int dim, const Vec& xi, const std::optional<Cap>& cap, const Vec& v,
                              int polar = 64);
/// I_n = w_{n-1} sqrt(pi) Gamma(n)/Gamma(n + 1/2), the unfolded energy.
double coordinate_energy(int dim);
/// (n/(n+1)) K_n w_n^{2/n}.
double coordinate_energy_identity(int dim);

/// Index of (l, m) in the lexicographic real harmonic basis: l^2 + l + m.
inline int sh_index(int l, int m) { return l * l + l + m; }
/// All real spherical harmonics of degree <= L at the unit vector x, written to
/// out[0 .. (L+1)^2). Orthonormal on S^2, no Condon-Shortley phase:
/// Y_{1,-1}, Y_{1,0}, Y_{1,1} are sqrt(3/4pi) times y, z, x.
void real_sh(int L, const Vec& x, double* out);
/// Rows are nodes, columns basis functions.
Eigen::MatrixXd real_sh_matrix(int L, const std::vector<Vec>& nodes);
/// sum_k c_k Y_k(x); L is inferred from c.size() = (L+1)^2.
double eval_sh_series(const Eigen::VectorXd& c, const Vec& x);
int sh_degree(Eigen::Index size);

/// Galerkin spectrum of -Delta_g on S^2 in the real harmonics of degree <= L:
/// eigenvalues lambda_0 .. lambda_k with coefficient vectors (L^2(g)
/// orthonormal, largest entry positive) as eigenfunctions. Throws
/// ConfigError if the mass matrix is not positive definite.
eigensolve::SpectralResult s2_conformal_spectrum(const ConformalFactor& u, int L, int k);
/// Largest entry change of the mass matrix when the Galerkin grid is doubled.
double mass_quadrature_error(const ConformalFactor& u, int L);

struct CapCenterOptions {
  int polar = 48;  // Gauss nodes per band; azimuths are 2x this
  int starts = 12;
  std::uint64_t seed = 20240611;
  double tol = 1e-6;     // on residuals scaled by the total mass
  double delta = 1e-3;   // t stays in (-1 + delta, 1 - delta)
  int max_evaluations = 300;
};

struct CapCenter {
  Cap cap;
  Vec xi;
  std::vector<double> residuals;  // int X_v o phi o F dmu, then times f1; over total
  double residual_norm = 0.0;
  double total = 0.0;
  double boundary_proximity = 0.0;  // 1 - |t|
  int start_index = -1;
  int evaluations = 0;

  nlohmann::json to_json() const;
};

/// Cap-adapted rule for the measure e^{2u} dv_0: nodes, weights with the
/// density folded in.
SphereMeasure cap_measure(const ConformalFactor& u, const Cap& cap, int polar);
/// Scaled residuals of both orthogonality conditions for a given cap and xi.
std::vector<double> cap_center_residuals(const ConformalFactor& u, const Eigen::VectorXd& f1, const Cap& cap,
                                         const Vec& xi, int polar = 48);
/// Cap C and xi = center of mass of (F_C)_* mu such that X_v o phi_xi o F_C is
/// orthogonal to 1 and f1 for every v. f1 holds harmonic coefficients.
CapCenter solve_cap_and_center(const ConformalFactor& u, const Eigen::VectorXd& f1,
                               const CapCenterOptions& options = {});

struct CoordinateChain {
  Vec xi;
  std::vector<Vec> basis;          // e_1 .. e_3
  std::vector<double> norm2;       // int X_{e_i}^2 o Phi dv_g
  std::vector<double> energy;      // int |grad (X_{e_i} o Phi)|^2 dv_g
  std::vector<double> coordinate_margin;  // energy - lambda norm2
  double volume_identity_error = 0.0;      // |sum norm2 - area| / area
  double chain_margin = 0.0;       // sum energy/lambda - area
  double energy_check = 0.0;       // Hersch: max |E_i - I_2|; folded: max E_i / (2 I_2)
  nlohmann::json to_json() const;
};

struct SphereCertificate {
  std::string metric;
  int L = 20;
  double area = 0.0;
  std::vector<double> lambda;  // lambda_0 .. lambda_4
  double hersch_lhs = 0.0, hersch_rhs = 0.0, hersch_margin = 0.0;
  double fold_lhs = 0.0, fold_rhs = 0.0, fold_margin = 0.0;
  double hersch_truncation = 0.0;  // |lhs(L) - lhs(L - 2)|
  double fold_truncation = 0.0;
  double quadrature_error = 0.0;
  std::optional<CoordinateChain> hersch_chain;
  std::optional<CoordinateChain> fold_chain;
  std::optional<CapCenter> cap;

  nlohmann::json to_json() const;
};

struct SphereCheckOptions {
  int L = 20;
  int truncation_step = 2;
  bool chains = true;  // also rebuild the test functions of both proofs
  int energy_polar = 64;
  CapCenterOptions cap;
};

/// Sum_{1..3} 1/lambda_i against 3 A/(8 pi) and sum_{2..4} 1/lambda_i against
/// 3 A/(16 pi), plus the coordinate test-function chains behind them.
SphereCertificate verify_sphere_theorems(const ConformalFactor& u, const SphereCheckOptions& options = {});

}  // namespace foldlab::sphere
