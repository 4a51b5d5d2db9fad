#pragma once

#include <vector>

namespace foldlab::specfun {

inline constexpr double kBesselMaxOrder = 60.0;
inline constexpr double kBesselMaxArg = 1.0e4;

/// Bessel function of the first kind J_order(x) for order in [0, 60] and
/// x in [0, 1e4]. Absolute error is below 1e-12 on that box; anything
/// outside throws RangeError.
double bessel_j(double order, double x);

/// d/dx J_order(x), from J' = (order/x) J_order - J_{order+1}.
double bessel_j_derivative(double order, double x);

/// Gamma function for 0 < x. Overflows to +inf past x ~ 171.6; use
/// log_gamma there.
double gamma_fn(double x);
double log_gamma(double x);

/// |B^n|, volume of the unit ball in R^n.
double unit_ball_volume(int n);
/// w_n = |S^n|, area of the unit n-sphere in R^{n+1}.
double sphere_volume(int n);

/// First `count` positive roots s of the Neumann condition for the radial
/// profile t^{1-dim/2} J_{ell+dim/2-1}(s t) at t = 1. The eigenvalues of the
/// unit ball in R^dim with angular order ell are the squares of these roots.
/// For ell = 0 the trivial root s = 0 (constant mode) is not returned.
std::vector<double> neumann_radial_roots(int dim, int ell, int count);

/// First nonzero Neumann eigenvalue of the ball of radius `radius` in R^dim,
/// 2 <= dim <= 10.
double neumann_ball_mu1(int dim, double radius);

/// K_n = (n+1)/n * (Gamma(n) Gamma((n+1)/2) / (Gamma(n+1/2) Gamma(n/2)))^{2/n}
double kn_constant(int n);

/// Radial profile G_R of the Weinberger test field on a ball of radius R:
/// G(t) = t^{1-n/2} J_{n/2}(sqrt(mu1) t) on [0, R], frozen at G(R) past R.
class WeinbergerProfile {
 public:
  WeinbergerProfile(int dim, double radius);

  int dim() const { return dim_; }
  double radius() const { return radius_; }
  double mu1_ball() const { return mu1_; }

  double eval(double t) const;
  double deriv(double t) const;

  /// G'(0+), the slope of the profile at the origin.
  double deriv_at_origin() const { return prefactor_; }
  /// G(R), the plateau value.
  double plateau() const { return plateau_; }

 private:
  double inner_eval(double t) const;
  double inner_deriv(double t) const;

  int dim_;
  double radius_;
  double mu1_;
  double wavenumber_;
  double order_;
  double prefactor_;  // (k/2)^nu / Gamma(nu+1)
  double plateau_;
};

WeinbergerProfile weinberger_profile(int dim, double radius);

}  // namespace foldlab::specfun
