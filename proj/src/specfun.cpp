#include "foldlab/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "foldlab/errors.hpp"

namespace foldlab::specfun {

namespace {

constexpr double kPi = std::numbers::pi;

// Lanczos approximation, g = 7, nine terms.
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

double lanczos_sum(double xm1) {
  double a = kLanczos[0];
  for (int i = 1; i < 9; ++i) a += kLanczos[i] / (xm1 + i);
  return a;
}

// Sum_j (-z^2/4)^j Gamma(nu+1) / (j! Gamma(j+nu+1)), so that
// J_nu(z) = (z/2)^nu / Gamma(nu+1) * series_ratio(nu, z).
double series_ratio(double nu, double z) {
  const double q = -0.25 * z * z;
  double term = 1.0;
  double sum = 1.0;
  double peak = 1.0;
  for (int j = 1; j < 1000; ++j) {
    term *= q / (j * (j + nu));
    sum += term;
    peak = std::max(peak, std::abs(term));
    if (std::abs(term) < 1e-18 * peak && j > 0.5 * z) break;
  }
  return sum;
}

double series_prefactor(double nu, double x) {
  if (nu == 0.0) return 1.0;
  return std::exp(nu * std::log(0.5 * x) - log_gamma(nu + 1.0));
}

// Hankel expansion for x large compared to nu^2.
double bessel_asymptotic(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  const double eightx = 8.0 * x;
  double a = 1.0;
  double p = 1.0;
  double q = 0.0;
  double last = 1.0;
  for (int k = 1; k < 400; ++k) {
    const double odd = 2.0 * k - 1.0;
    a *= (mu - odd * odd) / (k * eightx);
    const double mag = std::abs(a);
    if (mag > last && k > nu + 1.0) break;  // series has started to diverge
    last = mag;
    if (k % 2 == 1) {
      q += ((k / 2) % 2 == 0 ? a : -a);
    } else {
      p += ((k / 2) % 2 == 0 ? a : -a);
    }
    if (mag < 1e-18) break;
  }
  const double phase = (0.5 * nu + 0.25) * kPi;
  const double c = std::cos(x) * std::cos(phase) + std::sin(x) * std::sin(phase);
  const double s = std::sin(x) * std::cos(phase) - std::cos(x) * std::sin(phase);
  return std::sqrt(2.0 / (kPi * x)) * (p * c - q * s);
}

// Miller backward recurrence normalised by
// (x/2)^nu0 = sum_k (nu0 + 2k) Gamma(nu0 + k) / k! J_{nu0+2k}(x).
double bessel_miller(double nu, double x) {
  const int m = static_cast<int>(std::floor(nu));
  const double nu0 = nu - m;
  const double reach = std::max(x, static_cast<double>(m));
  int top = static_cast<int>(reach + 40.0 + 12.0 * std::cbrt(reach));
  top += top % 2;

  const double gamma0 = gamma_fn(nu0 + 1.0);
  std::vector<double> coeff(top / 2 + 1);
  coeff[0] = gamma0;
  double r = gamma0;  // Gamma(nu0 + k) / k!
  for (int k = 1; k <= top / 2; ++k) {
    if (k > 1) r *= (nu0 + k - 1) / k;
    coeff[k] = (nu0 + 2.0 * k) * r;
  }

  double next = 0.0;
  double cur = 1e-30;
  double sum = 0.0;
  double saved = 0.0;
  for (int i = top; i >= 1; --i) {
    if (i == m) saved = cur;
    if (i % 2 == 0) sum += coeff[i / 2] * cur;
    const double prev = 2.0 * (nu0 + i) / x * cur - next;
    next = cur;
    cur = prev;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      sum *= 1e-250;
      saved *= 1e-250;
    }
  }
  if (m == 0) saved = cur;
  sum += coeff[0] * cur;
  const double scale = nu0 == 0.0 ? 1.0 : std::pow(0.5 * x, nu0);
  return saved * scale / sum;
}

double bessel_j_unchecked(double nu, double x) {
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (x <= 8.0 || x * x <= 4.0 * (nu + 1.0)) {
    return series_prefactor(nu, x) * series_ratio(nu, x);
  }
  if (x >= 25.0 + 0.5 * nu * nu) return bessel_asymptotic(nu, x);
  return bessel_miller(nu, x);
}

// J_nu(s) * Gamma(nu+1) / (s/2)^nu, without over/underflow for small s.
double bessel_scaled(double nu, double s) {
  if (s <= 8.0) return series_ratio(nu, s);
  return bessel_j_unchecked(nu, s) / series_prefactor(nu, s);
}

// Neumann condition at t = 1 for t^{1-d/2} J_nu(s t), nu = ell + d/2 - 1,
// divided by the positive factor (s/2)^nu / Gamma(nu+1).
double radial_condition(double dim, int ell, double s) {
  const double nu = ell + 0.5 * dim - 1.0;
  return ell * bessel_scaled(nu, s) - s * s / (2.0 * (nu + 1.0)) * bessel_scaled(nu + 1.0, s);
}

}  // namespace

double bessel_j(double order, double x) {
  if (!(order >= 0.0 && order <= kBesselMaxOrder) || !(x >= 0.0 && x <= kBesselMaxArg)) {
    std::ostringstream os;
    os << "bessel_j: (order=" << order << ", x=" << x << ") outside supported box [0,"
       << kBesselMaxOrder << "]x[0," << kBesselMaxArg << "]";
    throw RangeError(os.str());
  }
  return bessel_j_unchecked(order, x);
}

double bessel_j_derivative(double order, double x) {
  if (!(order >= 0.0 && order <= kBesselMaxOrder) || !(x >= 0.0 && x <= kBesselMaxArg)) {
    throw RangeError("bessel_j_derivative: argument outside supported box");
  }
  if (x == 0.0) {
    if (order == 1.0) return 0.5;
    if (order == 0.0 || order > 1.0) return 0.0;
    return INFINITY;
  }
  return order / x * bessel_j_unchecked(order, x) - bessel_j_unchecked(order + 1.0, x);
}

double gamma_fn(double x) {
  if (!(x > 0.0)) throw DomainError("gamma_fn: argument must be positive");
  if (x < 0.5) return gamma_fn(x + 1.0) / x;
  if (x > 10.0) {
    // pow/exp lose ~x ulps at large x; the downward recurrence loses fewer.
    double r = x;
    double prod = 1.0;
    while (r > 10.0) {
      r -= 1.0;
      prod *= r;
    }
    return std::isinf(prod) ? prod : prod * gamma_fn(r);
  }
  const double xm1 = x - 1.0;
  const double t = xm1 + kLanczosG + 0.5;
  const double half = std::pow(t, 0.5 * (xm1 + 0.5));
  return std::sqrt(2.0 * kPi) * (half * std::exp(-t)) * half * lanczos_sum(xm1);
}

double log_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive");
  if (x < 0.5) return log_gamma(x + 1.0) - std::log(x);
  const double xm1 = x - 1.0;
  const double t = xm1 + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * kPi) + (xm1 + 0.5) * std::log(t) - t +
         std::log(lanczos_sum(xm1));
}

double unit_ball_volume(int n) {
  return std::exp(0.5 * n * std::log(kPi) - log_gamma(0.5 * n + 1.0));
}

double sphere_volume(int n) {
  return 2.0 * std::exp(0.5 * (n + 1) * std::log(kPi) - log_gamma(0.5 * (n + 1)));
}

std::vector<double> neumann_radial_roots(int dim, int ell, int count) {
  if (dim < 1 || ell < 0 || count < 0) throw RangeError("neumann_radial_roots: bad arguments");
  if (ell + 0.5 * dim - 1.0 > kBesselMaxOrder) {
    throw RangeError("neumann_radial_roots: Bessel order exceeds supported box");
  }
  std::vector<double> roots;
  const double step = 0.01;
  double lo = step;
  double flo = radial_condition(dim, ell, lo);
  for (int i = 2; static_cast<int>(roots.size()) < count; ++i) {
    const double hi = i * step;
    if (hi > kBesselMaxArg) {
      std::ostringstream os;
      os << "neumann_radial_roots: bracketing failed on (0, " << kBesselMaxArg << "]";
      throw SolverError(os.str());
    }
    const double fhi = radial_condition(dim, ell, hi);
    if ((flo > 0.0) != (fhi > 0.0) || fhi == 0.0) {
      double a = lo;
      double b = hi;
      double fa = flo;
      while (b - a > 1e-13) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        const double fm = radial_condition(dim, ell, mid);
        if ((fm > 0.0) == (fa > 0.0) && fm != 0.0) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    lo = hi;
    flo = fhi;
  }
  return roots;
}

double neumann_ball_mu1(int dim, double radius) {
  if (dim < 2 || dim > 10) throw RangeError("neumann_ball_mu1: dimension must lie in [2, 10]");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw DomainError("neumann_ball_mu1: radius must be positive");
  }
  const double s = neumann_radial_roots(dim, 1, 1).front();
  return s * s / (radius * radius);
}

double kn_constant(int n) {
  if (n < 2 || n > 200) throw RangeError("kn_constant: n must lie in [2, 200]");
  // ratio(n) = Gamma(n) Gamma((n+1)/2) / (Gamma(n+1/2) Gamma(n/2)) obeys
  // ratio(n+2) = ratio(n) * (1 + 1/(4 (n+1/2)(n+3/2))), with ratio(2) = 2/3
  // and ratio(3) = 32/(15 pi).
  double log_ratio = (n % 2 == 0) ? std::log(2.0 / 3.0) : std::log(32.0 / (15.0 * kPi));
  for (int k = (n % 2 == 0) ? 2 : 3; k < n; k += 2) {
    log_ratio += std::log1p(0.25 / ((k + 0.5) * (k + 1.5)));
  }
  const double dn = n;
  return (dn + 1.0) / dn * std::exp(2.0 / dn * log_ratio);
}

WeinbergerProfile::WeinbergerProfile(int dim, double radius)
    : dim_(dim), radius_(radius), mu1_(neumann_ball_mu1(dim, radius)) {
  wavenumber_ = std::sqrt(mu1_);
  order_ = 0.5 * dim_;
  prefactor_ = std::exp(order_ * std::log(0.5 * wavenumber_) - log_gamma(order_ + 1.0));
  plateau_ = inner_eval(radius_);
}

double WeinbergerProfile::inner_eval(double t) const {
  const double z = wavenumber_ * t;
  if (z <= 8.0) return prefactor_ * t * series_ratio(order_, z);
  return std::pow(t, 1.0 - order_) * bessel_j_unchecked(order_, z);
}

double WeinbergerProfile::inner_deriv(double t) const {
  const double z = wavenumber_ * t;
  if (z <= 8.0) {
    return prefactor_ * (series_ratio(order_, z) -
                         z * z / (2.0 * (order_ + 1.0)) * series_ratio(order_ + 1.0, z));
  }
  return std::pow(t, -order_) *
         (bessel_j_unchecked(order_, z) - z * bessel_j_unchecked(order_ + 1.0, z));
}

double WeinbergerProfile::eval(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= radius_) return plateau_;
  return inner_eval(t);
}

double WeinbergerProfile::deriv(double t) const {
  if (t >= radius_) return 0.0;
  if (t <= 0.0) return prefactor_;
  return inner_deriv(t);
}

WeinbergerProfile weinberger_profile(int dim, double radius) {
  return WeinbergerProfile(dim, radius);
}

}  // namespace foldlab::specfun
