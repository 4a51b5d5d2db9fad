#include "foldlab/testfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "foldlab/errors.hpp"
#include "foldlab/kernels.hpp"
#include "testfun_detail.hpp"

namespace foldlab::testfun {

// ------------------------------------------------------------ domains

FieldDomain FieldDomain::from_mesh(const geometry::Mesh& mesh, int degree) {
  FieldDomain d;
  d.dim = 2;
  d.mesh = mesh;
  d.mesh_degree = degree;
  d.volume = mesh.area();
  return d;
}

FieldDomain FieldDomain::from_spec(const geometry::DomainSpec& spec, int order) {
  FieldDomain d;
  d.dim = spec.dim();
  d.spec = spec;
  d.analytic_order = order;
  d.volume = geometry::volume(spec);
  return d;
}

geometry::Quadrature FieldDomain::rule() const {
  if (mesh) return geometry::domain_quadrature(*mesh, mesh_degree);
  return geometry::analytic_quadrature(spec, analytic_order);
}

geometry::Quadrature FieldDomain::rule(const Point& origin, const Point& normal) const {
  if (mesh) return geometry::cut_domain_quadrature(*mesh, mesh_degree, origin, normal);
  return geometry::analytic_quadrature(spec, analytic_order);
}

double FieldDomain::half_radius() const {
  return std::pow(0.5 * volume / specfun::unit_ball_volume(dim), 1.0 / dim);
}

double FieldDomain::full_radius() const { return std::pow(volume / specfun::unit_ball_volume(dim), 1.0 / dim); }

// ------------------------------------------------------------ fields

FoldingFrame FoldingFrame::make(const Point& a, const Point& b) {
  const Point d = b - a;
  const double len = d.norm();
  if (!(len > 1e-14)) throw DomainError("folding frame needs two distinct points");
  FoldingFrame f;
  f.a = a;
  f.b = b;
  f.ab = d / len;
  f.midpoint = 0.5 * (a + b);
  return f;
}

Point eval_gA(const specfun::WeinbergerProfile& profile, const Point& a, const Point& x) {
  const Point v = x - a;
  const double d = v.norm();
  if (d == 0.0) return Point::Zero();
  return (profile.eval(d) / d) * v;
}

Point reflect_T_AB(const FoldingFrame& frame, const Point& v) { return v - 2.0 * frame.ab.dot(v) * frame.ab; }

TestFieldEvaluation eval_gAB(const specfun::WeinbergerProfile& profile, const FoldingFrame& frame,
                             const Point& x) {
  TestFieldEvaluation ev;
  ev.side = frame.on_a_side(x) ? Side::A : Side::B;
  const Point& c = ev.side == Side::A ? frame.a : frame.b;
  const Point v = x - c;
  const double d = v.norm();
  ev.distance = d;
  ev.profile = profile.eval(d);
  ev.profile_slope = profile.deriv(d);
  const double ratio = d > 0.0 ? ev.profile / d : profile.deriv_at_origin();
  if (d > 0.0) ev.direction = v / d;
  ev.value = ratio * v;
  if (ev.side == Side::B) ev.value = reflect_T_AB(frame, ev.value);
  ev.gradient_energy_density = ev.profile_slope * ev.profile_slope + (profile.dim() - 1) * ratio * ratio;
  return ev;
}

double coordinate_energy_density(const FoldingFrame& frame, const TestFieldEvaluation& ev, int /*dim*/,
                                 const Point& e) {
  const double slope2 = ev.profile_slope * ev.profile_slope;
  if (ev.distance == 0.0) return slope2;
  const Point e_side = ev.side == Side::A ? e : reflect_T_AB(frame, e);
  const double s = std::pow(ev.direction.dot(e_side), 2);
  const double ratio = ev.profile / ev.distance;
  return slope2 * s + ratio * ratio * (1.0 - s);
}

// ------------------------------------------------------------ sampling

namespace detail {

Eigen::VectorXd integrate(const Eigen::MatrixXd& values, const std::vector<double>& weights) {
  Eigen::VectorXd out(values.cols());
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    out[c] = kernels::weighted_sum_parallel(values.col(c).data(), weights.data(), weights.size());
  }
  return out;
}

FoldContext::FoldContext(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
                         const eigensolve::SpectralResult& spectrum, int max_mode)
    : domain_(domain), profile_(profile), spectrum_(spectrum), max_mode_(max_mode), analytic_rule_(!domain.mesh) {
  if (profile.dim() != domain.dim) throw PreconditionError("profile dimension does not match the domain");
  if (static_cast<int>(spectrum.size()) <= max_mode) {
    throw PreconditionError("spectrum has " + std::to_string(spectrum.size()) + " eigenpairs, need " +
                            std::to_string(max_mode + 1));
  }
  if (!spectrum.analytic() && !domain.mesh) {
    throw PreconditionError("FEM eigenfunctions need the mesh they were computed on");
  }
  if (domain.mesh && !spectrum.analytic() && spectrum.mesh_checksum != domain.mesh->checksum()) {
    throw PreconditionError("spectrum was computed on a different mesh");
  }
  if (analytic_rule_) {
    fixed_ = domain.rule();
    for (int j = 0; j <= max_mode; ++j) fixed_modes_.push_back(spectrum.sample(j, fixed_));
  }
}

double FoldContext::scale() const { return std::sqrt(domain_.volume) * profile_.plateau(); }

FoldSample FoldContext::sample(const FoldingFrame& frame) const {
  FoldSample s;
  s.q = analytic_rule_ ? fixed_ : domain_.rule(frame.midpoint, frame.ab);
  s.ev.resize(s.q.size());
  const long n = static_cast<long>(s.q.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) s.ev[i] = eval_gAB(profile_, frame, s.q.nodes[i]);
  return s;
}

std::vector<double> FoldContext::mode(const FoldSample& s, int j) const {
  if (j > max_mode_) throw RangeError("eigenfunction index beyond the prepared range");
  if (analytic_rule_) return fixed_modes_[j];
  return spectrum_.sample(j, s.q, domain_.mesh_ptr());
}

}  // namespace detail

// ------------------------------------------------------------ Borsuk basis

namespace {

// v_j = int g_AB f_j for j = 2..n, as columns.
Eigen::MatrixXd mode_moments(const detail::FoldContext& ctx, const detail::FoldSample& s, int n) {
  Eigen::MatrixXd vals(s.q.size(), n * (n - 1));
  for (int j = 2; j <= n; ++j) {
    const auto f = ctx.mode(s, j);
    for (std::size_t k = 0; k < s.q.size(); ++k) {
      for (int c = 0; c < n; ++c) vals(k, (j - 2) * n + c) = s.ev[k].value[c] * f[k];
    }
  }
  const Eigen::VectorXd m = detail::integrate(vals, s.q.weights);
  Eigen::MatrixXd v(3, n - 1);
  v.setZero();
  for (int j = 0; j < n - 1; ++j) v.col(j).head(n) = m.segment(j * n, n);
  return v;
}

// Zero of p -> <v, p> on the unit circle spanned by (a, b), by bisection of
// the odd function theta -> <v, cos(theta) a + sin(theta) b> on [0, pi].
Point circle_zero(const Point& v, const Point& a, const Point& b) {
  auto h = [&](double t) { return v.dot(std::cos(t) * a + std::sin(t) * b); };
  double lo = 0.0, hi = std::numbers::pi;
  double hlo = h(lo);
  if (hlo == 0.0) return a;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double hm = h(mid);
    if (hm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((hm > 0.0) == (hlo > 0.0)) {
      lo = mid;
      hlo = hm;
    } else {
      hi = mid;
    }
  }
  const double t = 0.5 * (lo + hi);
  return std::cos(t) * a + std::sin(t) * b;
}

Point any_orthogonal(const Point& e) {
  Eigen::Index k;
  e.cwiseAbs().minCoeff(&k);
  return e.cross(Point::Unit(k)).normalized();
}

}  // namespace

BorsukBasis borsuk_basis(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
                         const eigensolve::SpectralResult& spectrum, const FoldingFrame& frame, double tol,
                         int grid) {
  const int n = domain.dim;
  if (n != 2 && n != 3) throw RangeError("borsuk_basis supports dimensions 2 and 3");
  detail::FoldContext ctx(domain, profile, spectrum, n);
  const auto s = ctx.sample(frame);
  const Eigen::MatrixXd v = mode_moments(ctx, s, n) / ctx.scale();
  BorsukBasis out;
  if (n == 2) {
    const Point e2 = circle_zero(v.col(0), Point::UnitX(), Point::UnitY());
    out.e = {Point(e2.y(), -e2.x(), 0.0), e2};
    out.residuals = {v.col(0).dot(e2)};
  } else {
    const Point v2 = v.col(0), v3 = v.col(1);
    auto f = [&](const Point& p) { return Eigen::Vector2d(v2.dot(p), v3.dot(p)); };
    // Spherical Fibonacci grid; keep the point with the smallest |F|.
    Point best = Point::UnitZ();
    double best_norm = std::numeric_limits<double>::infinity();
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < grid; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / grid;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const Point p(r * std::cos(golden * k), r * std::sin(golden * k), z);
      const double fn = f(p).norm();
      if (fn < best_norm) {
        best_norm = fn;
        best = p;
      }
    }
    // Newton on the tangent plane; least squares handles degenerate maps.
    Point e3 = best;
    for (int it = 0; it < 50 && f(e3).norm() > 1e-3 * tol; ++it) {
      const Point t1 = any_orthogonal(e3);
      const Point t2 = e3.cross(t1);
      Eigen::Matrix2d j;
      j << v2.dot(t1), v2.dot(t2), v3.dot(t1), v3.dot(t2);
      const Eigen::Vector2d step = j.completeOrthogonalDecomposition().solve(-f(e3));
      const Point next = (e3 + step[0] * t1 + step[1] * t2).normalized();
      if (f(next).norm() >= f(e3).norm()) break;
      e3 = next;
    }
    if (!(f(e3).norm() <= tol)) {
      throw SolverError("zero of the Borsuk map not bracketed on a " + std::to_string(grid) +
                            "-point sphere grid (best |F| = " + std::to_string(f(e3).norm()) +
                            "); use a finer grid",
                        {f(e3).norm()});
    }
    const Point a = any_orthogonal(e3);
    const Point e2 = circle_zero(v2, a, e3.cross(a));
    out.e = {e3.cross(e2), e2, e3};
    out.residuals = {v2.dot(e2), v2.dot(e3), v3.dot(e3)};
  }
  for (double r : out.residuals) out.residual_norm = std::max(out.residual_norm, std::abs(r));
  if (!(out.residual_norm <= tol)) {
    throw SolverError("Borsuk basis residual " + std::to_string(out.residual_norm) + " above " +
                          std::to_string(tol),
                      out.residuals);
  }
  return out;
}

// ------------------------------------------------------------ certificate

Certificate reciprocal_sum_certificate(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
                                       const eigensolve::SpectralResult& spectrum, const FoldingResult& folding,
                                       const BorsukBasis& basis) {
  const int n = domain.dim;
  if (static_cast<int>(basis.e.size()) != n) throw PreconditionError("basis size does not match the dimension");
  const double r = domain.half_radius();
  if (std::abs(profile.radius() - r) > 1e-12 * r) {
    throw PreconditionError("profile radius " + std::to_string(profile.radius()) +
                            " is not the half-volume radius " + std::to_string(r));
  }
  detail::FoldContext ctx(domain, profile, spectrum, n + 1);
  const FoldingFrame& frame = folding.frame;
  const auto s = ctx.sample(frame);
  const std::size_t nq = s.q.size();

  // Columns: phi_i^2 (n), |grad phi_i|^2 (n), G^2, |grad g|^2, phi_i f_j (n x (n+2)).
  const int cols = 2 * n + 2 + n * (n + 2);
  Eigen::MatrixXd vals(nq, cols);
  std::vector<std::vector<double>> modes;
  for (int j = 0; j <= n + 1; ++j) modes.push_back(ctx.mode(s, j));
  double sign_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < nq; ++k) {
    const auto& ev = s.ev[k];
    for (int i = 0; i < n; ++i) {
      const double phi = ev.value.dot(basis.e[i]);
      vals(k, i) = phi * phi;
      vals(k, n + i) = coordinate_energy_density(frame, ev, n, basis.e[i]);
      for (int j = 0; j <= n + 1; ++j) vals(k, 2 * n + 2 + i * (n + 2) + j) = phi * modes[j][k];
    }
    vals(k, 2 * n) = ev.profile * ev.profile;
    vals(k, 2 * n + 1) = ev.gradient_energy_density;
    if (ev.distance > 0.0 && ev.distance < r) {
      sign_max = std::max(sign_max, ev.profile_slope * ev.profile_slope - std::pow(ev.profile / ev.distance, 2));
    }
  }
  const Eigen::VectorXd in = detail::integrate(vals, s.q.weights);

  Certificate c;
  c.dim = n;
  c.volume = domain.volume;
  c.r_omega = r;
  c.mu1_ball = profile.mu1_ball();
  c.mu.assign(spectrum.eigenvalues.begin(), spectrum.eigenvalues.begin() + n + 2);
  c.quadrature_nodes = static_cast<int>(nq);
  c.quadrature = domain.mesh ? "mesh degree " + std::to_string(domain.mesh_degree) + ", cut at the mediator"
                             : "analytic tensor Gauss order " + std::to_string(domain.analytic_order);
  c.sign_term_max = sign_max;
  c.folding_residual = folding.residual_norm;
  c.basis_residual = basis.residual_norm;

  const double num = in[2 * n];
  const double den = in[2 * n + 1];
  double sum_norm = 0.0, slack_term = 0.0, energy_term = 0.0;
  for (int i = 0; i < n; ++i) {
    const double mu_next = c.mu[i + 2];
    c.norm2.push_back(in[i]);
    c.energy.push_back(in[n + i]);
    c.rayleigh.push_back(in[n + i] / in[i]);
    // Here i is 0-based: phi_{i+1} bounds mu_{i+2} and should be orthogonal
    // to f_0..f_{i+1}; whatever overlap remains is charged as slack.
    double slack = 0.0;
    for (int j = 0; j <= i + 1; ++j) {
      const double cj = in[2 * n + 2 + i * (n + 2) + j];
      slack += (mu_next - c.mu[j]) * cj * cj;
    }
    c.slack.push_back(slack);
    c.coordinate_margin.push_back(in[n + i] + slack - mu_next * in[i]);
    sum_norm += in[i];
    slack_term += slack / mu_next;
    energy_term += in[n + i] / mu_next;
  }
  c.lhs = 0.0;
  for (int i = 2; i <= n; ++i) {
    c.lhs += c.mu[i] > 0.0 ? 1.0 / c.mu[i] : std::numeric_limits<double>::infinity();
  }
  const double ball_pair_mu2 = specfun::neumann_ball_mu1(n, 1.0);
  const double ball_pair_vol = 2.0 * specfun::unit_ball_volume(n);
  c.rhs = (n - 1) * std::pow(domain.volume, 2.0 / n) / (ball_pair_mu2 * std::pow(ball_pair_vol, 2.0 / n));
  c.rhs_direct = (n - 1) / c.mu1_ball;
  c.intermediate = num / den;
  c.margin_chain = c.lhs / (n - 1) - c.intermediate;
  c.margin_mass = c.intermediate - 1.0 / c.mu1_ball;
  c.margin_total = c.lhs - c.rhs;
  c.chain_uncertainty = slack_term / den;
  double head = 0.0;
  for (int i = 1; i <= n - 1; ++i) head += 1.0 / c.mu[i + 1];
  c.wang_xia_margin = head * den / (n - 1) - energy_term;
  c.l2_identity_error = std::abs(sum_norm - num) / num;
  return c;
}

nlohmann::json Certificate::to_json() const {
  return {{"dim", dim},
          {"volume", volume},
          {"r_omega", r_omega},
          {"mu1_ball", mu1_ball},
          {"mu", mu},
          {"test_norm2", norm2},
          {"test_energy", energy},
          {"test_rayleigh", rayleigh},
          {"slack", slack},
          {"coordinate_margin", coordinate_margin},
          {"lhs", lhs},
          {"rhs", rhs},
          {"rhs_direct", rhs_direct},
          {"intermediate", intermediate},
          {"margin_chain", margin_chain},
          {"margin_mass", margin_mass},
          {"margin_total", margin_total},
          {"chain_uncertainty", chain_uncertainty},
          {"wang_xia_margin", wang_xia_margin},
          {"l2_identity_error", l2_identity_error},
          {"sign_term_max", sign_term_max},
          {"folding_residual", folding_residual},
          {"basis_residual", basis_residual},
          {"quadrature", quadrature},
          {"quadrature_nodes", quadrature_nodes}};
}

}  // namespace foldlab::testfun
