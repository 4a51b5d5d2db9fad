// Moebius maps, centers of mass, caps and conformal energies on S^n.
#include "foldlab/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "foldlab/errors.hpp"
#include "foldlab/geometry.hpp"
#include "foldlab/kernels.hpp"
#include "foldlab/specfun.hpp"

namespace foldlab::sphere {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_unit(const Vec& x) {
  if (std::abs(x.norm() - 1.0) > 1e-8) throw PreconditionError("point is not on the unit sphere");
}

// Column j of the result is sum_k w_k f(k)_j, reduced in a fixed order.
Vec weighted_moment(const Eigen::MatrixXd& vals, const std::vector<double>& w) {
  Vec out(vals.cols());
  for (Eigen::Index j = 0; j < vals.cols(); ++j) {
    out[j] = kernels::weighted_sum_parallel(vals.col(j).data(), w.data(), w.size());
  }
  return out;
}

}  // namespace

Vec mobius(const Vec& xi, const Vec& x) {
  check_unit(x);
  if (xi.size() != x.size()) throw PreconditionError("mobius: dimension mismatch");
  const double s2 = xi.squaredNorm();
  if (s2 > (1.0 - 1e-10) * (1.0 - 1e-10)) throw PreconditionError("mobius: |xi| must stay below 1 - 1e-10");
  const Vec y = x + xi;
  const double d2 = y.squaredNorm();
  if (d2 < 1e-24) throw DomainError("mobius: x is (numerically) -xi/|xi|");
  return xi + (1.0 - s2) / d2 * y;
}

double mobius_factor(const Vec& xi, const Vec& x) {
  const double d2 = (x + xi).squaredNorm();
  if (d2 < 1e-24) throw DomainError("mobius_factor: x is (numerically) -xi/|xi|");
  return (1.0 - xi.squaredNorm()) / d2;
}

Vec reflect(const Vec& p, const Vec& x) { return x - 2.0 * x.dot(p) * p; }

double SphereMeasure::total() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

void SphereMeasure::validate() const {
  if (nodes.size() != weights.size()) throw PreconditionError("measure: node and weight counts differ");
  if (nodes.empty()) throw PreconditionError("measure: no nodes");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw PreconditionError("measure: weights must be finite and >= 0");
  }
  const double tot = total();
  if (!(tot > 0.0)) throw PreconditionError("measure: total mass must be positive");
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(nodes[a].data(), nodes[a].data() + nodes[a].size(), nodes[b].data(),
                                        nodes[b].data() + nodes[b].size());
  };
  std::sort(order.begin(), order.end(), less);
  double atom = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (nodes[order[i]].size() != dim + 1) throw PreconditionError("measure: node dimension mismatch");
    check_unit(nodes[order[i]]);
    if (i > 0 && (nodes[order[i]] - nodes[order[i - 1]]).norm() <= 1e-14) {
      atom += weights[order[i]];
    } else {
      atom = weights[order[i]];
    }
    if (atom >= 0.5 * tot) throw PreconditionError("measure: an atom carries half of the mass or more");
  }
}

namespace {

Vec center_residual(const SphereMeasure& m, const Vec& xi) {
  const long n = static_cast<long>(m.nodes.size());
  Eigen::MatrixXd vals(n, m.dim + 1);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) vals.row(k) = mobius(xi, m.nodes[k]).transpose();
  return weighted_moment(vals, m.weights);
}

CenterOfMass newton_center(const SphereMeasure& m, double tot, double tol, Vec xi) {
  constexpr double h = 1e-6;
  const int d = m.dim + 1;
  Vec f = center_residual(m, xi) / tot;
  CenterOfMass out;
  for (int it = 0; it < 100; ++it) {
    out.iterations = it;
    if (f.norm() <= tol) break;
    Eigen::MatrixXd jac(d, d);
    for (int j = 0; j < d; ++j) {
      Vec e = Vec::Zero(d);
      // Step inward near the boundary of the ball.
      e[j] = (xi[j] > 0.0 && xi.norm() > 0.5) ? -h : h;
      jac.col(j) = (center_residual(m, xi + e) / tot - f) / e[j];
    }
    const Vec step = -jac.colPivHouseholderQr().solve(f);
    double alpha = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, alpha *= 0.5) {
      const Vec cand = xi + alpha * step;
      if (cand.norm() >= 1.0 - 1e-10) continue;
      const Vec fc = center_residual(m, cand) / tot;
      if (fc.norm() < f.norm()) {
        xi = cand;
        f = fc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  out.xi = xi;
  out.residual = f.norm();
  if (!(out.residual <= tol)) {
    throw SolverError("center of mass did not converge, residual " + std::to_string(out.residual), {out.residual});
  }
  return out;
}

}  // namespace

CenterOfMass sphere_center_of_mass(const SphereMeasure& measure, double tol, bool check_uniqueness,
                                   const Vec* start) {
  measure.validate();
  const double tot = measure.total();
  const int d = measure.dim + 1;
  Vec x0 = start ? *start : Vec(Vec::Zero(d));
  CenterOfMass out = newton_center(measure, tot, tol, x0);
  if (check_uniqueness) {
    Vec x1 = Vec::Zero(d);
    if (out.xi.norm() > 1e-3) {
      x1 = 0.5 * out.xi;
    } else {
      x1[0] = 0.5;
    }
    const CenterOfMass other = newton_center(measure, tot, tol, x1);
    out.start_gap = (other.xi - out.xi).norm();
    if (out.start_gap > 1e-8) {
      throw SolverError("center of mass differs between starts by " + std::to_string(out.start_gap),
                        {out.residual, other.residual});
    }
  }
  return out;
}

Cap Cap::make(const Vec& p, double t) {
  const double n = p.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("cap axis must be a nonzero vector");
  if (!(std::abs(t) < 1.0)) throw RangeError("cap parameter t must lie in (-1, 1)");
  return Cap{p / n, t};
}

bool Cap::contains(const Vec& x) const { return mobius(t * p, x).dot(p) > 0.0; }

Vec cap_reflection(const Cap& cap, const Vec& x) {
  if (cap.t == 0.0) return reflect(cap.p, x);
  const Vec tp = cap.t * cap.p;
  return mobius(-tp, reflect(cap.p, mobius(tp, x)));
}

double cap_reflection_factor(const Cap& cap, const Vec& x) {
  const Vec tp = cap.t * cap.p;
  const Vec y = reflect(cap.p, mobius(tp, x));
  return mobius_factor(tp, x) * mobius_factor(-tp, y);
}

Vec fold_map(const Cap& cap, const Vec& x) { return cap.contains(x) ? x : cap_reflection(cap, x); }

namespace {

// Orthonormal frame whose first column is `axis`.
Eigen::MatrixXd frame_from(const Vec& axis) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(axis.normalized());
  Eigen::MatrixXd q = qr.householderQ();
  if (q.col(0).dot(axis) < 0.0) q = -q;
  return q;
}

void append_band(double lo, double hi, int polar, int dim, std::vector<double>& chi, std::vector<double>& w) {
  std::vector<double> x, wx;
  geometry::gauss_legendre(polar, x, wx);
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  for (int i = 0; i < polar; ++i) {
    const double c = mid + half * x[i];
    chi.push_back(c);
    w.push_back(half * wx[i] * std::pow(std::sin(c), dim - 1));
  }
}

}  // namespace

SphereGrid polar_grid(int dim, int polar, const Vec& axis, std::optional<double> split) {
  if (dim != 2 && dim != 3) throw RangeError("polar_grid: dimension must be 2 or 3");
  if (polar < 2) throw RangeError("polar_grid: need at least 2 polar nodes");
  if (axis.size() != dim + 1) throw PreconditionError("polar_grid: axis dimension mismatch");
  std::vector<double> chi, wchi;
  if (split && std::abs(*split) < 1.0) {
    const double c0 = std::acos(*split);
    append_band(0.0, c0, polar, dim, chi, wchi);
    append_band(c0, kPi, polar, dim, chi, wchi);
  } else {
    append_band(0.0, kPi, polar, dim, chi, wchi);
  }
  // Directions orthogonal to the axis: a circle or an S^2 rule.
  std::vector<Vec> dirs;
  std::vector<double> wdir;
  if (dim == 2) {
    const int m = 2 * polar;
    for (int j = 0; j < m; ++j) {
      const double ph = 2.0 * kPi * j / m;
      Vec y(2);
      y << std::cos(ph), std::sin(ph);
      dirs.push_back(y);
      wdir.push_back(2.0 * kPi / m);
    }
  } else {
    Vec e = Vec::Zero(3);
    e[2] = 1.0;
    const SphereGrid s2 = polar_grid(2, polar, e);
    dirs = s2.nodes;
    wdir = s2.weights;
  }
  const Eigen::MatrixXd f = frame_from(axis);
  SphereGrid g;
  g.dim = dim;
  g.nodes.reserve(chi.size() * dirs.size());
  g.weights.reserve(chi.size() * dirs.size());
  for (std::size_t i = 0; i < chi.size(); ++i) {
    const double c = std::cos(chi[i]), s = std::sin(chi[i]);
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      Vec local(dim + 1);
      local[0] = c;
      local.tail(dim) = s * dirs[j];
      Vec x = f * local;
      x.normalize();
      g.nodes.push_back(std::move(x));
      g.weights.push_back(wchi[i] * wdir[j]);
    }
  }
  return g;
}

SphereGrid galerkin_grid(int L, int refine) {
  if (L < 0 || refine < 1) throw RangeError("galerkin_grid: bad degree");
  const int nt = (2 * L + 2) * refine, np = 2 * (2 * L + 1) * refine;
  std::vector<double> z, wz;
  geometry::gauss_legendre(nt, z, wz);
  SphereGrid g;
  g.dim = 2;
  for (int i = 0; i < nt; ++i) {
    const double s = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
    for (int j = 0; j < np; ++j) {
      const double ph = 2.0 * kPi * j / np;
      Vec x(3);
      x << s * std::cos(ph), s * std::sin(ph), z[i];
      g.nodes.push_back(x);
      g.weights.push_back(wz[i] * 2.0 * kPi / np);
    }
  }
  return g;
}

// --- conformal factor ------------------------------------------------------

ConformalFactor ConformalFactor::round(int dim) {
  ConformalFactor u;
  u.dim = dim;
  return u;
}

ConformalFactor ConformalFactor::harmonic(std::vector<Term> coeffs) {
  ConformalFactor u;
  for (const auto& t : coeffs) {
    if (t.l < 0 || t.l > 40 || std::abs(t.m) > t.l) throw ConfigError("harmonic term needs 0 <= l <= 40, |m| <= l");
    if (!std::isfinite(t.value)) throw ConfigError("harmonic coefficient is not finite");
  }
  u.coeffs = std::move(coeffs);
  return u;
}

ConformalFactor ConformalFactor::bump(const Vec& center, double amplitude, double width) {
  return multi_bump({Bump{center, amplitude, width}});
}

ConformalFactor ConformalFactor::multi_bump(std::vector<Bump> bumps) {
  if (bumps.empty()) throw ConfigError("bump list is empty");
  ConformalFactor u;
  u.kind = Kind::Bumps;
  u.dim = static_cast<int>(bumps.front().center.size()) - 1;
  if (u.dim < 1) throw ConfigError("bump center needs at least two coordinates");
  for (auto& b : bumps) {
    if (b.center.size() != u.dim + 1) throw ConfigError("bump centers have different dimensions");
    const double n = b.center.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError("bump center must be a nonzero vector");
    b.center /= n;
    if (!(b.width > 0.0) || !std::isfinite(b.width)) throw ConfigError("bump width must be positive");
    if (!std::isfinite(b.amplitude)) throw ConfigError("bump amplitude is not finite");
  }
  u.bumps = std::move(bumps);
  return u;
}

ConformalFactor ConformalFactor::bubbles(std::vector<Vec> centers, double concentration) {
  if (centers.empty()) throw ConfigError("bubble centers are empty");
  if (!(concentration >= 0.0 && concentration < 1.0)) throw ConfigError("bubble concentration must lie in [0, 1)");
  ConformalFactor u;
  u.kind = Kind::Bubbles;
  u.dim = static_cast<int>(centers.front().size()) - 1;
  if (u.dim < 1) throw ConfigError("bubble center needs at least two coordinates");
  for (auto& c : centers) {
    if (c.size() != u.dim + 1) throw ConfigError("bubble centers have different dimensions");
    const double n = c.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError("bubble center must be a nonzero vector");
    c /= n;
  }
  u.centers = std::move(centers);
  u.concentration = concentration;
  return u;
}

namespace {

Vec vector_from_json(const nlohmann::json& c, const std::string& what) {
  if (!c.is_array() || c.size() < 2) throw ConfigError(what + " must be an array of numbers");
  Vec v(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c[i].is_number()) throw ConfigError(what + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = c[i].get<double>();
  }
  return v;
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Bump bump_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("center") || !j.contains("amplitude") || !j.contains("width")) {
    throw ConfigError("bump needs center, amplitude and width");
  }
  Bump b;
  b.center = vector_from_json(j.at("center"), "bump center");
  if (!j.at("amplitude").is_number() || !j.at("width").is_number()) {
    throw ConfigError("bump amplitude and width must be numbers");
  }
  b.amplitude = j.at("amplitude").get<double>();
  b.width = j.at("width").get<double>();
  return b;
}

nlohmann::json bump_to_json(const Bump& b) {
  return {{"center", to_std(b.center)},
          {"amplitude", b.amplitude},
          {"width", b.width}};
}

}  // namespace

ConformalFactor ConformalFactor::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw ConfigError("conformal factor needs a string field \"type\"");
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "harmonic") {
    std::vector<Term> terms;
    if (j.contains("coeffs")) {
      const auto& c = j.at("coeffs");
      if (!c.is_array()) throw ConfigError("coeffs must be an array of [l, m, value]");
      for (const auto& t : c) {
        if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer() ||
            !t[2].is_number()) {
          throw ConfigError("coeffs must be an array of [l, m, value]");
        }
        terms.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<double>()});
      }
    }
    if (j.contains("dim")) {
      if (!j.at("dim").is_number_integer()) throw ConfigError("dim must be an integer");
      const int dim = j.at("dim").get<int>();
      if (dim == 2) return harmonic(std::move(terms));
      if (dim < 2) throw ConfigError("dim must be at least 2");
      if (!terms.empty()) throw ConfigError("harmonic coefficients are supported on S^2 only");
      return round(dim);
    }
    return harmonic(std::move(terms));
  }
  if (type == "bump") return multi_bump({bump_from_json(j)});
  if (type == "bumps") {
    if (!j.contains("bumps") || !j.at("bumps").is_array()) throw ConfigError("\"bumps\" must be an array");
    std::vector<Bump> list;
    for (const auto& b : j.at("bumps")) list.push_back(bump_from_json(b));
    return multi_bump(std::move(list));
  }
  if (type == "bubbles") {
    if (!j.contains("centers") || !j.at("centers").is_array() || !j.contains("concentration") ||
        !j.at("concentration").is_number()) {
      throw ConfigError("bubbles need an array \"centers\" and a number \"concentration\"");
    }
    std::vector<Vec> centers;
    for (const auto& c : j.at("centers")) centers.push_back(vector_from_json(c, "bubble center"));
    return bubbles(std::move(centers), j.at("concentration").get<double>());
  }
  throw ConfigError("unknown conformal factor type \"" + type + "\"");
}

ConformalFactor ConformalFactor::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metric file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("metric file " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json ConformalFactor::to_json() const {
  if (kind == Kind::Harmonic) {
    nlohmann::json c = nlohmann::json::array();
    for (const auto& t : coeffs) c.push_back({t.l, t.m, t.value});
    if (dim != 2) return {{"type", "harmonic"}, {"coeffs", c}, {"dim", dim}};
    return {{"type", "harmonic"}, {"coeffs", c}};
  }
  if (kind == Kind::Bubbles) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& c : centers) list.push_back(to_std(c));
    return {{"type", "bubbles"}, {"centers", list}, {"concentration", concentration}};
  }
  if (bumps.size() == 1) {
    auto j = bump_to_json(bumps.front());
    j["type"] = "bump";
    return j;
  }
  nlohmann::json list = nlohmann::json::array();
  for (const auto& b : bumps) list.push_back(bump_to_json(b));
  return {{"type", "bumps"}, {"bumps", list}};
}

std::string ConformalFactor::describe() const {
  if (kind == Kind::Harmonic && coeffs.empty()) return "round";
  return to_json().dump();
}

double ConformalFactor::u(const Vec& x) const {
  if (x.size() != dim + 1) throw PreconditionError("conformal factor: point dimension mismatch");
  if (kind == Kind::Harmonic) {
    if (coeffs.empty()) return 0.0;
    if (dim != 2) throw PreconditionError("harmonic conformal factors live on S^2");
    int lmax = 0;
    for (const auto& t : coeffs) lmax = std::max(lmax, t.l);
    std::vector<double> y((lmax + 1) * (lmax + 1));
    real_sh(lmax, x, y.data());
    double s = 0.0;
    for (const auto& t : coeffs) s += t.value * y[sh_index(t.l, t.m)];
    return s;
  }
  if (kind == Kind::Bubbles) {
    const double s2 = concentration * concentration;
    double sum = 0.0;
    for (const auto& c : centers) {
      const double l = (1.0 - s2) / (x - concentration * c).squaredNorm();
      sum += l * l;
    }
    return 0.5 * std::log(sum);
  }
  double s = 0.0;
  for (const auto& b : bumps) {
    const double d = std::acos(std::clamp(x.dot(b.center), -1.0, 1.0));
    s += b.amplitude * std::exp(-(d * d) / (b.width * b.width));
  }
  return s;
}

double ConformalFactor::density(const Vec& x) const { return std::exp(dim * u(x)); }

double metric_volume(const ConformalFactor& u, int polar) {
  Vec axis = Vec::Zero(u.dim + 1);
  axis[u.dim] = 1.0;
  const SphereGrid g = polar_grid(u.dim, polar, axis);
  const long n = static_cast<long>(g.size());
  std::vector<double> vals(n);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) vals[k] = u.density(g.nodes[k]);
  return kernels::weighted_sum_parallel(vals.data(), g.weights.data(), vals.size());
}

// --- energies --------------------------------------------------------------

namespace {

// Rule for S^n adapted to a cap: Gauss rule on C itself, and its image
// under tau_C (weights times the Jacobian) on the complement, which keeps
// nodes where the folded integrand lives even for nearly degenerate caps.
SphereGrid cap_grid(int dim, int polar, const Cap& cap) {
  const double z0 = cap.boundary_height();
  SphereGrid in = polar_grid(dim, polar, cap.p, z0);
  SphereGrid g;
  g.dim = dim;
  for (std::size_t k = 0; k < in.size(); ++k) {
    if (in.nodes[k].dot(cap.p) <= z0) continue;
    g.nodes.push_back(in.nodes[k]);
    g.weights.push_back(in.weights[k]);
  }
  const std::size_t half = g.size();
  for (std::size_t k = 0; k < half; ++k) {
    g.nodes.push_back(cap_reflection(cap, g.nodes[k]));
    g.weights.push_back(g.weights[k] * std::pow(cap_reflection_factor(cap, g.nodes[k]), dim));
  }
  return g;
}

double energy_on(int dim, const Vec& xi, const std::optional<Cap>& cap, const Vec& v, int polar) {
  SphereGrid g;
  if (cap) {
    g = cap_grid(dim, polar, *cap);
  } else {
    Vec axis = Vec::Zero(dim + 1);
    if (xi.norm() > 0.0) {
      axis = xi.normalized();
    } else {
      axis[dim] = 1.0;
    }
    g = polar_grid(dim, polar, axis);
  }
  const long n = static_cast<long>(g.size());
  std::vector<double> vals(n);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) {
    const Vec& x = g.nodes[k];
    Vec y = x;
    double factor = 1.0;
    if (cap && !cap->contains(x)) {
      y = cap_reflection(*cap, x);
      factor = cap_reflection_factor(*cap, x);
    }
    const double z = mobius(xi, y).dot(v);
    const double grad = factor * mobius_factor(xi, y) * std::sqrt(std::max(0.0, 1.0 - z * z));
    vals[k] = std::pow(grad, dim);
  }
  return kernels::weighted_sum_parallel(vals.data(), g.weights.data(), vals.size());
}

}  // namespace

EnergyResult conformal_energy(int dim, const Vec& xi, const std::optional<Cap>& cap, const Vec& v, int polar) {
  if (dim != 2 && dim != 3) throw RangeError("conformal_energy: dimension must be 2 or 3");
  if (xi.size() != dim + 1 || v.size() != dim + 1) throw PreconditionError("conformal_energy: dimension mismatch");
  if (cap && cap->p.size() != dim + 1) throw PreconditionError("conformal_energy: cap dimension mismatch");
  check_unit(v);
  EnergyResult r;
  r.value = energy_on(dim, xi, cap, v, polar);
  r.error_estimate = std::abs(r.value - energy_on(dim, xi, cap, v, std::max(2, polar / 2)));
  r.resolved = r.error_estimate <= (dim == 2 ? 1e-8 : 1e-6);
  r.nodes = static_cast<int>((cap ? 2L : 1L) * polar * (dim == 2 ? 2L * polar : 2L * polar * polar));
  return r;
}

double coordinate_energy(int dim) {
  const double n = dim;
  return specfun::sphere_volume(dim - 1) * std::sqrt(kPi) *
         std::exp(specfun::log_gamma(n) - specfun::log_gamma(n + 0.5));
}

double coordinate_energy_identity(int dim) {
  const double n = dim;
  return n / (n + 1.0) * specfun::kn_constant(dim) * std::pow(specfun::sphere_volume(dim), 2.0 / n);
}

}  // namespace foldlab::sphere
