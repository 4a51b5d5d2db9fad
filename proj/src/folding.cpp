// Solvers for the points A (center of mass) and (A, B) (folding pair).
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "foldlab/errors.hpp"
#include "foldlab/testfun.hpp"
#include "least_squares.hpp"
#include "testfun_detail.hpp"

namespace foldlab::testfun {

namespace {

using foldlab::detail::least_squares;
using foldlab::detail::ResidualFunctor;

Eigen::VectorXd center_moment(const std::vector<Point>& nodes, const std::vector<double>& w,
                              const specfun::WeinbergerProfile& profile, const Point& a, int dim) {
  Eigen::MatrixXd vals(nodes.size(), dim);
  const long nq = static_cast<long>(nodes.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < nq; ++k) vals.row(k) = eval_gA(profile, a, nodes[k]).head(dim).transpose();
  return detail::integrate(vals, w);
}

Point to_point(const Eigen::VectorXd& v, int offset, int dim) {
  Point p = Point::Zero();
  p.head(dim) = v.segment(offset, dim);
  return p;
}

std::pair<Point, Point> bounding_box(const FieldDomain& d) {
  if (!d.mesh) return geometry::bounding_box(d.spec);
  Point lo = Point::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  lo.z() = hi.z() = 0.0;
  for (const auto& v : d.mesh->vertices) {
    lo.head<2>() = lo.head<2>().cwiseMin(v);
    hi.head<2>() = hi.head<2>().cwiseMax(v);
  }
  return {lo, hi};
}

}  // namespace

CenterOfMass solve_center_of_mass(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
                                  double tol) {
  const int n = domain.dim;
  if (profile.dim() != n) throw PreconditionError("profile dimension does not match the domain");
  const auto q = domain.rule();
  const double scale = domain.volume * profile.plateau();
  Point a = Point::Zero();
  for (std::size_t k = 0; k < q.size(); ++k) a += q.weights[k] * q.nodes[k];
  a /= q.total();

  CenterOfMass out;
  // Damped fixed point: moving A by delta changes int g_A by about
  // -|Omega| G'(0) delta at most, so this step never overshoots by much.
  constexpr double theta = 0.5;
  const double step = theta / (domain.volume * profile.deriv_at_origin());
  for (int it = 0; it < 500; ++it) {
    const Eigen::VectorXd m = center_moment(q.nodes, q.weights, profile, a, n);
    out.iterations = it + 1;
    out.residual = m.norm() / scale;
    if (out.residual <= tol) {
      out.a = a;
      return out;
    }
    a.head(n) += step * m;
  }
  out.used_fallback = true;
  Eigen::VectorXd x = a.head(n);
  ResidualFunctor fn(n, n, [&](const Eigen::VectorXd& z, Eigen::VectorXd& r) {
    r = center_moment(q.nodes, q.weights, profile, to_point(z, 0, n), n) / scale;
  });
  least_squares(fn, x, 400);
  out.a = to_point(x, 0, n);
  out.residual = center_moment(q.nodes, q.weights, profile, out.a, n).norm() / scale;
  if (!(out.residual <= tol)) {
    throw SolverError("center of mass did not converge, residual " + std::to_string(out.residual), {out.residual});
  }
  return out;
}

namespace {

// int g_AB e_i and int g_AB e_i f1, i = 1..n.
std::vector<double> fold_moments(const detail::FoldContext& ctx, const FoldingFrame& frame) {
  const auto s = ctx.sample(frame);
  const auto f1 = ctx.mode(s, 1);
  const int n = ctx.domain().dim;
  Eigen::MatrixXd vals(s.q.size(), 2 * n);
  for (std::size_t k = 0; k < s.q.size(); ++k) {
    for (int i = 0; i < n; ++i) {
      vals(k, i) = s.ev[k].value[i];
      vals(k, n + i) = s.ev[k].value[i] * f1[k];
    }
  }
  const Eigen::VectorXd m = detail::integrate(vals, s.q.weights);
  return {m.data(), m.data() + m.size()};
}

}  // namespace

std::vector<double> folding_residuals(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
                                      const eigensolve::SpectralResult& spectrum, const FoldingFrame& frame) {
  detail::FoldContext ctx(domain, profile, spectrum, 1);
  return fold_moments(ctx, frame);
}

FoldingResult solve_folding_pair(const FieldDomain& domain, const specfun::WeinbergerProfile& profile,
                                 const eigensolve::SpectralResult& spectrum, const FoldingOptions& options) {
  const int n = domain.dim;
  const double r = domain.half_radius();
  if (std::abs(profile.radius() - r) > 1e-12 * r) {
    throw PreconditionError("folding needs the profile at the half-volume radius");
  }
  detail::FoldContext ctx(domain, profile, spectrum, 1);
  const double scale = ctx.scale();
  int evaluations = 0;

  auto residual = [&](const Eigen::VectorXd& z, Eigen::VectorXd& out) {
    ++evaluations;
    out.resize(2 * n);
    const Point a = to_point(z, 0, n), b = to_point(z, n, n);
    if ((a - b).norm() < 1e-12 * r) {
      out.setConstant(1.0);  // coincident points: no frame, push the solver away
      return;
    }
    const auto v = fold_moments(ctx, FoldingFrame::make(a, b));
    for (int i = 0; i < 2 * n; ++i) out[i] = v[i] / scale;
  };

  // Starting pairs: centroids of the two nodal lobes of f1 (both orders),
  // the centroid shifted along the f1-weighted axis, then random pairs.
  const auto q = domain.rule();
  const auto f1 = spectrum.sample(1, q, domain.mesh_ptr());
  Point cp = Point::Zero(), cm = Point::Zero(), c = Point::Zero(), axis = Point::Zero();
  double wp = 0.0, wm = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double w = q.weights[k];
    c += w * q.nodes[k];
    axis += w * f1[k] * q.nodes[k];
    if (f1[k] > 0.0) {
      cp += w * q.nodes[k];
      wp += w;
    } else {
      cm += w * q.nodes[k];
      wm += w;
    }
  }
  c /= q.total();
  cp = wp > 0.0 ? Point(cp / wp) : c;
  cm = wm > 0.0 ? Point(cm / wm) : c;
  axis = axis.norm() > 0.0 ? Point(axis.normalized()) : Point::UnitX();
  std::vector<std::pair<Point, Point>> starts = {
      {cp, cm}, {cm, cp}, {c - 0.5 * r * axis, c + 0.5 * r * axis}, {c + 0.5 * r * axis, c - 0.5 * r * axis}};
  const auto [lo, hi] = bounding_box(domain);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(starts.size()) < options.starts) {
    Point a = Point::Zero(), b = Point::Zero();
    for (int i = 0; i < n; ++i) {
      a[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
      b[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
    }
    starts.emplace_back(a, b);
  }
  starts.resize(options.starts);

  // Starts run in order and the first one meeting the tolerance wins, so the
  // answer does not depend on thread scheduling.
  FoldingResult best;
  best.residual_norm = std::numeric_limits<double>::infinity();
  for (int s = 0; s < options.starts; ++s) {
    Eigen::VectorXd z(2 * n);
    z.head(n) = starts[s].first.head(n);
    z.tail(n) = starts[s].second.head(n);
    if ((starts[s].first - starts[s].second).norm() < 1e-12 * r) continue;
    ResidualFunctor fn(2 * n, 2 * n, residual);
    least_squares(fn, z, options.max_evaluations);
    const Point a = to_point(z, 0, n), b = to_point(z, n, n);
    if ((a - b).norm() < 1e-12 * r) continue;
    Eigen::VectorXd res;
    residual(z, res);
    const double norm = res.cwiseAbs().maxCoeff();
    if (norm < best.residual_norm) {
      best.frame = FoldingFrame::make(a, b);
      best.residuals.assign(res.data(), res.data() + res.size());
      best.residual_norm = norm;
      best.start_index = s;
    }
    if (norm <= options.tol) break;
  }
  best.scale = scale;
  best.evaluations = evaluations;
  if (!(best.residual_norm <= options.tol)) {
    throw SolverError("no folding pair within tolerance after " + std::to_string(options.starts) +
                          " starts (best " + std::to_string(best.residual_norm) +
                          "); existence is guaranteed, so this points at the discretization or the solver",
                      best.residuals);
  }
  return best;
}

nlohmann::json FoldingResult::to_json() const {
  return {{"A", {frame.a.x(), frame.a.y(), frame.a.z()}},
          {"B", {frame.b.x(), frame.b.y(), frame.b.z()}},
          {"residuals", residuals},
          {"residual_norm", residual_norm},
          {"scale", scale},
          {"start_index", start_index},
          {"evaluations", evaluations}};
}

}  // namespace foldlab::testfun
