#include "foldlab/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "foldlab/errors.hpp"
#include "foldlab/specfun.hpp"

namespace foldlab::eigensolve {

using geometry::Point;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Radial part of a disk (dim 2) or ball (dim 3) mode, J_ell(kr) or j_ell(kr).
double radial(int dim, int ell, double kr) {
  if (dim == 2) return specfun::bessel_j(ell, kr);
  if (kr < 1e-8) return ell == 0 ? 1.0 : 0.0;
  return std::sqrt(kPi / (2.0 * kr)) * specfun::bessel_j(ell + 0.5, kr);
}

// int_0^R radial(kr)^2 r^{dim-1} dr by panelled Gauss-Legendre.
double radial_norm2(int dim, int ell, double k, double radius) {
  if (k == 0.0) return std::pow(radius, dim) / dim;
  static thread_local std::vector<double> x, w;
  if (x.empty()) geometry::gauss_legendre(20, x, w);
  const int panels = 2 + static_cast<int>(k * radius / kPi);
  const double hp = radius / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    for (std::size_t q = 0; q < x.size(); ++q) {
      const double r = hp * (p + 0.5 * (x[q] + 1.0));
      const double f = radial(dim, ell, k * r);
      s += 0.5 * hp * w[q] * f * f * std::pow(r, dim - 1);
    }
  }
  return s;
}

// Real spherical harmonic, orthonormal on S^2.
double real_sph_harmonic(int ell, int m, double theta, double phi) {
  if (m == 0) return std::sph_legendre(ell, 0, theta);
  const double y = std::sqrt(2.0) * std::sph_legendre(ell, std::abs(m), theta);
  return m > 0 ? y * std::cos(m * phi) : y * std::sin(-m * phi);
}

struct ModeLess {
  bool operator()(const AnalyticMode& a, const AnalyticMode& b) const {
    return std::tie(a.eigenvalue, a.component, a.index) < std::tie(b.eigenvalue, b.component, b.index);
  }
};

std::vector<AnalyticMode> box_modes(const std::vector<double>& sides, int k) {
  const int dim = static_cast<int>(sides.size());
  double bound = std::numeric_limits<double>::infinity();
  for (double a : sides) bound = std::min(bound, std::pow(kPi * k / a, 2));
  bound *= 1.0 + 1e-12;
  std::array<int, 3> top{0, 0, 0};
  for (int i = 0; i < dim; ++i) top[i] = static_cast<int>(std::floor(sides[i] * std::sqrt(bound) / kPi));
  std::vector<AnalyticMode> out;
  for (int m1 = 0; m1 <= top[0]; ++m1) {
    for (int m2 = 0; m2 <= top[1]; ++m2) {
      for (int m3 = 0; m3 <= top[2]; ++m3) {
        const std::array<int, 3> idx{m1, m2, m3};
        double mu = 0.0, vol = 1.0;
        for (int i = 0; i < dim; ++i) {
          mu += std::pow(kPi * idx[i] / sides[i], 2);
          vol *= sides[i] * (idx[i] == 0 ? 1.0 : 0.5);
        }
        if (mu > bound) continue;
        AnalyticMode mode;
        mode.kind = AnalyticMode::Kind::Box;
        mode.index = idx;
        mode.eigenvalue = mu;
        mode.wavenumber = std::sqrt(mu);
        mode.normalization = 1.0 / std::sqrt(vol);
        out.push_back(mode);
      }
    }
  }
  std::sort(out.begin(), out.end(), ModeLess{});
  if (static_cast<int>(out.size()) > k) out.resize(k);
  return out;
}

// Roots of angular order ell up to `limit`, fetched in growing batches.
std::vector<double> roots_below(int dim, int ell, double limit) {
  int count = 8;
  while (true) {
    auto r = specfun::neumann_radial_roots(dim, ell, count);
    if (r.back() > limit) {
      r.erase(std::upper_bound(r.begin(), r.end(), limit), r.end());
      return r;
    }
    count *= 2;
  }
}

std::vector<AnalyticMode> ball_modes(int dim, double radius, int k) {
  // Orders 0 and 1 alone already supply k nonconstant modes, which bounds
  // the k-th eigenvalue; every other order only needs roots below that.
  auto r0 = specfun::neumann_radial_roots(dim, 0, k + 1);
  auto r1 = specfun::neumann_radial_roots(dim, 1, k + 1);
  std::vector<double> pool = r0;
  for (double s : r1) pool.insert(pool.end(), dim == 2 ? 2 : 3, s);
  std::sort(pool.begin(), pool.end());
  const double limit = pool[std::min<std::size_t>(k, pool.size() - 1)] * (1.0 + 1e-12);

  std::vector<AnalyticMode> out;
  auto push = [&](int ell, int s, int m, double root) {
    AnalyticMode mode;
    mode.kind = dim == 2 ? AnalyticMode::Kind::Disk : AnalyticMode::Kind::Ball;
    mode.index = {ell, s, m};
    mode.wavenumber = root / radius;
    mode.eigenvalue = mode.wavenumber * mode.wavenumber;
    double n2 = radial_norm2(dim, ell, mode.wavenumber, radius);
    if (dim == 2) n2 *= ell == 0 ? 2.0 * kPi : kPi;
    mode.normalization = 1.0 / std::sqrt(n2);
    out.push_back(mode);
  };
  push(0, 0, 0, 0.0);
  for (int ell = 0;; ++ell) {
    const auto roots = ell == 0 ? r0 : ell == 1 ? r1 : roots_below(dim, ell, limit);
    bool any = false;
    for (std::size_t s = 0; s < roots.size(); ++s) {
      if (roots[s] > limit) break;
      any = true;
      if (dim == 2) {
        push(ell, static_cast<int>(s) + 1, 0, roots[s]);
        if (ell > 0) push(ell, static_cast<int>(s) + 1, 1, roots[s]);
      } else {
        for (int m = -ell; m <= ell; ++m) push(ell, static_cast<int>(s) + 1, m, roots[s]);
      }
    }
    if (!any || ell >= static_cast<int>(specfun::kBesselMaxOrder) - 2) break;
  }
  std::sort(out.begin(), out.end(), ModeLess{});
  if (static_cast<int>(out.size()) > k) out.resize(k);
  return out;
}

double eval_mode(const AnalyticMode& mode, const geometry::PlacedDomain& part, const Point& x) {
  // Pull x back to the component's own frame.
  Point y = x - part.placement.offset;
  if (part.placement.angle != 0.0) {
    const double c = std::cos(part.placement.angle), s = std::sin(part.placement.angle);
    y = Point(c * y.x() + s * y.y(), -s * y.x() + c * y.y(), y.z());
  }
  if (!geometry::contains(part.spec, y)) return 0.0;
  switch (mode.kind) {
    case AnalyticMode::Kind::Box: {
      std::array<double, 3> sides{0, 0, 0};
      int dim = 2;
      if (const auto* r = std::get_if<geometry::Rectangle>(&part.spec.shape)) {
        sides = {r->a, r->b, 0.0};
      } else {
        const auto& b = std::get<geometry::Box3>(part.spec.shape);
        sides = {b.a, b.b, b.c};
        dim = 3;
      }
      double v = mode.normalization;
      for (int i = 0; i < dim; ++i) v *= std::cos(kPi * mode.index[i] * (y[i] + 0.5 * sides[i]) / sides[i]);
      return v;
    }
    case AnalyticMode::Kind::Disk: {
      const double r = std::hypot(y.x(), y.y());
      const int ell = mode.index[0];
      double v = mode.normalization * radial(2, ell, mode.wavenumber * r);
      if (ell > 0) {
        const double theta = std::atan2(y.y(), y.x());
        v *= mode.index[2] == 0 ? std::cos(ell * theta) : std::sin(ell * theta);
      }
      return v;
    }
    case AnalyticMode::Kind::Ball: {
      const double r = y.norm();
      const int ell = mode.index[0];
      const double theta = r > 0.0 ? std::acos(std::clamp(y.z() / r, -1.0, 1.0)) : 0.0;
      const double phi = std::atan2(y.y(), y.x());
      return mode.normalization * radial(3, ell, mode.wavenumber * r) *
             real_sph_harmonic(ell, mode.index[2], theta, phi);
    }
  }
  return 0.0;
}

// Sign convention: the largest-magnitude entry (first on ties) is positive.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index imax = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[imax]) * (1.0 + 1e-9)) imax = i;
  }
  if (v[imax] < 0.0) v = -v;
}

}  // namespace

std::string AnalyticMode::describe() const {
  std::ostringstream s;
  switch (kind) {
    case Kind::Box:
      s << "cos(" << index[0] << "," << index[1] << "," << index[2] << ")";
      break;
    case Kind::Disk:
      s << "J_" << index[0] << " root " << index[1] << (index[0] == 0 ? "" : index[2] ? " sin" : " cos");
      break;
    case Kind::Ball:
      s << "j_" << index[0] << " root " << index[1] << " Y_" << index[0] << "^" << index[2];
      break;
  }
  s << " @component " << component;
  return s.str();
}

double SpectralResult::eval(std::size_t j, const Point& x) const {
  if (!analytic()) throw PreconditionError("eval needs an analytic spectrum; sample FEM results on a mesh");
  if (j >= modes.size()) throw RangeError("eigenfunction index out of range");
  const auto& mode = modes[j];
  return eval_mode(mode, parts.at(mode.component), x);
}

std::vector<double> SpectralResult::sample(std::size_t j, const geometry::Quadrature& q,
                                           const geometry::Mesh* mesh) const {
  if (analytic()) {
    std::vector<double> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = eval(j, q.nodes[i]);
    return out;
  }
  if (mesh == nullptr || q.parent.empty()) {
    throw PreconditionError("sampling a FEM eigenfunction needs its mesh and a mesh quadrature");
  }
  if (j >= eigenfunctions.size()) throw RangeError("eigenfunction index out of range");
  return q.interpolate(*mesh, eigenfunctions[j]);
}

nlohmann::json SpectralResult::to_json() const {
  nlohmann::json j;
  j["label"] = label;
  j["method"] = method;
  j["eigenvalues"] = eigenvalues;
  j["residuals"] = residuals;
  j["multiplicity_tol"] = multiplicity_tol;
  j["clusters"] = clusters;
  j["components"] = components;
  if (analytic()) {
    std::vector<std::string> d;
    for (const auto& m : modes) d.push_back(m.describe());
    j["modes"] = d;
  } else {
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << mesh_checksum;
    j["mesh_checksum"] = hex.str();
    j["num_vertices"] = num_vertices;
    j["solver"] = {{"iterations", iterations}, {"tolerance", tolerance}, {"seed", seed}};
  }
  return j;
}

std::vector<std::vector<int>> cluster_eigenvalues(const std::vector<double>& values, double rel) {
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!out.empty()) {
      const double prev = values[out.back().back()];
      if (std::abs(values[i] - prev) <= std::max(1e-8, rel * std::abs(values[i]))) {
        out.back().push_back(static_cast<int>(i));
        continue;
      }
    }
    out.push_back({static_cast<int>(i)});
  }
  return out;
}

bool has_analytic_spectrum(const geometry::DomainSpec& spec) {
  for (const auto& part : geometry::components(spec)) {
    const auto& s = part.spec.shape;
    if (!(std::holds_alternative<geometry::Disk>(s) || std::holds_alternative<geometry::Rectangle>(s) ||
          std::holds_alternative<geometry::Ball3>(s) || std::holds_alternative<geometry::Box3>(s))) {
      return false;
    }
  }
  return true;
}

SpectralResult analytic_spectrum(const geometry::DomainSpec& spec, int k) {
  if (k < 1) throw RangeError("requested eigenvalue count must be positive");
  if (!has_analytic_spectrum(spec)) {
    throw ValidityError("no closed-form spectrum for '" + geometry::describe(spec) +
                        "'; mesh it and use the FEM solver");
  }
  geometry::validate(spec);
  SpectralResult out;
  out.parts = geometry::components(spec);
  out.components = static_cast<int>(out.parts.size());
  out.label = geometry::describe(spec);
  out.method = "analytic";
  std::vector<AnalyticMode> all;
  for (std::size_t c = 0; c < out.parts.size(); ++c) {
    const auto& shape = out.parts[c].spec.shape;
    std::vector<AnalyticMode> modes;
    if (const auto* d = std::get_if<geometry::Disk>(&shape)) {
      modes = ball_modes(2, d->radius, k);
    } else if (const auto* b = std::get_if<geometry::Ball3>(&shape)) {
      modes = ball_modes(3, b->radius, k);
    } else if (const auto* r = std::get_if<geometry::Rectangle>(&shape)) {
      modes = box_modes({r->a, r->b}, k);
    } else {
      const auto& x = std::get<geometry::Box3>(shape);
      modes = box_modes({x.a, x.b, x.c}, k);
    }
    for (auto& m : modes) m.component = static_cast<int>(c);
    all.insert(all.end(), modes.begin(), modes.end());
  }
  std::sort(all.begin(), all.end(), ModeLess{});
  all.resize(k);
  out.modes = all;
  for (const auto& m : all) out.eigenvalues.push_back(m.eigenvalue);
  out.residuals.assign(k, 0.0);
  out.clusters = cluster_eigenvalues(out.eigenvalues, out.multiplicity_tol);
  return out;
}

kernels::P1Matrices assemble(const geometry::Mesh& mesh) { return kernels::assemble_p1_parallel(mesh); }

double rayleigh_quotient(const kernels::P1Matrices& km, const Eigen::VectorXd& nodal) {
  const double den = nodal.dot(km.mass * nodal);
  if (!(den > 0.0)) throw DomainError("Rayleigh quotient of a vector with zero mass norm");
  return nodal.dot(km.stiffness * nodal) / den;
}

double rayleigh_quotient(const geometry::Mesh& mesh, const Eigen::VectorXd& nodal) {
  if (nodal.size() != mesh.num_vertices()) throw DomainError("nodal vector size does not match the mesh");
  return rayleigh_quotient(assemble(mesh), nodal);
}

namespace detail {

Eigen::VectorXd residual_norms(const kernels::P1Matrices& km, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& mu) {
  const Eigen::MatrixXd kx = km.stiffness * x;
  const Eigen::MatrixXd mx = km.mass * x;
  Eigen::VectorXd r(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    r[j] = (kx.col(j) - mu[j] * mx.col(j)).norm() / mx.col(j).norm();
  }
  return r;
}

Ritz dense_solve(const kernels::P1Matrices& km, const Eigen::MatrixXd& z, int count) {
  const Eigen::Index n = km.mass.rows();
  // Orthonormal (Euclidean) basis of the complement of M z.
  Eigen::MatrixXd q;
  if (z.cols() > 0) {
    const Eigen::MatrixXd mz = km.mass * z;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(mz);
    q = (qr.householderQ() * Eigen::MatrixXd::Identity(n, n)).rightCols(n - z.cols());
  } else {
    q = Eigen::MatrixXd::Identity(n, n);
  }
  const Eigen::MatrixXd kq = km.stiffness * q;
  const Eigen::MatrixXd mq = km.mass * q;
  Eigen::MatrixXd kr = q.transpose() * kq;
  Eigen::MatrixXd mr = q.transpose() * mq;
  kr = 0.5 * (kr + kr.transpose()).eval();
  mr = 0.5 * (mr + mr.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(kr, mr);
  if (es.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed", {});
  Ritz out;
  out.values = es.eigenvalues().head(count);
  out.vectors = q * es.eigenvectors().leftCols(count);
  for (int j = 0; j < count; ++j) {
    auto v = out.vectors.col(j);
    v /= std::sqrt(v.dot(km.mass * v));
  }
  out.residuals = residual_norms(km, out.vectors, out.values);
  return out;
}

}  // namespace detail

SpectralResult fem_spectrum(const geometry::Mesh& mesh, int k, double tol, const SolverOptions& options) {
  if (k < 1 || k > 50) throw RangeError("eigenvalue count must be in [1, 50]");
  if (!(tol > 0.0)) throw RangeError("solver tolerance must be positive");
  const auto km = assemble(mesh);
  const int n = mesh.num_vertices();
  int nc = 0;
  const auto labels = mesh.vertex_components(&nc);
  if (k > n) throw RangeError("more eigenvalues requested than the mesh has unknowns");

  // Per-component constants, M-orthonormal since their supports are disjoint.
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, nc);
  for (int i = 0; i < n; ++i) z(i, labels[i]) = 1.0;
  for (int c = 0; c < nc; ++c) z.col(c) /= std::sqrt(z.col(c).dot(km.mass * z.col(c)));

  SpectralResult out;
  out.method = "kernel";  // only zero modes requested
  out.mesh_checksum = mesh.checksum();
  out.num_vertices = n;
  out.components = nc;
  out.tolerance = tol;
  out.seed = options.seed;
  out.label = "mesh h=" + std::to_string(mesh.h);

  const int zeros = std::min(k, nc);
  const int count = k - zeros;
  detail::Ritz ritz;
  if (count > 0) {
    const int block = count + std::max(3, count / 4);
    const bool dense = options.method == SolverOptions::Method::Dense ||
                       (options.method == SolverOptions::Method::Auto && n < options.dense_limit) ||
                       4 * block >= n - nc;
    if (dense) {
      ritz = detail::dense_solve(km, z, count);
      out.method = "dense";
    } else {
      double area = 0.0;
      for (int t = 0; t < mesh.num_triangles(); ++t) area += mesh.triangle_area(t);
      ritz = detail::lobpcg_solve(km, z, count, tol, 1.0 / area, options);
      out.method = "lobpcg";
    }
    out.iterations = ritz.iterations;
  }

  Eigen::MatrixXd x(n, k);
  Eigen::VectorXd mu(k);
  for (int j = 0; j < zeros; ++j) {
    x.col(j) = z.col(j);
    mu[j] = 0.0;
  }
  for (int j = 0; j < count; ++j) {
    x.col(zeros + j) = ritz.vectors.col(j);
    mu[zeros + j] = ritz.values[j];
    fix_sign(x.col(zeros + j));
  }
  const Eigen::VectorXd res = detail::residual_norms(km, x, mu);
  out.eigenvalues.assign(mu.data(), mu.data() + k);
  out.residuals.assign(res.data(), res.data() + k);
  for (int j = 0; j < k; ++j) out.eigenfunctions.push_back(x.col(j));
  out.clusters = cluster_eigenvalues(out.eigenvalues, out.multiplicity_tol);
  // Zero modes use a scale-free residual floor: ||K 1|| is pure rounding.
  for (int j = 0; j < k; ++j) {
    const double allowed = j < zeros ? std::max(tol, 1e-10) : tol;
    if (!(res[j] <= allowed)) {
      throw SolverError("eigenpair " + std::to_string(j) + " residual " + std::to_string(res[j]) +
                            " above tolerance " + std::to_string(tol),
                        out.residuals);
    }
  }
  return out;
}

}  // namespace foldlab::eigensolve
