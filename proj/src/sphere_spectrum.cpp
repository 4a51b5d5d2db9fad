// Galerkin spectrum of conformal metrics on S^2, the cap + center solver and
// the reciprocal-sum checks built on them.
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "foldlab/errors.hpp"
#include "foldlab/kernels.hpp"
#include "foldlab/sphere.hpp"
#include "least_squares.hpp"

namespace foldlab::sphere {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void real_sh(int L, const Vec& x, double* out) {
  if (L < 0) throw RangeError("real_sh: negative degree");
  if (x.size() != 3) throw PreconditionError("real_sh: needs a point of S^2");
  const double z = x[2];
  // q(l, m) = normalized P_l^m(z) / sin^m; the sin^m goes into Re/Im (x + iy)^m.
  double qmm = 1.0 / std::sqrt(4.0 * kPi);
  double cm = 1.0, sm = 0.0;
  for (int m = 0; m <= L; ++m) {
    if (m > 0) {
      qmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m));
      const double c = cm * x[0] - sm * x[1];
      sm = cm * x[1] + sm * x[0];
      cm = c;
    }
    const double re = m == 0 ? 1.0 : std::sqrt(2.0) * cm;
    const double im = std::sqrt(2.0) * sm;
    double q2 = 0.0, q1 = qmm;
    for (int l = m; l <= L; ++l) {
      double q;
      if (l == m) {
        q = qmm;
      } else if (l == m + 1) {
        q = std::sqrt(2.0 * m + 3.0) * z * qmm;
      } else {
        const double dl = l, dm = m;
        const double a = std::sqrt((4.0 * dl * dl - 1.0) / (dl * dl - dm * dm));
        const double b = std::sqrt(((dl - 1.0) * (dl - 1.0) - dm * dm) / (4.0 * (dl - 1.0) * (dl - 1.0) - 1.0));
        q = a * (z * q1 - b * q2);
      }
      if (l > m) {
        q2 = q1;
        q1 = q;
      }
      out[sh_index(l, m)] = q * re;
      if (m > 0) out[sh_index(l, -m)] = q * im;
    }
  }
}

Eigen::MatrixXd real_sh_matrix(int L, const std::vector<Vec>& nodes) {
  const int b = (L + 1) * (L + 1);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> y(nodes.size(), b);
  const long n = static_cast<long>(nodes.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) real_sh(L, nodes[k], y.row(k).data());
  return y;
}

int sh_degree(Eigen::Index size) {
  const int L = static_cast<int>(std::lround(std::sqrt(static_cast<double>(size)))) - 1;
  if (L < 0 || (L + 1) * (L + 1) != size) throw PreconditionError("coefficient count is not a square");
  return L;
}

double eval_sh_series(const Eigen::VectorXd& c, const Vec& x) {
  const int L = sh_degree(c.size());
  Eigen::VectorXd y(c.size());
  real_sh(L, x, y.data());
  return c.dot(y);
}

namespace {

Eigen::MatrixXd mass_matrix(const ConformalFactor& u, int L, int refine) {
  const SphereGrid g = galerkin_grid(L, refine);
  const Eigen::MatrixXd y = real_sh_matrix(L, g.nodes);
  Eigen::VectorXd w(static_cast<Eigen::Index>(g.size()));
  const long n = static_cast<long>(g.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) w[k] = g.weights[k] * u.density(g.nodes[k]);
  return kernels::weighted_gram_parallel(y, w);
}

}  // namespace

eigensolve::SpectralResult s2_conformal_spectrum(const ConformalFactor& u, int L, int k) {
  if (u.dim != 2) throw PreconditionError("s2_conformal_spectrum needs a factor on S^2");
  if (L < 1 || L > 40) throw RangeError("harmonic degree must lie in [1, 40]");
  const int b = (L + 1) * (L + 1);
  if (k < 0 || k > b - 1) throw RangeError("eigenvalue count must lie in [0, (L+1)^2 - 1]");
  const Eigen::MatrixXd m = mass_matrix(u, L, 1);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("mass matrix is not positive definite; refine the grid or reduce the factor");
  }
  Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(b, b);
  for (int l = 0; l <= L; ++l) {
    for (int mm = -l; mm <= l; ++mm) kmat(sh_index(l, mm), sh_index(l, mm)) = l * (l + 1.0);
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(kmat, m);
  if (ges.info() != Eigen::Success) throw SolverError("generalized eigensolver failed");

  eigensolve::SpectralResult r;
  r.method = "galerkin";
  r.label = "S2 " + u.describe() + " L=" + std::to_string(L);
  r.num_vertices = b;
  for (int j = 0; j <= k; ++j) {
    r.eigenvalues.push_back(ges.eigenvalues()[j]);
    r.residuals.push_back(0.0);
    Eigen::VectorXd v = ges.eigenvectors().col(j);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0) v = -v;
    r.eigenfunctions.push_back(std::move(v));
  }
  r.clusters = eigensolve::cluster_eigenvalues(r.eigenvalues, r.multiplicity_tol);
  return r;
}

double mass_quadrature_error(const ConformalFactor& u, int L) {
  return (mass_matrix(u, L, 2) - mass_matrix(u, L, 1)).cwiseAbs().maxCoeff();
}

// --- cap + center ----------------------------------------------------------

SphereMeasure cap_measure(const ConformalFactor& u, const Cap& cap, int polar) {
  const SphereGrid g = polar_grid(2, polar, cap.p, cap.boundary_height());
  SphereMeasure m;
  m.dim = 2;
  m.nodes = g.nodes;
  m.weights.resize(g.size());
  const long n = static_cast<long>(g.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) m.weights[k] = g.weights[k] * u.density(g.nodes[k]);
  return m;
}

namespace {

struct FoldedMeasure {
  SphereMeasure measure;  // original nodes with density weights
  SphereMeasure pushed;   // folded nodes, same weights
  Eigen::MatrixXd modes;  // eigenfunction values at the original nodes
  double total = 0.0;
};

FoldedMeasure fold_measure(const ConformalFactor& u, const std::vector<Eigen::VectorXd>& fs, const Cap& cap,
                           int polar) {
  FoldedMeasure f;
  f.measure = cap_measure(u, cap, polar);
  f.pushed = f.measure;
  const long n = static_cast<long>(f.measure.nodes.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) f.pushed.nodes[k] = fold_map(cap, f.measure.nodes[k]);
  f.modes.resize(n, static_cast<Eigen::Index>(fs.size()));
  if (!fs.empty()) {
    const Eigen::MatrixXd y = real_sh_matrix(sh_degree(fs.front().size()), f.measure.nodes);
    for (std::size_t j = 0; j < fs.size(); ++j) f.modes.col(static_cast<Eigen::Index>(j)) = y * fs[j];
  }
  f.total = f.measure.total();
  return f;
}

// Rows phi_xi(y_k) for the nodes y_k.
Eigen::MatrixXd mapped(const SphereMeasure& m, const Vec& xi) {
  const long n = static_cast<long>(m.nodes.size());
  Eigen::MatrixXd out(n, m.dim + 1);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) out.row(k) = mobius(xi, m.nodes[k]).transpose();
  return out;
}

// int phi_xi(y) h(x) dmu(x), one column per function h.
Eigen::MatrixXd moments(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& h, const std::vector<double>& w) {
  Eigen::MatrixXd out(phi.cols(), h.cols());
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index i = 0; i < phi.cols(); ++i) {
      const Eigen::VectorXd v = phi.col(i).cwiseProduct(h.col(j));
      out(i, j) = kernels::weighted_sum_parallel(v.data(), w.data(), w.size());
    }
  }
  return out;
}

std::vector<double> residuals_for(const FoldedMeasure& f, const Vec& xi) {
  const Eigen::MatrixXd phi = mapped(f.pushed, xi);
  Eigen::MatrixXd h(phi.rows(), 2);
  h.col(0).setOnes();
  h.col(1) = f.modes.col(0);
  const Eigen::MatrixXd mom = moments(phi, h, f.measure.weights) / f.total;
  std::vector<double> r;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 3; ++i) r.push_back(mom(i, j));
  }
  return r;
}

// Orthonormal basis: e[0] along v0, e[1] orthogonal to v0, e[2] orthogonal to both.
std::vector<Vec> borsuk_frame(const Vec& v0, const Vec& v1) {
  Eigen::MatrixXd a(3, 2);
  a.col(0) = v0;
  a.col(1) = v1;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ();
  return {q.col(0), q.col(1), q.col(2)};
}

}  // namespace

std::vector<double> cap_center_residuals(const ConformalFactor& u, const Eigen::VectorXd& f1, const Cap& cap,
                                         const Vec& xi, int polar) {
  return residuals_for(fold_measure(u, {f1}, cap, polar), xi);
}

CapCenter solve_cap_and_center(const ConformalFactor& u, const Eigen::VectorXd& f1, const CapCenterOptions& options) {
  if (u.dim != 2) throw PreconditionError("cap search is implemented on S^2");
  const double tmax = 1.0 - options.delta;
  int evaluations = 0;
  Vec warm = Vec::Zero(3);

  struct State {
    Cap cap;
    Vec xi;
    std::vector<double> r;
  };
  auto evaluate = [&](const Cap& cap) {
    ++evaluations;
    const FoldedMeasure f = fold_measure(u, {f1}, cap, options.polar);
    const CenterOfMass c = sphere_center_of_mass(f.pushed, 1e-12, false, &warm);
    warm = c.xi;
    return State{cap, c.xi, residuals_for(f, c.xi)};
  };

  // Starting axes: the f1-weighted first moment (both signs), then the
  // coordinate axes, then random caps.
  const SphereGrid g = polar_grid(2, options.polar, Vec::Unit(3, 2));
  Vec axis = Vec::Zero(3);
  for (std::size_t k = 0; k < g.size(); ++k) {
    axis += g.weights[k] * u.density(g.nodes[k]) * eval_sh_series(f1, g.nodes[k]) * g.nodes[k];
  }
  std::vector<std::pair<Vec, double>> starts;
  if (axis.norm() > 0.0) {
    starts.emplace_back(axis.normalized(), 0.0);
    starts.emplace_back(-axis.normalized(), 0.0);
  }
  for (int i = 2; i >= 0; --i) {
    starts.emplace_back(Vec::Unit(3, i), 0.0);
    starts.emplace_back(-Vec::Unit(3, i), 0.0);
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  while (static_cast<int>(starts.size()) < options.starts) {
    Vec p(3);
    p << normal(rng), normal(rng), normal(rng);
    starts.emplace_back(p.normalized(), unit(rng));
  }
  starts.resize(options.starts);

  CapCenter best;
  best.residual_norm = std::numeric_limits<double>::infinity();
  for (int s = 0; s < options.starts; ++s) {
    const Vec p0 = starts[s].first;
    const auto frame = borsuk_frame(p0, p0);  // e[1], e[2] span the tangent plane at p0
    auto cap_of = [&](const Eigen::VectorXd& z) {
      return Cap::make(p0 + z[0] * frame[1] + z[1] * frame[2], tmax * std::tanh(z[2]));
    };
    auto residual = [&](const Eigen::VectorXd& z, Eigen::VectorXd& out) {
      const State st = evaluate(cap_of(z));
      out.resize(3);
      for (int i = 0; i < 3; ++i) out[i] = st.r[3 + i];
    };
    Eigen::VectorXd z(3);
    z << 0.0, 0.0, std::atanh(starts[s].second / tmax);
    warm.setZero();
    try {
      State st = evaluate(cap_of(z));
      double start_norm = 0.0;
      for (double v : st.r) start_norm = std::max(start_norm, std::abs(v));
      // Symmetric metrics often start at a solution, where LM would only
      // wander along flat directions.
      if (start_norm > 1e-2 * options.tol) {
        foldlab::detail::least_squares(foldlab::detail::ResidualFunctor(3, 3, residual), z,
                                       options.max_evaluations);
        st = evaluate(cap_of(z));
      }
      double norm = 0.0;
      for (double v : st.r) norm = std::max(norm, std::abs(v));
      if (norm < best.residual_norm) {
        best.cap = st.cap;
        best.xi = st.xi;
        best.residuals = st.r;
        best.residual_norm = norm;
        best.start_index = s;
      }
      if (norm <= options.tol) break;
    } catch (const SolverError&) {
      // this start drove the center of mass out of reach; try the next one
    } catch (const DomainError&) {
    }
  }
  best.evaluations = evaluations;
  if (!(best.residual_norm <= options.tol)) {
    throw SolverError("no cap within tolerance after " + std::to_string(options.starts) + " starts (best " +
                          std::to_string(best.residual_norm) +
                          "); existence is topological, so this is a numerical failure",
                      best.residuals);
  }
  best.total = cap_measure(u, best.cap, options.polar).total();
  best.boundary_proximity = 1.0 - std::abs(best.cap.t);
  return best;
}

nlohmann::json CapCenter::to_json() const {
  return {{"p", std::vector<double>(cap.p.data(), cap.p.data() + cap.p.size())},
          {"t", cap.t},
          {"xi", std::vector<double>(xi.data(), xi.data() + xi.size())},
          {"residuals", residuals},
          {"residual_norm", residual_norm},
          {"total", total},
          {"boundary_proximity", boundary_proximity},
          {"start_index", start_index},
          {"evaluations", evaluations}};
}

nlohmann::json CoordinateChain::to_json() const {
  nlohmann::json b = nlohmann::json::array();
  for (const auto& e : basis) b.push_back(std::vector<double>(e.data(), e.data() + e.size()));
  return {{"xi", std::vector<double>(xi.data(), xi.data() + xi.size())},
          {"basis", b},
          {"norm2", norm2},
          {"energy", energy},
          {"coordinate_margin", coordinate_margin},
          {"volume_identity_error", volume_identity_error},
          {"chain_margin", chain_margin},
          {"energy_check", energy_check}};
}

nlohmann::json SphereCertificate::to_json() const {
  nlohmann::json j = {{"metric", metric},
                      {"L", L},
                      {"area", area},
                      {"lambda", lambda},
                      {"hersch", {{"lhs", hersch_lhs}, {"rhs", hersch_rhs}, {"margin", hersch_margin},
                                  {"truncation", hersch_truncation}}},
                      {"fold", {{"lhs", fold_lhs}, {"rhs", fold_rhs}, {"margin", fold_margin},
                                {"truncation", fold_truncation}}},
                      {"quadrature_error", quadrature_error}};
  if (hersch_chain) j["hersch"]["chain"] = hersch_chain->to_json();
  if (fold_chain) j["fold"]["chain"] = fold_chain->to_json();
  if (cap) j["fold"]["cap"] = cap->to_json();
  return j;
}

namespace {

double hersch_sum(const std::vector<double>& l) { return 1.0 / l[1] + 1.0 / l[2] + 1.0 / l[3]; }
double fold_sum(const std::vector<double>& l) { return 1.0 / l[2] + 1.0 / l[3] + 1.0 / l[4]; }

// Fills norms, energies and margins for test functions X_{e_i} o phi_xi o F.
void finish_chain(CoordinateChain& c, const SphereMeasure& pushed, const std::vector<double>& lambda, int offset,
                  const std::optional<Cap>& cap, double area, int polar) {
  const Eigen::MatrixXd phi = mapped(pushed, c.xi);
  c.chain_margin = -area;
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Eigen::VectorXd x = phi * c.basis[i];
    const Eigen::VectorXd x2 = x.cwiseProduct(x);
    const double n2 = kernels::weighted_sum_parallel(x2.data(), pushed.weights.data(), pushed.weights.size());
    const double e = conformal_energy(2, c.xi, cap, c.basis[i], polar).value;
    const double lam = lambda[offset + i];
    c.norm2.push_back(n2);
    c.energy.push_back(e);
    c.coordinate_margin.push_back(e - lam * n2);
    c.chain_margin += e / lam;
    sum += n2;
  }
  c.volume_identity_error = std::abs(sum - area) / area;
}

}  // namespace

SphereCertificate verify_sphere_theorems(const ConformalFactor& u, const SphereCheckOptions& options) {
  if (u.dim != 2) throw PreconditionError("spectral sphere checks run on S^2 only");
  SphereCertificate c;
  c.metric = u.describe();
  c.L = options.L;
  const auto spec = s2_conformal_spectrum(u, options.L, 4);
  c.lambda = spec.eigenvalues;
  c.area = metric_volume(u, 128);
  c.hersch_lhs = hersch_sum(c.lambda);
  c.hersch_rhs = 3.0 * c.area / (8.0 * kPi);
  c.hersch_margin = c.hersch_lhs - c.hersch_rhs;
  c.fold_lhs = fold_sum(c.lambda);
  c.fold_rhs = 3.0 * c.area / (16.0 * kPi);
  c.fold_margin = c.fold_lhs - c.fold_rhs;
  if (options.L - options.truncation_step >= 2) {
    const auto coarse = s2_conformal_spectrum(u, options.L - options.truncation_step, 4).eigenvalues;
    c.hersch_truncation = std::abs(c.hersch_lhs - hersch_sum(coarse));
    c.fold_truncation = std::abs(c.fold_lhs - fold_sum(coarse));
  }
  c.quadrature_error = mass_quadrature_error(u, options.L);
  if (!options.chains) return c;

  const int polar = options.cap.polar;
  const double i2 = coordinate_energy(2);
  {
    // Unfolded chain: xi centers dv_g, basis from f_1, f_2.
    const FoldedMeasure f = fold_measure(u, {spec.eigenfunctions[1], spec.eigenfunctions[2]},
                                         Cap::make(Vec::Unit(3, 2), 0.0), polar);
    SphereMeasure plain = f.measure;
    CoordinateChain ch;
    ch.xi = sphere_center_of_mass(plain, 1e-12).xi;
    const Eigen::MatrixXd mom = moments(mapped(plain, ch.xi), f.modes, plain.weights);
    const auto q = borsuk_frame(mom.col(0), mom.col(1));
    ch.basis = {q[0], q[1], q[2]};
    finish_chain(ch, plain, c.lambda, 1, std::nullopt, c.area, options.energy_polar);
    for (double e : ch.energy) ch.energy_check = std::max(ch.energy_check, std::abs(e - i2));
    c.hersch_chain = std::move(ch);
  }
  {
    // Folded chain: cap + center from f_1, basis from f_2, f_3.
    const CapCenter cc = solve_cap_and_center(u, spec.eigenfunctions[1], options.cap);
    const FoldedMeasure f = fold_measure(u, {spec.eigenfunctions[2], spec.eigenfunctions[3]}, cc.cap, polar);
    CoordinateChain ch;
    ch.xi = cc.xi;
    const Eigen::MatrixXd mom = moments(mapped(f.pushed, ch.xi), f.modes, f.measure.weights);
    const auto q = borsuk_frame(mom.col(0), mom.col(1));
    ch.basis = {q[0], q[1], q[2]};
    finish_chain(ch, f.pushed, c.lambda, 2, cc.cap, c.area, options.energy_polar);
    for (double e : ch.energy) ch.energy_check = std::max(ch.energy_check, e / (2.0 * i2));
    c.fold_chain = std::move(ch);
    c.cap = cc;
  }
  return c;
}

}  // namespace foldlab::sphere
