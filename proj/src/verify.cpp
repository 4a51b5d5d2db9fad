// Verification campaigns: spectra with error bars, inequality records and
// the worker pool that runs them.
#include "foldlab/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include "foldlab/eigensolve.hpp"
#include "foldlab/errors.hpp"
#include "foldlab/specfun.hpp"
#include "foldlab/testfun.hpp"

namespace foldlab::verify {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Inconclusive: return "inconclusive";
    case Verdict::Violated: return "violated";
  }
  return "inconclusive";
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "holds") return Verdict::Holds;
  if (s == "inconclusive") return Verdict::Inconclusive;
  if (s == "violated") return Verdict::Violated;
  throw ConfigError("unknown verdict '" + s + "'");
}

std::string to_string(Relation r) {
  switch (r) {
    case Relation::Greater: return ">";
    case Relation::GreaterEqual: return ">=";
    case Relation::Equal: return "=";
  }
  return ">";
}

Relation relation_from_string(const std::string& s) {
  if (s == ">") return Relation::Greater;
  if (s == ">=") return Relation::GreaterEqual;
  if (s == "=") return Relation::Equal;
  throw ConfigError("unknown relation '" + s + "'");
}

Verdict classify(double margin, double uncertainty, Relation relation) {
  if (std::isnan(margin) || std::isnan(uncertainty)) return Verdict::Inconclusive;
  switch (relation) {
    case Relation::Greater:
      if (margin > uncertainty) return Verdict::Holds;
      return margin < -uncertainty ? Verdict::Violated : Verdict::Inconclusive;
    case Relation::GreaterEqual:
      return margin >= -uncertainty ? Verdict::Holds : Verdict::Violated;
    case Relation::Equal:
      return std::abs(margin) <= uncertainty ? Verdict::Holds : Verdict::Violated;
  }
  return Verdict::Inconclusive;
}

void VerificationRecord::decide() {
  margin = std::isinf(lhs) && lhs > 0 && std::isfinite(rhs) ? kInf : lhs - rhs;
  verdict = classify(margin, uncertainty, relation);
}

nlohmann::json BallConstants::to_json() const {
  return {{"dim", dim},
          {"mu1_ball", mu1_ball},
          {"ball_volume", ball_volume},
          {"two_ball_product", two_ball_product},
          {"kn", kn},
          {"sphere_volume", sphere_volume}};
}

const BallConstants& ball_constants(int dim) {
  static std::mutex mutex;
  static std::map<int, BallConstants> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;
  if (dim < 2 || dim > 10) throw PreconditionError("ball constants need 2 <= n <= 10");
  BallConstants c;
  c.dim = dim;
  c.mu1_ball = specfun::neumann_ball_mu1(dim, 1.0);
  c.ball_volume = specfun::unit_ball_volume(dim);
  // two unit balls: mu_2 = mu_1(B), volume 2|B|
  c.two_ball_product = c.mu1_ball * std::pow(2.0 * c.ball_volume, 2.0 / dim);
  c.kn = specfun::kn_constant(dim);
  c.sphere_volume = specfun::sphere_volume(dim);
  return cache.emplace(dim, c).first->second;
}

// ------------------------------------------------------------- spectra

nlohmann::json SpectrumEstimate::to_json() const {
  return {{"mu", mu},
          {"error", error},
          {"method", method},
          {"h", h},
          {"observed_order", observed_order},
          {"zero_modes", zero_modes}};
}

namespace {

struct SpectrumRun {
  SpectrumEstimate estimate;
  eigensolve::SpectralResult spectrum;  // finest level
  std::optional<geometry::Mesh> mesh;
  std::vector<double> coarse_h;
};

SpectrumRun run_spectrum(const geometry::DomainSpec& spec, int k, const DomainOptions& opt) {
  geometry::validate(spec);
  SpectrumRun run;
  auto& est = run.estimate;
  est.zero_modes = static_cast<int>(geometry::components(spec).size());
  if (opt.prefer_analytic && eigensolve::has_analytic_spectrum(spec)) {
    run.spectrum = eigensolve::analytic_spectrum(spec, k);
    est.mu = run.spectrum.eigenvalues;
    est.method = "analytic";
    // root finding and Bessel evaluation are good to about 1e-12
    for (double m : est.mu) est.error.push_back(1e-12 * std::max(1.0, m));
    return run;
  }
  if (spec.dim() != 2) throw PreconditionError("the FEM solver is 2D only; n = 3 needs a closed-form family");
  if (!(opt.h > 0.0)) throw PreconditionError("mesh size must be positive");

  eigensolve::SolverOptions so;
  so.seed = opt.seed;
  run.mesh = geometry::generate_mesh(spec, opt.h);
  run.spectrum = eigensolve::fem_spectrum(*run.mesh, k, opt.tol, so);
  est.mu = run.spectrum.eigenvalues;
  est.method = run.spectrum.method;
  est.h = opt.h;

  // Coarser levels for the extrapolated error: ratio 2, or sqrt 2 if the
  // neck of a thin domain cannot be meshed that coarsely.
  std::vector<std::vector<double>> levels;
  double q = 0.0;
  for (double ratio : {2.0, std::numbers::sqrt2}) {
    try {
      levels.clear();
      for (double f : {ratio, ratio * ratio}) {
        const auto m = geometry::generate_mesh(spec, opt.h * f);
        levels.push_back(eigensolve::fem_spectrum(m, k, opt.tol, so).eigenvalues);
        run.coarse_h.push_back(opt.h * f);
      }
      q = ratio;
      break;
    } catch (const MeshRefinementError&) {
      run.coarse_h.clear();
      if (ratio != 2.0) throw;
    }
  }

  est.observed_order = kInf;
  for (int i = 0; i < k; ++i) {
    if (i < est.zero_modes) {
      est.error.push_back(0.0);  // exact per-component constants
      continue;
    }
    const double d1 = std::abs(levels[0][i] - est.mu[i]);
    const double d2 = std::abs(levels[1][i] - levels[0][i]);
    // observed order, kept in [1, 2]: FEM eigenvalues cannot beat second
    // order and a stalled sequence is treated as first order
    double p = d1 > 0.0 && d2 > 0.0 ? std::log(d2 / d1) / std::log(q) : 1.0;
    if (!std::isfinite(p)) p = 1.0;
    est.observed_order = std::min(est.observed_order, p);
    p = std::clamp(p, 1.0, 2.0);
    const double richardson = d1 / (std::pow(q, p) - 1.0);
    est.error.push_back(opt.safety * richardson + run.spectrum.residuals[i]);
  }
  if (!std::isfinite(est.observed_order)) est.observed_order = 0.0;
  return run;
}

// sum of 1/mu_i over [first, last] with its first-order uncertainty;
// indices below zero_modes contribute +inf.
std::pair<double, double> reciprocal_sum(const SpectrumEstimate& e, int first, int last) {
  double s = 0.0, u = 0.0;
  for (int i = first; i <= last; ++i) {
    if (i < e.zero_modes) return {kInf, 0.0};
    const double mu = e.mu[i], err = e.error[i];
    if (err >= mu) return {s + 1.0 / mu, kInf};
    s += 1.0 / mu;
    u += err / (mu * (mu - err));
  }
  return {s, u};
}

nlohmann::json spectrum_metadata(const SpectrumRun& run) {
  nlohmann::json j = run.estimate.to_json();
  j["coarse_h"] = run.coarse_h;
  if (run.mesh) {
    j["mesh_vertices"] = run.mesh->num_vertices();
    j["mesh_checksum"] = run.mesh->checksum();
    j["mesh_area"] = run.mesh->area();
  }
  j["residuals"] = run.spectrum.residuals;
  return j;
}

void check_dim(const geometry::DomainSpec& spec, int n) {
  if (spec.dim() != n) {
    throw PreconditionError("dimension " + std::to_string(n) + " does not match the domain (" +
                            std::to_string(spec.dim()) + ")");
  }
}

// Rhs constants are exact to about 1e-12.
double rhs_uncertainty(double rhs) { return 1e-12 * std::max(1.0, std::abs(rhs)); }

void note_infinite(VerificationRecord& r) {
  if (std::isinf(r.lhs)) {
    r.notes.push_back("mu_1 = 0 on a disconnected domain, so lhs = +inf and the check passes trivially");
  }
}

VerificationRecord domain_record(const geometry::DomainSpec& spec, int n, const DomainOptions& opt) {
  const Stopwatch clock;
  check_dim(spec, n);
  const bool chain = opt.certificate && n == 2;
  const auto run = run_spectrum(spec, chain ? n + 2 : n + 1, opt);
  const auto& est = run.estimate;
  const auto& c = ball_constants(n);
  const double vol = geometry::volume(spec);

  VerificationRecord r;
  r.theorem_id = "domain";
  r.input = geometry::describe(spec);
  r.dim = n;
  r.relation = est.zero_modes > 1 ? Relation::GreaterEqual : Relation::Greater;
  auto [lhs, unc] = reciprocal_sum(est, 2, n);
  r.lhs = lhs;
  r.rhs = (n - 1) * std::pow(vol, 2.0 / n) / c.two_ball_product;
  r.uncertainty = unc + rhs_uncertainty(r.rhs);
  r.decide();
  const double product = (n - 1) * std::pow(vol, 2.0 / n) / lhs;
  r.intermediate = {{"volume", vol},
                    {"mu", est.mu},
                    {"mu_error", est.error},
                    {"product", product},  // mu_2 |Omega| for n = 2
                    {"product_bound", c.two_ball_product},
                    {"constants", c.to_json()}};
  if (r.relation == Relation::GreaterEqual && std::abs(r.margin) <= r.uncertainty) {
    r.intermediate["equality"] = true;
  }
  r.solver = spectrum_metadata(run);
  note_infinite(r);

  if (chain && std::isfinite(lhs)) {
    const auto dom = run.mesh ? testfun::FieldDomain::from_mesh(*run.mesh) : testfun::FieldDomain::from_spec(spec);
    const auto g = specfun::weinberger_profile(n, dom.half_radius());
    testfun::FoldingOptions fo;
    fo.seed = opt.seed;
    const auto fold = testfun::solve_folding_pair(dom, g, run.spectrum, fo);
    const auto basis = testfun::borsuk_basis(dom, g, run.spectrum, fold.frame);
    const auto cert = testfun::reciprocal_sum_certificate(dom, g, run.spectrum, fold, basis);
    nlohmann::json b = nlohmann::json::array();
    for (const auto& e : basis.e) b.push_back({e.x(), e.y(), e.z()});
    r.certificates["folding"] = fold.to_json();
    r.certificates["basis"] = {{"e", b}, {"residuals", basis.residuals}, {"residual_norm", basis.residual_norm}};
    r.certificates["chain"] = cert.to_json();
  }
  r.wall_time = clock.seconds();
  return r;
}

// The inequalities are strict or attained, so an apparent violation on a
// mesh is first rerun at half the element size.
template <class F>
VerificationRecord with_refinement(const DomainOptions& opt, F&& check) {
  auto r = check(opt);
  if (r.verdict != Verdict::Violated || !opt.refine_on_violation || r.solver.value("method", "") == "analytic") {
    return r;
  }
  DomainOptions finer = opt;
  finer.h = 0.5 * opt.h;
  finer.refine_on_violation = false;
  auto again = check(finer);
  std::ostringstream os;
  os << "apparent violation at h = " << opt.h << " (margin " << r.margin << "), rerun at h = " << finer.h;
  again.notes.push_back(os.str());
  again.wall_time += r.wall_time;
  return again;
}

}  // namespace

SpectrumEstimate estimate_spectrum(const geometry::DomainSpec& spec, int k, const DomainOptions& options) {
  return run_spectrum(spec, k, options).estimate;
}

VerificationRecord verify_theorem_domain(const geometry::DomainSpec& spec, int n, const DomainOptions& options) {
  return with_refinement(options, [&](const DomainOptions& o) { return domain_record(spec, n, o); });
}

VerificationRecord verify_wang_xia(const geometry::DomainSpec& spec, int n, const DomainOptions& options) {
  return with_refinement(options, [&](const DomainOptions& o) {
    const Stopwatch clock;
    check_dim(spec, n);
    const auto run = run_spectrum(spec, n, o);
    const auto& c = ball_constants(n);
    const double vol = geometry::volume(spec);
    VerificationRecord r;
    r.theorem_id = "wang-xia";
    r.input = geometry::describe(spec);
    r.dim = n;
    r.relation = Relation::GreaterEqual;
    auto [lhs, unc] = reciprocal_sum(run.estimate, 1, n - 1);
    r.lhs = lhs;
    r.rhs = (n - 1) * std::pow(vol, 2.0 / n) / (c.mu1_ball * std::pow(c.ball_volume, 2.0 / n));
    r.uncertainty = unc + rhs_uncertainty(r.rhs);
    r.decide();
    r.intermediate = {{"volume", vol}, {"mu", run.estimate.mu}, {"mu_error", run.estimate.error},
                      {"constants", c.to_json()}};
    if (std::abs(r.margin) <= r.uncertainty) r.intermediate["equality"] = true;
    r.solver = spectrum_metadata(run);
    note_infinite(r);
    r.wall_time = clock.seconds();
    return r;
  });
}

VerificationRecord verify_corollary(const geometry::DomainSpec& spec, int n, const DomainOptions& options) {
  return with_refinement(options, [&](const DomainOptions& o) {
    const Stopwatch clock;
    check_dim(spec, n);
    const auto run = run_spectrum(spec, n + 1, o);
    const auto& c = ball_constants(n);
    const double vol = geometry::volume(spec);
    VerificationRecord r;
    r.theorem_id = "corollary";
    r.input = geometry::describe(spec);
    r.dim = n;
    r.relation = Relation::Greater;
    auto [lhs, unc] = reciprocal_sum(run.estimate, 1, n);
    r.lhs = lhs;
    const double factor = (n - 1) / std::pow(2.0, 2.0 / n) + 1.0;
    r.rhs = factor * std::pow(vol, 2.0 / n) / (c.mu1_ball * std::pow(c.ball_volume, 2.0 / n));
    r.uncertainty = unc + rhs_uncertainty(r.rhs);
    r.decide();
    r.intermediate = {{"volume", vol}, {"mu", run.estimate.mu}, {"mu_error", run.estimate.error},
                      {"factor", factor}, {"constants", c.to_json()}};
    r.solver = spectrum_metadata(run);
    note_infinite(r);
    r.wall_time = clock.seconds();
    return r;
  });
}

// --------------------------------------------------------------- sweep

std::string SweepTable::to_csv() const {
  std::ostringstream os;
  os << "eps_over_r,eps,h,mu2,area,product,ratio,uncertainty,verdict\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto& mu = r.intermediate.at("mu");
    const double vol = r.intermediate.at("volume").get<double>();
    const double eps = r.intermediate.at("eps").get<double>();
    os << format_double(eps_ratio[i]) << ',' << format_double(eps) << ','
       << format_double(r.solver.at("h").get<double>()) << ',' << format_double(mu.at(2).get<double>()) << ','
       << format_double(vol) << ',' << format_double(product[i]) << ',' << format_double(ratio[i]) << ','
       << format_double(r.intermediate.at("product_error").get<double>()) << ',' << to_string(r.verdict) << '\n';
  }
  return os.str();
}

SweepTable sharpness_sweep(const std::vector<double>& eps_ratio, const SweepOptions& options) {
  if (eps_ratio.empty()) throw PreconditionError("empty sweep");
  for (std::size_t i = 0; i < eps_ratio.size(); ++i) {
    if (!(eps_ratio[i] > 0.0 && eps_ratio[i] <= 1.0)) throw PreconditionError("eps/r must lie in (0, 1]");
    if (i > 0 && !(eps_ratio[i] < eps_ratio[i - 1])) throw PreconditionError("eps/r values must decrease");
  }
  SweepTable t;
  t.eps_ratio = eps_ratio;
  t.limit = ball_constants(2).two_ball_product;
  DomainOptions opt = options.domain;
  opt.h = options.h;
  for (double e : eps_ratio) {
    geometry::Dumbbell d{options.r, e * options.r, options.neck};
    auto rec = verify_theorem_domain(geometry::DomainSpec{d}, 2, opt);
    const double product = rec.intermediate.at("product").get<double>();
    // d(mu_2 |Omega|) from the eigenvalue error bound
    const double vol = rec.intermediate.at("volume").get<double>();
    rec.intermediate["product_error"] = rec.intermediate.at("mu_error").at(2).get<double>() * vol;
    rec.intermediate["eps"] = e * options.r;
    rec.intermediate["ratio"] = product / t.limit;
    t.product.push_back(product);
    t.ratio.push_back(product / t.limit);
    t.records.push_back(std::move(rec));
  }
  for (std::size_t i = 1; i < t.product.size(); ++i) t.monotone = t.monotone && t.product[i] > t.product[i - 1];
  return t;
}

// --------------------------------------------------------------- audit

nlohmann::json ConvergenceAudit::to_json() const {
  return {{"h", h}, {"mu", mu}, {"exact", exact}, {"max_rel_error", max_rel_error}, {"observed_order", observed_order}};
}

ConvergenceAudit mesh_convergence_audit(const geometry::DomainSpec& spec, const std::vector<double>& h, int k,
                                        double tol) {
  if (!eigensolve::has_analytic_spectrum(spec)) throw PreconditionError("the audit needs a closed-form family");
  if (h.size() < 2) throw PreconditionError("the audit needs at least two meshes");
  ConvergenceAudit a;
  a.h = h;
  const auto exact = eigensolve::analytic_spectrum(spec, k);
  const int zero = static_cast<int>(geometry::components(spec).size());
  a.exact.assign(exact.eigenvalues.begin() + zero, exact.eigenvalues.end());
  for (double hh : h) {
    const auto r = eigensolve::fem_spectrum(geometry::generate_mesh(spec, hh), k, tol);
    std::vector<double> mu(r.eigenvalues.begin() + zero, r.eigenvalues.end());
    double e = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) e = std::max(e, std::abs(mu[i] - a.exact[i]) / a.exact[i]);
    a.mu.push_back(std::move(mu));
    a.max_rel_error.push_back(e);
  }
  for (std::size_t i = 1; i < h.size(); ++i) {
    a.observed_order.push_back(std::log(a.max_rel_error[i - 1] / a.max_rel_error[i]) / std::log(h[i - 1] / h[i]));
  }
  return a;
}

// -------------------------------------------------------------- sphere

namespace {

VerificationRecord sphere_record(const sphere::SphereCertificate& c, bool hersch, double safety) {
  VerificationRecord r;
  r.theorem_id = hersch ? "sphere1" : "sphere2";
  r.input = c.metric;
  r.dim = 2;
  r.relation = hersch ? Relation::GreaterEqual : Relation::Greater;
  r.lhs = hersch ? c.hersch_lhs : c.fold_lhs;
  r.rhs = hersch ? c.hersch_rhs : c.fold_rhs;
  const double truncation = hersch ? c.hersch_truncation : c.fold_truncation;
  // Galerkin eigenvalues are upper bounds that converge from above; the
  // L vs L-2 change, times the safety factor, stands in for the gap.
  r.uncertainty = safety * truncation + c.quadrature_error * std::abs(r.lhs) + 1e-10 * std::max(1.0, r.rhs);
  r.decide();
  r.intermediate = {{"area", c.area},
                    {"lambda", c.lambda},
                    {"L", c.L},
                    {"truncation", truncation},
                    {"quadrature_error", c.quadrature_error},
                    {"relative_margin", r.margin / r.rhs}};
  if (hersch && std::abs(r.margin) <= r.uncertainty) r.intermediate["equality"] = true;
  const auto j = c.to_json();
  const char* key = hersch ? "hersch" : "fold";
  if (j.at(key).contains("chain")) r.certificates["chain"] = j.at(key).at("chain");
  if (!hersch && j.at("fold").contains("cap")) r.certificates["cap"] = j.at("fold").at("cap");
  r.solver = {{"method", "galerkin"}, {"L", c.L}, {"basis_size", (c.L + 1) * (c.L + 1)}};
  return r;
}

Eigen::VectorXd unit(int n, int i) { return Eigen::VectorXd::Unit(n, i); }

}  // namespace

std::vector<VerificationRecord> sphere_property_records(int dim) {
  if (dim != 2 && dim != 3) throw PreconditionError("sphere energies are implemented for n = 2, 3");
  const Stopwatch clock;
  const int m = dim + 1;
  const double In = sphere::coordinate_energy(dim);
  // quadrature tolerance of the energy integrals (non-smooth integrand for n = 3)
  const double rel = dim == 2 ? 1e-8 : 1e-6;
  const int polar = dim == 2 ? 96 : 64;
  const std::string input = "S^" + std::to_string(dim);
  auto base = [&](const std::string& id, Relation rel_kind) {
    VerificationRecord r;
    r.theorem_id = id;
    r.input = input;
    r.dim = dim;
    r.relation = rel_kind;
    r.intermediate["property_based"] = true;
    return r;
  };
  std::vector<VerificationRecord> out;

  {
    auto r = base("energy-identity", Relation::Equal);
    const auto e = sphere::conformal_energy(dim, Eigen::VectorXd::Zero(m), std::nullopt, unit(m, 0), polar);
    r.lhs = std::pow(e.value, 2.0 / dim);
    r.rhs = sphere::coordinate_energy_identity(dim);
    r.uncertainty = rel * r.rhs;
    r.decide();
    r.intermediate["energy"] = e.value;
    r.intermediate["closed_form"] = In;
    r.intermediate["kn"] = specfun::kn_constant(dim);
    out.push_back(std::move(r));
  }
  {
    // Moebius invariance: the worst deviation over a fixed set of centers
    auto r = base("energy-invariance", Relation::Equal);
    const double radius = dim == 2 ? 0.8 : 0.5;
    std::vector<Eigen::VectorXd> xis;
    for (int i = 0; i < m; ++i) xis.push_back(radius * unit(m, i));
    xis.push_back(Eigen::VectorXd::Constant(m, radius / std::sqrt(double(m))));
    nlohmann::json values = nlohmann::json::array();
    double worst = In;
    for (const auto& xi : xis) {
      const auto e = sphere::conformal_energy(dim, xi, std::nullopt, unit(m, m - 1), polar);
      values.push_back(e.value);
      if (std::abs(e.value - In) >= std::abs(worst - In)) worst = e.value;
    }
    r.lhs = worst;
    r.rhs = In;
    r.uncertainty = rel * In;
    r.decide();
    r.intermediate["radius"] = radius;
    r.intermediate["energies"] = values;
    out.push_back(std::move(r));
  }
  {
    // folding at most doubles the energy, strictly for every cap
    auto r = base("fold-energy", Relation::Greater);
    double worst = 0.0, err = 0.0;
    nlohmann::json values = nlohmann::json::array();
    for (double t : {0.0, 0.3, 0.6}) {
      const auto cap = sphere::Cap::make(unit(m, m - 1), t);
      for (int i = 0; i < m; ++i) {
        const auto e = sphere::conformal_energy(dim, Eigen::VectorXd::Zero(m), cap, unit(m, i), polar);
        values.push_back(e.value);
        if (e.value > worst) {
          worst = e.value;
          err = e.error_estimate;
        }
      }
    }
    r.lhs = 2.0 * In;
    r.rhs = worst;
    r.uncertainty = err + rel * In;
    r.decide();
    r.intermediate["energies"] = values;
    out.push_back(std::move(r));
  }
  {
    // K_n inside [1, 1.04]: lhs is the distance to the nearer end
    auto r = base("kn-range", Relation::GreaterEqual);
    const double kn = specfun::kn_constant(dim);
    r.lhs = std::min(kn - 1.0, 1.04 - kn);
    r.rhs = 0.0;
    r.uncertainty = 1e-12;
    r.decide();
    r.intermediate["kn"] = kn;
    out.push_back(std::move(r));
  }
  const double t = clock.seconds();
  for (auto& r : out) {
    r.wall_time = t / out.size();
    r.notes.push_back("property-based: a full spectrum on S^n, n >= 3, is out of scope");
  }
  return out;
}

std::vector<VerificationRecord> verify_sphere_suite(const std::vector<sphere::ConformalFactor>& metrics,
                                                    const SphereSuiteOptions& options) {
  std::vector<VerificationRecord> out;
  for (const auto& u : metrics) {
    const Stopwatch clock;
    if (u.dim != 2) {
      auto props = sphere_property_records(u.dim);
      for (auto& r : props) {
        r.input = r.input + " " + u.describe();
        out.push_back(std::move(r));
      }
      continue;
    }
    const auto c = sphere::verify_sphere_theorems(u, options.check);
    const double t = clock.seconds();
    for (bool hersch : {true, false}) {
      auto r = sphere_record(c, hersch, options.safety);
      r.wall_time = 0.5 * t;
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------- pool

std::vector<VerificationRecord> run_jobs(const std::vector<Job>& jobs, int workers) {
  if (workers < 1) throw PreconditionError("need at least one worker");
  std::vector<std::vector<VerificationRecord>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = jobs[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::min<int>(workers, static_cast<int>(jobs.size()));
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<VerificationRecord> out;
  for (auto& r : results) {
    for (auto& x : r) out.push_back(std::move(x));
  }
  return out;
}

}  // namespace foldlab::verify
