#pragma once

#include <cstdint>
#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "foldlab/geometry.hpp"
#include "foldlab/sphere.hpp"

namespace foldlab::verify {

enum class Verdict { Holds, Inconclusive, Violated };
std::string to_string(Verdict v);
/// Throws ConfigError on an unknown name.
Verdict verdict_from_string(const std::string& s);

/// How lhs and rhs are compared. Strict checks need margin > uncertainty;
/// non-strict ones accept margin >= -uncertainty; Equal needs |margin| <=
/// uncertainty.
enum class Relation { Greater, GreaterEqual, Equal };
std::string to_string(Relation r);
Relation relation_from_string(const std::string& s);

Verdict classify(double margin, double uncertainty, Relation relation);

struct VerificationRecord {
  std::string theorem_id;
  std::string input;  // domain or metric descriptor
  int dim = 2;
  Relation relation = Relation::Greater;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;       // lhs - rhs (+inf when lhs is)
  double uncertainty = 0.0;  // the tolerance the verdict was declared under
  Verdict verdict = Verdict::Inconclusive;
  nlohmann::json intermediate = nlohmann::json::object();  // constants and partial quantities
  nlohmann::json certificates = nlohmann::json::object();
  nlohmann::json solver = nlohmann::json::object();
  std::vector<std::string> notes;
  double wall_time = 0.0;  // seconds

  /// Sets margin and verdict from lhs, rhs, uncertainty and relation.
  void decide();
  /// Non-finite numbers become the strings "inf", "-inf", "nan".
  nlohmann::json to_json(bool timings = false) const;
  static VerificationRecord from_json(const nlohmann::json& j);
};

/// Right-side constants, computed once per dimension.
struct BallConstants {
  int dim = 2;
  double mu1_ball = 0.0;     // mu_1 of the unit ball
  double ball_volume = 0.0;  // |B^n|
  double two_ball_product = 0.0;  // mu_2(B u B) |B u B|^{2/n}
  double kn = 0.0;
  double sphere_volume = 0.0;  // w_n
  nlohmann::json to_json() const;
};
const BallConstants& ball_constants(int dim);

struct DomainOptions {
  double h = 0.05;                // FEM mesh size; the error estimate also solves at 2h and 4h
  bool prefer_analytic = true;    // closed-form spectrum when the family has one
  bool certificate = true;        // 2D test-function chain
  double tol = 1e-9;              // eigen residual tolerance
  std::uint64_t seed = 20240611;
  double safety = 3.0;            // multiplies the extrapolated FEM error
  bool refine_on_violation = true;
};

/// Neumann eigenvalues mu_0 .. mu_{k-1} plus an error bound per eigenvalue.
struct SpectrumEstimate {
  std::vector<double> mu;
  std::vector<double> error;  // absolute bound; tiny for closed forms
  std::string method;         // "analytic" or the FEM solver
  double h = 0.0;
  double observed_order = 0.0;  // from the three FEM levels, 0 for closed forms
  int zero_modes = 1;           // connected components
  nlohmann::json to_json() const;
};
SpectrumEstimate estimate_spectrum(const geometry::DomainSpec& spec, int k, const DomainOptions& options = {});

/// sum_{i=2}^n 1/mu_i against (n-1)|Omega|^{2/n}/(mu_2(B u B)|B u B|^{2/n}).
/// Strict for connected domains, non-strict for unions (two equal balls are
/// the equality case). n = 3 needs a closed-form family.
VerificationRecord verify_theorem_domain(const geometry::DomainSpec& spec, int n, const DomainOptions& options = {});

/// sum_{i=1}^{n-1} 1/mu_i >= (n-1)|Omega|^{2/n}/(mu_1(B)|B|^{2/n}); balls give equality.
VerificationRecord verify_wang_xia(const geometry::DomainSpec& spec, int n, const DomainOptions& options = {});

/// sum_{i=1}^n 1/mu_i > ((n-1)/2^{2/n} + 1)|Omega|^{2/n}/(mu_1(B)|B|^{2/n}).
VerificationRecord verify_corollary(const geometry::DomainSpec& spec, int n, const DomainOptions& options = {});

struct SweepOptions {
  double r = 1.0;
  double neck = 0.5;
  double h = 0.025;
  DomainOptions domain;  // h is taken from above; the certificate is off by default
};

struct SweepTable {
  std::vector<double> eps_ratio;  // eps / r
  std::vector<double> product;    // mu_2 |Omega|
  std::vector<double> ratio;      // product / limit
  double limit = 0.0;             // mu_1(D) * 2 pi scaled to r
  bool monotone = true;           // product increasing along the sweep
  std::vector<VerificationRecord> records;

  /// Columns eps_over_r,eps,h,mu2,area,product,ratio,uncertainty,verdict.
  std::string to_csv() const;
};

/// Dumbbells of lobe radius r and strip half-width eps_ratio[i] * r. The
/// values must be decreasing.
SweepTable sharpness_sweep(const std::vector<double>& eps_ratio, const SweepOptions& options = {});

/// FEM eigenvalues on a sequence of meshes against the closed form.
struct ConvergenceAudit {
  std::vector<double> h;
  std::vector<std::vector<double>> mu;  // per mesh, mu_1 .. mu_{k-1}
  std::vector<double> exact;
  std::vector<double> max_rel_error;
  std::vector<double> observed_order;   // between consecutive meshes
  nlohmann::json to_json() const;
};
ConvergenceAudit mesh_convergence_audit(const geometry::DomainSpec& spec, const std::vector<double>& h, int k,
                                        double tol = 1e-9);

struct SphereSuiteOptions {
  sphere::SphereCheckOptions check;
  double safety = 3.0;  // multiplies the truncation estimate
};

/// Records "sphere1" (sum of three reciprocals against 3A/8pi) and "sphere2"
/// (the folded bound 3A/16pi) per metric. Metrics on S^3 are covered by
/// property records built from the energy identities only.
std::vector<VerificationRecord> verify_sphere_suite(const std::vector<sphere::ConformalFactor>& metrics,
                                                    const SphereSuiteOptions& options = {});
/// Energy identity, Moebius invariance, the folded energy bound and the
/// range of K_n in dimension dim.
std::vector<VerificationRecord> sphere_property_records(int dim);

using Job = std::function<std::vector<VerificationRecord>()>;
/// Runs the jobs on at most `workers` threads and returns their records
/// concatenated in job order. If jobs fail, the one with the lowest index
/// rethrows once all have finished.
std::vector<VerificationRecord> run_jobs(const std::vector<Job>& jobs, int workers);

enum class ReportFormat { Json, Csv };
/// json or csv from the file extension; anything else is a ConfigError.
ReportFormat format_for_path(const std::string& path);
/// CSV columns: theorem_id,input,dim,relation,lhs,rhs,margin,uncertainty,
/// verdict,wall_time (the last one empty unless timings are requested).
std::string report_string(const std::vector<VerificationRecord>& records, ReportFormat format,
                          bool timings = false);
/// Writes report_string to path. Throws Error on I/O failure.
void emit_report(const std::vector<VerificationRecord>& records, const std::string& path, ReportFormat format,
                 bool timings = false);
std::vector<VerificationRecord> parse_json_report(const std::string& text);

/// 17 significant digits, enough to read back the same double.
std::string format_double(double x);

}  // namespace foldlab::verify
