// Acceptance run: one PASS/FAIL line per criterion with its runtime.
// Exit status is the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "foldlab/eigensolve.hpp"
#include "foldlab/errors.hpp"
#include "foldlab/geometry.hpp"
#include "foldlab/specfun.hpp"
#include "foldlab/sphere.hpp"
#include "foldlab/verify.hpp"

using namespace foldlab;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += "[failed: " + what + "] ";
    }
  }
  void note(const char* fmt, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, a, b, c);
    detail += buf;
    detail += ' ';
  }
};

int failures = 0;

void criterion(const char* id, double limit_seconds, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail += std::string("[exception: ") + e.what() + "]";
  }
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (t > limit_seconds) {
    o.pass = false;
    o.detail += "[over the time limit]";
  }
  std::printf("%-4s %s  %8.2f s (limit %g s)  %s\n", id, o.pass ? "PASS" : "FAIL", t, limit_seconds, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

// J_1'(x) = (J_0(x) - J_2(x))/2 from the standard library, bisected on [1.5, 2.5].
double mu1_disk_oracle() {
  auto f = [](double x) { return 0.5 * (std::cyl_bessel_j(0.0, x) - std::cyl_bessel_j(2.0, x)); };
  double a = 1.5, b = 2.5;
  for (int i = 0; i < 200 && b - a > 1e-15; ++i) {
    const double m = 0.5 * (a + b);
    (f(a) * f(m) <= 0.0 ? b : a) = m;
  }
  const double s = 0.5 * (a + b);
  return s * s;
}

verify::VerificationRecord domain(const std::string& text, verify::DomainOptions o = {}) {
  const auto spec = geometry::parse_domain(text);
  return verify::verify_theorem_domain(spec, spec.dim(), o);
}

Eigen::Vector3d e(int i) { return Eigen::Vector3d::Unit(i); }

}  // namespace

int main() {
  criterion("AC1", 1.0, [](Outcome& o) {
    const double k2 = specfun::kn_constant(2);
    double lo = 2.0, hi = 0.0;
    for (int n = 3; n <= 50; ++n) {
      lo = std::min(lo, specfun::kn_constant(n));
      hi = std::max(hi, specfun::kn_constant(n));
    }
    const double k3 = specfun::kn_constant(3), k100 = specfun::kn_constant(100);
    o.check(std::abs(k2 - 1.0) <= 1e-12, "K_2 = 1 to 1e-12");
    o.check(hi <= 1.04 && lo >= 1.0, "1 <= K_n <= 1.04 on [3, 50]");
    o.check(k100 < k3, "K_100 < K_3");
    o.note("|K_2-1| = %.1e, K_n on [3,50] in [%.6f, %.6f],", std::abs(k2 - 1.0), lo, hi);
    o.note("K_100 = %.8f < K_3 = %.8f", k100, k3);
  });

  criterion("AC2", 1.0, [](Outcome& o) {
    const double mu = specfun::neumann_ball_mu1(2, 1.0);
    const double oracle = mu1_disk_oracle();
    o.check(std::abs(mu - 3.39) <= 0.003 * 3.39, "within 0.3% of 3.39");
    o.check(std::abs(mu - oracle) <= 1e-10, "within 1e-10 of the bisection oracle");
    o.note("mu_1(D) = %.13f, mu_1|D| = %.6f pi, oracle diff %.1e", mu, mu, std::abs(mu - oracle));
  });

  criterion("AC3", 120.0, [](Outcome& o) {
    const auto spec = geometry::parse_domain("rectangle:pi,0.5pi");
    const auto a = verify::mesh_convergence_audit(spec, {0.16, 0.08, 0.04, 0.02}, 3);
    const auto& fine = a.mu.back();
    o.check(std::abs(fine[0] - 1.0) <= 0.01 && std::abs(fine[1] - 4.0) <= 0.04, "(mu_1, mu_2) = (1, 4) within 1%");
    for (double p : a.observed_order) o.check(p >= 1.8 && p <= 2.2, "order in [1.8, 2.2]");
    o.note("h = 0.02: mu = (%.6f, %.6f);", fine[0], fine[1]);
    o.note("orders %.3f %.3f %.3f", a.observed_order[0], a.observed_order[1], a.observed_order[2]);
  });

  criterion("AC4", 600.0, [](Outcome& o) {
    for (const char* d : {"square:2pi", "ellipse:1.5,1", "ellipse:3,1", "lshape:1"}) {
      const auto r = domain(d);
      const double product = r.intermediate.at("product").get<double>();
      const double bound = r.intermediate.at("product_bound").get<double>();
      o.check(product < bound, std::string(d) + ": mu_2 |Omega| below the bound");
      o.check(r.margin > 3.0 * r.uncertainty, std::string(d) + ": margin above 3x uncertainty");
      o.check(r.verdict == verify::Verdict::Holds, std::string(d) + " holds");
      o.detail += d;
      o.note(": mu2|O| = %.6f < %.6f, margin/uncertainty = %.3g;", product, bound, r.margin / r.uncertainty);
    }
  });

  criterion("AC5", 900.0, [](Outcome& o) {
    const auto t = verify::sharpness_sweep({0.5, 0.2, 0.1, 0.05});
    o.check(t.monotone, "mu_2 |Omega| increasing");
    o.check(t.ratio.back() >= 0.95 && t.ratio.back() < 1.0, "final ratio in [0.95, 1)");
    o.check(t.ratio.front() < 1.0, "ratio < 1 at eps/r = 0.5");
    o.detail += "ratios ";
    for (double r : t.ratio) o.note("%.5f", r);
    o.note("(limit %.6f)", t.limit);
  });

  criterion("AC6", 1.0, [](Outcome& o) {
    const auto eq = domain("union:ball3:1@-1.5,0,0|ball3:1@1.5,0,0");
    o.check(std::abs(eq.margin) <= 1e-8 && eq.verdict == verify::Verdict::Holds, "two equal balls: equality");
    o.note("two balls: |margin| = %.1e, product %.10f;", std::abs(eq.margin), eq.intermediate.at("product").get<double>());
    for (const char* d : {"box3:1,1,2", "box3:1,2,3", "ball3:1", "union:ball3:1@-2,0,0|ball3:0.7@1,0,0",
                          "union:ball3:0.5@-2,0,0|ball3:1.2@1,0,0"}) {
      const auto r = domain(d);
      o.check(r.margin > 0.0 && r.verdict == verify::Verdict::Holds, std::string(d) + " strict");
      o.detail += d;
      o.note(": margin %.4g;", r.margin);
    }
  });

  criterion("AC7", 1.0, [](Outcome& o) {
    for (const char* d : {"disk:1", "ball3:1"}) {
      const auto spec = geometry::parse_domain(d);
      const auto r = verify::verify_wang_xia(spec, spec.dim());
      o.check(std::abs(r.margin) <= 1e-8 && r.verdict == verify::Verdict::Holds, std::string(d) + " equality");
      o.detail += d;
      o.note(": |margin| %.1e;", std::abs(r.margin));
    }
    for (const char* d : {"box3:1,1,2", "box3:1,2,3", "rectangle:pi,0.5pi"}) {
      const auto spec = geometry::parse_domain(d);
      const auto r = verify::verify_wang_xia(spec, spec.dim());
      o.check(r.margin > r.uncertainty && r.verdict == verify::Verdict::Holds, std::string(d) + " strict");
      o.detail += d;
      o.note(": margin %.4g;", r.margin);
    }
  });

  criterion("AC8", 60.0, [](Outcome& o) {
    const auto r = domain("union:disk:1@-1.5,0|disk:1@1.5,0");
    const auto& c = r.certificates.at("chain");
    const double gap = std::abs(c.at("intermediate").get<double>() - 1.0 / c.at("mu1_ball").get<double>());
    const double fold = r.certificates.at("folding").at("residual_norm").get<double>();
    const double sign = c.at("sign_term_max").get<double>();
    o.check(gap <= 1e-8, "intermediate = 1/mu_1(B_r) within 1e-8");
    o.check(fold < 1e-6, "folding residuals < 1e-6");
    o.check(sign <= 0.0, "G'^2 - G^2/t^2 <= 0 at every node");
    o.note("quotient gap %.1e, folding residual %.1e, max sign term %.3e", gap, fold, sign);
  });

  criterion("AC9", 120.0, [](Outcome& o) {
    const auto sp = sphere::s2_conformal_spectrum(sphere::ConformalFactor::round(), 20, 3);
    const double sum = 1.0 / sp.eigenvalues[1] + 1.0 / sp.eigenvalues[2] + 1.0 / sp.eigenvalues[3];
    const double rhs = 3.0 * sphere::metric_volume(sphere::ConformalFactor::round()) / (8.0 * kPi);
    o.check(std::abs(sum - 1.5) <= 1e-8 && std::abs(sum - rhs) <= 1e-8, "sum 1/lambda = 3/2 = 3 A/(8 pi)");
    o.note("sum 1/lambda_{1..3} - 3/2 = %.1e, 3A/(8pi) - 3/2 = %.1e;", sum - 1.5, rhs - 1.5);

    const double I2 = 8.0 * kPi / 3.0;
    double worst = 0.0;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> rad(0.0, 0.8);
    for (int s = 0; s < 12; ++s) {
      Eigen::Vector3d xi(g(rng), g(rng), g(rng));
      xi *= (s == 0 ? 0.0 : s == 1 ? 0.8 : rad(rng)) / xi.norm();
      Eigen::Vector3d v(g(rng), g(rng), g(rng));
      const auto en = sphere::conformal_energy(2, xi, std::nullopt, v.normalized(), 96);
      worst = std::max(worst, std::abs(en.value - I2));
    }
    o.check(worst <= 1e-8, "I_2 = 8 pi/3 for |xi| <= 0.8 within 1e-8");
    o.note("max |E(xi) - 8pi/3| = %.1e;", worst);

    for (int n : {2, 3}) {
      const int m = n + 1;
      const auto en = sphere::conformal_energy(n, Eigen::VectorXd::Zero(m), std::nullopt, Eigen::VectorXd::Unit(m, 0),
                                               n == 2 ? 96 : 64);
      const double lhs = std::pow(en.value, 2.0 / n), id = sphere::coordinate_energy_identity(n);
      o.check(std::abs(lhs - id) <= 1e-6 * id, "I_n^{2/n} identity");
      o.note("n = %.0f: |I_n^{2/n} - identity| / identity = %.1e;", n, std::abs(lhs - id) / id);
    }
  });

  criterion("AC10", 600.0, [](Outcome& o) {
    using sphere::Bump;
    using sphere::ConformalFactor;
    const std::vector<ConformalFactor> metrics = {
        ConformalFactor::bump(e(2), 1.0, 0.5),
        ConformalFactor::bump(e(0), -0.8, 0.7),
        ConformalFactor::multi_bump({Bump{e(2), 1.0, 0.4}, Bump{-e(2), 1.0, 0.4}}),
        ConformalFactor::multi_bump({Bump{e(0), 0.7, 0.5}, Bump{e(1), -0.5, 0.6}}),
        ConformalFactor::harmonic({{1, -1, 0.25}, {2, 0, 0.3}, {3, 1, -0.2}}),
    };
    sphere::SphereCheckOptions opt;
    opt.L = 20;
    opt.chains = false;
    int k = 0;
    for (const auto& u : metrics) {
      const auto c = sphere::verify_sphere_theorems(u, opt);
      ++k;
      o.check(c.hersch_margin >= 0.0 && c.hersch_margin > 3.0 * c.hersch_truncation, "first bound, metric " + std::to_string(k));
      o.check(c.fold_margin > 0.0 && c.fold_margin > 3.0 * c.fold_truncation, "folded bound, metric " + std::to_string(k));
      o.note("m%.0f: margins %.4f / %.4f", k, c.hersch_margin, c.fold_margin);
      o.note("(trunc %.1e);", std::max(c.hersch_truncation, c.fold_truncation));
    }
    std::vector<double> rel;
    for (double s : {0.2, 0.4, 0.6, 0.7}) {
      const auto c = sphere::verify_sphere_theorems(ConformalFactor::bubbles({e(2), -e(2)}, s), opt);
      o.check(c.fold_margin > 3.0 * c.fold_truncation, "bubbles margin above 3x truncation");
      rel.push_back(c.fold_margin / c.fold_rhs);
    }
    for (std::size_t i = 1; i < rel.size(); ++i) o.check(rel[i] < rel[i - 1], "relative margin decreasing");
    o.check(rel.back() < 0.1, "relative margin approaching 0");
    o.detail += "double bubble s = 0.2..0.7, relative margins ";
    for (double r : rel) o.note("%.4f", r);
  });

  criterion("AC11", 120.0, [](Outcome& o) {
    for (int n : {2, 3}) {
      for (const auto& r : verify::sphere_property_records(n)) {
        o.check(r.verdict == verify::Verdict::Holds, r.theorem_id + " n = " + std::to_string(n));
        o.detail += r.theorem_id;
        o.note("(n=%.0f, margin %.2e, tol %.1e);", n, r.margin, r.uncertainty);
      }
    }
    o.detail += "full n >= 3 sphere spectra are out of scope (property-based)";
  });

  std::printf("%d criteria failed\n", failures);
  return failures;
}
