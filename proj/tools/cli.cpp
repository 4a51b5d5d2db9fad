// Command-line front end. Every input is validated before any computation;
// errors map to exit codes (2 solver, 3 configuration).
#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "foldlab/eigensolve.hpp"
#include "foldlab/errors.hpp"
#include "foldlab/geometry.hpp"
#include "foldlab/specfun.hpp"
#include "foldlab/sphere.hpp"
#include "foldlab/verify.hpp"

namespace foldlab::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kCommands = {"spectrum", "verify", "kn", "sweep", "mesh"};
const std::set<std::string> kTheorems = {"domain", "wang-xia", "corollary", "sphere1", "sphere2", "sphere"};

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + v.dump());
  }
}

template <class T>
std::vector<T> one_or_many(const json& v, const std::string& key) {
  if (v.is_array()) return get_as<std::vector<T>>(v, key);
  return {get_as<T>(v, key)};
}

sphere::ConformalFactor load_metric(const json& m) {
  if (m.is_string()) return sphere::ConformalFactor::from_file(m.get<std::string>());
  return sphere::ConformalFactor::from_json(m);
}

bool is_sphere_theorem(const std::string& t) { return t.rfind("sphere", 0) == 0; }

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "command") c.command = get_as<std::string>(v, k);
    else if (k == "out") c.out = get_as<std::string>(v, k);
    else if (k == "jobs") c.jobs = get_as<int>(v, k);
    else if (k == "seed") c.seed = get_as<std::uint64_t>(v, k);
    else if (k == "tol") c.tol = get_as<double>(v, k);
    else if (k == "timings") c.timings = get_as<bool>(v, k);
    else if (k == "domain") c.domain = get_as<std::string>(v, k);
    else if (k == "mesh") c.mesh_file = get_as<std::string>(v, k);
    else if (k == "method") c.method = get_as<std::string>(v, k);
    else if (k == "k") c.k = get_as<int>(v, k);
    else if (k == "h") c.h = get_as<double>(v, k);
    else if (k == "L") c.L = get_as<int>(v, k);
    else if (k == "theorem") c.theorem = get_as<std::string>(v, k);
    else if (k == "spec" || k == "specs") c.specs = one_or_many<std::string>(v, k);
    else if (k == "metric" || k == "metrics") c.metrics = v.is_array() ? v.get<std::vector<json>>() : std::vector<json>{v};
    else if (k == "dim") c.dim = get_as<int>(v, k);
    else if (k == "certificate") c.certificate = get_as<bool>(v, k);
    else if (k == "kn_first") c.kn_first = get_as<int>(v, k);
    else if (k == "kn_last") c.kn_last = get_as<int>(v, k);
    else if (k == "eps") c.eps = one_or_many<double>(v, k);
    else if (k == "r") c.r = get_as<double>(v, k);
    else if (k == "neck") c.neck = get_as<double>(v, k);
    else if (k == "mesh_action") c.mesh_action = get_as<std::string>(v, k);
    else throw ConfigError("unknown config key '" + k + "'");
  }
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (!kCommands.count(command)) fail("unknown command '" + command + "'");
  if (jobs < 1 || jobs > 256) fail("--jobs must lie in [1, 256]");
  if (!(tol > 0.0 && tol <= 1e-2)) fail("--tol must lie in (0, 1e-2]");
  if (h && !(*h > 0.0 && *h < 10.0)) fail("--h must lie in (0, 10)");
  if (k < 1 || k > 1000) fail("--k must lie in [1, 1000]");
  if (L < 2 || L > 40) fail("--L must lie in [2, 40]");
  auto check_domain = [&](const std::string& text) {
    try {
      geometry::validate(geometry::parse_domain(text));
    } catch (const ValidityError& e) {
      fail("invalid domain '" + text + "': " + e.what());
    }
  };
  auto check_out = [&] {
    if (!out.empty()) verify::format_for_path(out);
  };

  if (command == "spectrum") {
    const int sources = !domain.empty() + !mesh_file.empty() + !metrics.empty();
    if (sources != 1) fail("spectrum needs exactly one of --domain, --mesh, --metric");
    if (method != "auto" && method != "analytic" && method != "fem") fail("--method must be auto, analytic or fem");
    if (!domain.empty()) {
      check_domain(domain);
      const auto spec = geometry::parse_domain(domain);
      if (method == "analytic" && !eigensolve::has_analytic_spectrum(spec)) {
        fail("no closed-form spectrum for " + domain);
      }
      if (method == "fem" && spec.dim() != 2) fail("the FEM solver is 2D only");
    }
    if (metrics.size() > 1) fail("spectrum takes one metric");
    for (const auto& m : metrics) load_metric(m);
  } else if (command == "verify") {
    if (!kTheorems.count(theorem)) fail("--theorem must be one of domain, wang-xia, corollary, sphere1, sphere2, sphere");
    check_out();
    if (is_sphere_theorem(theorem)) {
      if (metrics.empty()) fail("--theorem " + theorem + " needs at least one --metric");
      if (!specs.empty()) fail("--spec does not apply to sphere checks");
      for (const auto& m : metrics) load_metric(m);
    } else {
      if (specs.empty()) fail("--theorem " + theorem + " needs at least one --spec");
      if (!metrics.empty()) fail("--metric applies to sphere checks only");
      for (const auto& s : specs) {
        check_domain(s);
        const auto spec = geometry::parse_domain(s);
        if (dim != 0 && dim != spec.dim()) fail("--dim " + std::to_string(dim) + " does not match " + s);
        if (spec.dim() == 3 && !eigensolve::has_analytic_spectrum(spec)) {
          fail("n = 3 checks need a closed-form family (ball3, box3 or unions): " + s);
        }
      }
    }
  } else if (command == "kn") {
    if (kn_first < 2) fail("K_n is defined for n >= 2");
    if (kn_last < kn_first) fail("empty range " + std::to_string(kn_first) + ".." + std::to_string(kn_last));
    if (kn_last > 100000) fail("n above 100000 is not supported");
  } else if (command == "sweep") {
    if (eps.empty()) fail("--eps needs at least one value");
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (!(eps[i] > 0.0 && eps[i] <= 1.0)) fail("--eps values must lie in (0, 1]");
      if (i > 0 && !(eps[i] < eps[i - 1])) fail("--eps values must decrease");
    }
    if (!(r > 0.0) || !(neck > 0.0)) fail("--r and --neck must be positive");
    check_out();
  } else if (command == "mesh") {
    if (mesh_action == "export") {
      if (domain.empty()) fail("mesh export needs --domain");
      check_domain(domain);
      if (geometry::parse_domain(domain).dim() != 2) fail("only 2D domains are meshed");
    } else if (mesh_action == "import") {
      if (mesh_file.empty()) fail("mesh import needs a file");
    } else {
      fail("mesh action must be import or export");
    }
  }
}

namespace {

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {}
  void write(const std::string& text) {
    if (path_.empty()) {
      fallback_ << text;
      return;
    }
    std::ofstream f(path_, std::ios::binary);
    if (!f) throw Error("cannot open " + path_ + " for writing");
    f << text;
    if (!f.flush()) throw Error("write to " + path_ + " failed");
  }

 private:
  std::string path_;
  std::ostream& fallback_;
};

int exit_code(const std::vector<verify::VerificationRecord>& records) {
  int code = kOk;
  for (const auto& r : records) {
    if (r.verdict == verify::Verdict::Violated) return kViolation;
    if (r.verdict == verify::Verdict::Inconclusive) code = kInconclusive;
  }
  return code;
}

void summarize(const std::vector<verify::VerificationRecord>& records, std::ostream& err) {
  for (const auto& r : records) {
    char line[512];
    std::snprintf(line, sizeof line, "%-12s %-10s lhs %.10g %s rhs %.10g  margin %.3g  (+- %.2g)  %s\n",
                  verify::to_string(r.verdict).c_str(), r.theorem_id.c_str(), r.lhs,
                  verify::to_string(r.relation).c_str(), r.rhs, r.margin, r.uncertainty, r.input.c_str());
    err << line;
  }
}

int cmd_spectrum(const RunConfig& c, std::ostream& out) {
  eigensolve::SpectralResult result;
  eigensolve::SolverOptions so;
  so.seed = c.seed;
  if (!c.metrics.empty()) {
    const auto u = load_metric(c.metrics.front());
    result = sphere::s2_conformal_spectrum(u, c.L, c.k - 1);
  } else if (!c.mesh_file.empty()) {
    const auto mesh = geometry::import_mesh(c.mesh_file);
    geometry::check_mesh(mesh);
    result = eigensolve::fem_spectrum(mesh, c.k, c.tol, so);
  } else {
    const auto spec = geometry::parse_domain(c.domain);
    const bool analytic =
        c.method == "analytic" || (c.method == "auto" && !c.h && eigensolve::has_analytic_spectrum(spec));
    if (analytic) {
      result = eigensolve::analytic_spectrum(spec, c.k);
    } else {
      if (spec.dim() != 2) throw ConfigError("no closed-form spectrum for " + c.domain + " and FEM is 2D only");
      result = eigensolve::fem_spectrum(geometry::generate_mesh(spec, c.h.value_or(0.05)), c.k, c.tol, so);
    }
  }
  Output(c.out, out).write(result.to_json().dump(2) + "\n");
  return kOk;
}

int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::vector<verify::Job> jobs;
  if (is_sphere_theorem(c.theorem)) {
    verify::SphereSuiteOptions so;
    so.check.L = c.L;
    so.check.cap.seed = c.seed;
    for (const auto& m : c.metrics) {
      const auto u = load_metric(m);
      jobs.push_back([u, so, theorem = c.theorem] {
        auto recs = verify::verify_sphere_suite({u}, so);
        if (theorem == "sphere") return recs;
        std::vector<verify::VerificationRecord> kept;
        for (auto& r : recs) {
          if (r.theorem_id == theorem || r.dim != 2) kept.push_back(std::move(r));
        }
        return kept;
      });
    }
  } else {
    verify::DomainOptions o;
    o.h = c.h.value_or(0.05);
    o.tol = c.tol;
    o.seed = c.seed;
    o.certificate = c.certificate;
    for (const auto& s : c.specs) {
      const auto spec = geometry::parse_domain(s);
      const int n = c.dim != 0 ? c.dim : spec.dim();
      jobs.push_back([spec, n, o, theorem = c.theorem]() -> std::vector<verify::VerificationRecord> {
        if (theorem == "domain") return {verify::verify_theorem_domain(spec, n, o)};
        if (theorem == "wang-xia") return {verify::verify_wang_xia(spec, n, o)};
        return {verify::verify_corollary(spec, n, o)};
      });
    }
  }
  const auto records = verify::run_jobs(jobs, c.jobs);
  const auto format = c.out.empty() ? verify::ReportFormat::Json : verify::format_for_path(c.out);
  Output(c.out, out).write(verify::report_string(records, format, c.timings));
  summarize(records, err);
  return exit_code(records);
}

int cmd_kn(const RunConfig& c, std::ostream& out) {
  std::ostringstream os;
  char line[96];
  if (c.out.empty()) {
    for (int n = c.kn_first; n <= c.kn_last; ++n) {
      std::snprintf(line, sizeof line, "K_%d = %.12f\n", n, specfun::kn_constant(n));
      os << line;
    }
  } else {
    os << "n,kn\n";
    for (int n = c.kn_first; n <= c.kn_last; ++n) os << n << ',' << verify::format_double(specfun::kn_constant(n)) << '\n';
  }
  Output(c.out, out).write(os.str());
  return kOk;
}

int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
  verify::SweepOptions so;
  so.r = c.r;
  so.neck = c.neck;
  so.h = c.h.value_or(0.025);
  so.domain.tol = c.tol;
  so.domain.seed = c.seed;
  so.domain.certificate = false;
  const auto table = verify::sharpness_sweep(c.eps, so);
  const bool json_out = !c.out.empty() && verify::format_for_path(c.out) == verify::ReportFormat::Json;
  Output(c.out, out).write(json_out ? verify::report_string(table.records, verify::ReportFormat::Json, c.timings)
                                    : table.to_csv());
  summarize(table.records, err);
  char line[160];
  std::snprintf(line, sizeof line, "limit %.10g, final ratio %.6f, %s\n", table.limit, table.ratio.back(),
                table.monotone ? "increasing" : "NOT increasing");
  err << line;
  return exit_code(table.records);
}

int cmd_mesh(const RunConfig& c, std::ostream& out) {
  if (c.mesh_action == "export") {
    const auto mesh = geometry::generate_mesh(geometry::parse_domain(c.domain), c.h.value_or(0.05));
    std::ostringstream os;
    geometry::export_mesh(mesh, os);
    Output(c.out, out).write(os.str());
    return kOk;
  }
  const auto mesh = geometry::import_mesh(c.mesh_file);
  geometry::check_mesh(mesh);
  int components = 0;
  mesh.vertex_components(&components);
  std::ostringstream hex;
  hex << std::hex << mesh.checksum();
  const json j = {{"vertices", mesh.num_vertices()},
                  {"triangles", mesh.num_triangles()},
                  {"boundary_edges", mesh.boundary_edges.size()},
                  {"components", components},
                  {"area", mesh.area()},
                  {"h", mesh.h},
                  {"min_angle_degrees", mesh.min_angle_degrees()},
                  {"checksum", hex.str()}};
  Output(c.out, out).write(j.dump(2) + "\n");
  return kOk;
}

struct Parser {
  CLI::App app{"foldlab: spectral inequalities for Neumann and sphere Laplacians"};
  RunConfig flags;
  std::string config_path;
  double h = 0.0;
  std::vector<std::string> metric_args;
  bool no_certificate = false;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

  template <class T>
  CLI::Option* bind(CLI::App* a, const std::string& name, T RunConfig::*field, const std::string& desc) {
    auto* o = a->add_option(name, flags.*field, desc);
    overrides.emplace_back(o, [this, field](RunConfig& c) { c.*field = flags.*field; });
    return o;
  }

  void common(CLI::App* a) {
    bind(a, "--out", &RunConfig::out, "output file (.json or .csv for reports); default standard output");
    bind(a, "--jobs", &RunConfig::jobs, "worker threads for verification campaigns");
    bind(a, "--seed", &RunConfig::seed, "seed for randomized solver starts");
    bind(a, "--tol", &RunConfig::tol, "eigenpair residual tolerance");
    a->add_option("--config", config_path, "JSON config file; flags override its values");
    auto* t = a->add_flag("--timings", flags.timings, "include wall times in reports");
    overrides.emplace_back(t, [this](RunConfig& c) { c.timings = flags.timings; });
  }

  void mesh_size(CLI::App* a, const std::string& desc) {
    auto* o = a->add_option("--h", h, desc);
    overrides.emplace_back(o, [this](RunConfig& c) { c.h = h; });
  }

  void metric(CLI::App* a) {
    auto* o = a->add_option("--metric", metric_args, "conformal factor JSON file (repeatable)");
    overrides.emplace_back(o, [this](RunConfig& c) {
      c.metrics.clear();
      for (const auto& m : metric_args) c.metrics.emplace_back(m);
    });
  }

  Parser() {
    app.set_help_flag("--help", "print this help and exit");  // -h is taken by the mesh size
    app.require_subcommand(0, 1);
    app.add_option("--config", config_path, "JSON config file naming the command");

    auto* sp = app.add_subcommand("spectrum", "Neumann spectrum of a domain or mesh, or a sphere metric spectrum");
    common(sp);
    bind(sp, "--domain", &RunConfig::domain, "domain string, e.g. disk:1 or rectangle:pi,0.5pi");
    bind(sp, "--mesh", &RunConfig::mesh_file, "mesh file to solve on");
    bind(sp, "--k", &RunConfig::k, "number of eigenvalues, the zero mode included");
    bind(sp, "--method", &RunConfig::method, "auto, analytic or fem");
    bind(sp, "--L", &RunConfig::L, "harmonic degree for sphere metrics");
    mesh_size(sp, "FEM mesh size (forces FEM in auto mode)");
    metric(sp);

    auto* ve = app.add_subcommand("verify", "check an inequality and write a report");
    common(ve);
    bind(ve, "--theorem", &RunConfig::theorem, "domain, wang-xia, corollary, sphere1, sphere2 or sphere");
    bind(ve, "--spec", &RunConfig::specs, "domain string (repeatable)");
    bind(ve, "--L", &RunConfig::L, "harmonic degree for sphere metrics");
    bind(ve, "--dim", &RunConfig::dim, "dimension (default: from the domain)");
    mesh_size(ve, "FEM mesh size");
    metric(ve);
    auto* nc = ve->add_flag("--no-certificate", no_certificate, "skip the 2D test-function chain");
    overrides.emplace_back(nc, [this](RunConfig& c) { c.certificate = !no_certificate; });

    auto* kn = app.add_subcommand("kn", "table of the constant K_n");
    common(kn);
    bind(kn, "first", &RunConfig::kn_first, "first n");
    bind(kn, "last", &RunConfig::kn_last, "last n");

    auto* sw = app.add_subcommand("sweep", "dumbbell sweep toward two disjoint disks");
    common(sw);
    bind(sw, "--eps", &RunConfig::eps, "decreasing strip half-widths over r")->delimiter(',');
    bind(sw, "--r", &RunConfig::r, "lobe radius");
    bind(sw, "--neck", &RunConfig::neck, "strip length between the lobes");
    mesh_size(sw, "FEM mesh size (default 0.025)");

    auto* me = app.add_subcommand("mesh", "export a generated mesh or check an imported one");
    common(me);
    bind(me, "action", &RunConfig::mesh_action, "import or export")->required();
    bind(me, "file", &RunConfig::mesh_file, "mesh file to import");
    bind(me, "--domain", &RunConfig::domain, "domain to mesh");
    mesh_size(me, "target element size (default 0.05)");
  }

  RunConfig config() const {
    RunConfig c = config_path.empty() ? RunConfig{} : RunConfig::from_file(config_path);
    const auto subs = app.get_subcommands();
    if (!subs.empty()) c.command = subs.front()->get_name();
    for (const auto& [opt, apply] : overrides) {
      if (opt->count() > 0) apply(c);
    }
    if (c.command.empty()) throw ConfigError("no command given (spectrum, verify, kn, sweep, mesh)");
    return c;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Parser p;
  try {
    p.app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << p.app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << p.app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    const RunConfig c = p.config();
    c.validate();
    if (c.command == "spectrum") return cmd_spectrum(c, out);
    if (c.command == "verify") return cmd_verify(c, out, err);
    if (c.command == "kn") return cmd_kn(c, out);
    if (c.command == "sweep") return cmd_sweep(c, out, err);
    return cmd_mesh(c, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ValidityError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const PreconditionError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kConfigError;
  } catch (const RangeError& e) {
    err << "out of range: " << e.what() << "\n";
    return kConfigError;
  } catch (const MeshRefinementError& e) {
    err << "mesh error: " << e.what() << "\n";
    return kSolverError;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return kSolverError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kSolverError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv = {"foldlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace foldlab::cli
