#pragma once

#include <cstdint>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace foldlab::cli {

enum ExitCode { kOk = 0, kInconclusive = 1, kSolverError = 2, kConfigError = 3, kViolation = 4 };

/// Every parameter a subcommand can take. A JSON config file fills it
/// first, then command-line flags override individual fields.
struct RunConfig {
  std::string command;  // spectrum, verify, kn, sweep, mesh

  std::string out;  // empty: standard output
  int jobs = 1;
  std::uint64_t seed = 20240611;
  double tol = 1e-9;
  bool timings = false;

  // spectrum
  std::string domain;
  std::string mesh_file;
  std::string method = "auto";  // auto, analytic, fem
  int k = 5;
  std::optional<double> h;  // FEM mesh size; verify and spectrum default to 0.05
  int L = 20;

  // verify
  std::string theorem;  // domain, wang-xia, corollary, sphere1, sphere2, sphere
  std::vector<std::string> specs;
  std::vector<nlohmann::json> metrics;  // inline objects or file names
  int dim = 0;                          // 0: taken from the domain
  bool certificate = true;

  // kn
  int kn_first = 2, kn_last = 10;

  // sweep
  std::vector<double> eps = {0.5, 0.2, 0.1, 0.05};
  double r = 1.0;
  double neck = 0.5;

  // mesh
  std::string mesh_action;  // import or export

  /// Keys match the field names; "spec" and "metric" also accept a single
  /// value. Throws ConfigError on unknown keys or wrong types.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);
  /// Checks every field the command uses. Throws ConfigError.
  void validate() const;
};

/// Parses argv, runs the command, writes results to `out` (or the --out
/// file) and diagnostics to `err`. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace foldlab::cli
