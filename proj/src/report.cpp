// Record serialization: JSON with lossless floats and a fixed-column CSV.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "foldlab/errors.hpp"
#include "foldlab/verify.hpp"

namespace foldlab::verify {

namespace {

// JSON has no infinities; nlohmann would write them as null.
nlohmann::json sanitize(const nlohmann::json& j) {
  if (j.is_number_float()) {
    const double x = j.get<double>();
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return j;
  }
  if (j.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : j) out.push_back(sanitize(v));
    return out;
  }
  if (j.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = sanitize(it.value());
    return out;
  }
  return j;
}

double number(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  throw ConfigError("expected a number in the report, got " + j.dump());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json VerificationRecord::to_json(bool timings) const {
  nlohmann::json j = {{"theorem_id", theorem_id},
                      {"input", input},
                      {"dim", dim},
                      {"relation", to_string(relation)},
                      {"lhs", lhs},
                      {"rhs", rhs},
                      {"margin", margin},
                      {"uncertainty", uncertainty},
                      {"verdict", to_string(verdict)},
                      {"intermediate", intermediate},
                      {"certificates", certificates},
                      {"solver", solver},
                      {"notes", notes}};
  if (timings) j["timings"] = {{"wall_time", wall_time}};
  return sanitize(j);
}

VerificationRecord VerificationRecord::from_json(const nlohmann::json& j) {
  try {
    VerificationRecord r;
    r.theorem_id = j.at("theorem_id").get<std::string>();
    r.input = j.at("input").get<std::string>();
    r.dim = j.at("dim").get<int>();
    r.relation = relation_from_string(j.at("relation").get<std::string>());
    r.lhs = number(j.at("lhs"));
    r.rhs = number(j.at("rhs"));
    r.margin = number(j.at("margin"));
    r.uncertainty = number(j.at("uncertainty"));
    r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    r.intermediate = j.value("intermediate", nlohmann::json::object());
    r.certificates = j.value("certificates", nlohmann::json::object());
    r.solver = j.value("solver", nlohmann::json::object());
    r.notes = j.value("notes", std::vector<std::string>{});
    if (j.contains("timings")) r.wall_time = number(j.at("timings").at("wall_time"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed record: ") + e.what());
  }
}

ReportFormat format_for_path(const std::string& path) {
  auto ends = [&](const std::string& suffix) {
    return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends(".json")) return ReportFormat::Json;
  if (ends(".csv")) return ReportFormat::Csv;
  throw ConfigError("report path must end in .json or .csv: " + path);
}

std::string report_string(const std::vector<VerificationRecord>& records, ReportFormat format, bool timings) {
  if (format == ReportFormat::Json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) arr.push_back(r.to_json(timings));
    return nlohmann::json{{"records", arr}}.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "theorem_id,input,dim,relation,lhs,rhs,margin,uncertainty,verdict,wall_time\n";
  for (const auto& r : records) {
    os << csv_field(r.theorem_id) << ',' << csv_field(r.input) << ',' << r.dim << ',' << csv_field(to_string(r.relation))
       << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ',' << format_double(r.margin) << ','
       << format_double(r.uncertainty) << ',' << to_string(r.verdict) << ','
       << (timings ? format_double(r.wall_time) : "") << '\n';
  }
  return os.str();
}

void emit_report(const std::vector<VerificationRecord>& records, const std::string& path, ReportFormat format,
                 bool timings) {
  const auto text = report_string(records, format, timings);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out.flush()) throw Error("write to " + path + " failed");
}

std::vector<VerificationRecord> parse_json_report(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("report is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("records") || !j["records"].is_array()) {
    throw ConfigError("report needs a \"records\" array");
  }
  std::vector<VerificationRecord> out;
  for (const auto& r : j["records"]) out.push_back(VerificationRecord::from_json(r));
  return out;
}

}  // namespace foldlab::verify
