#include "mla/report.hpp"

#include "json.hpp"

namespace mla {

std::string field_text(const Field& F) {
  if (F.k == 1) return "GF(" + std::to_string(F.p) + ")";
  return "GF(" + std::to_string(F.p) + "^" + std::to_string(F.k) + ")";
}

void VerificationReport::check_eq(std::string name, std::string expected,
                                  std::string actual) {
  CheckResult c;
  c.name = std::move(name);
  c.pass = expected == actual;
  c.expected = std::move(expected);
  c.actual = std::move(actual);
  checks.push_back(std::move(c));
}

void VerificationReport::check_eq(std::string name, std::int64_t expected,
                                  std::int64_t actual) {
  check_eq(std::move(name), std::to_string(expected), std::to_string(actual));
}

void VerificationReport::check_true(std::string name, bool ok, std::string detail) {
  CheckResult c;
  c.name = std::move(name);
  c.expected = "true";
  c.actual = ok ? "true" : (detail.empty() ? "false" : "false (" + detail + ")");
  c.pass = ok;
  checks.push_back(std::move(c));
}

std::uint32_t VerificationReport::failures() const {
  std::uint32_t n = 0;
  for (const auto& c : checks)
    if (!c.pass) ++n;
  return n;
}

std::string VerificationReport::status() const {
  if (incomplete) return "incomplete";
  return failures() == 0 ? "pass" : "fail";
}

void VerificationReport::merge(const std::string& prefix, const VerificationReport& other) {
  for (CheckResult c : other.checks) {
    c.name = prefix + ": " + c.name;
    checks.push_back(std::move(c));
  }
  if (other.incomplete) incomplete = true;
  if (!other.note.empty()) note += (note.empty() ? "" : "; ") + other.note;
}

std::string report_to_json(const VerificationReport& r, bool include_timing) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["status"] = r.status();
  j["field"] = r.field;
  j["seed"] = r.seed;
  j["toolkit_version"] = std::string(toolkit_version);
  if (include_timing) j["elapsed_seconds"] = r.elapsed_seconds;
  if (!r.note.empty()) j["note"] = r.note;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["expected"] = c.expected;
    e["actual"] = c.actual;
    e["pass"] = c.pass;
    j["checks"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

}  // namespace mla
