#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mla/field.hpp"

namespace mla {

inline constexpr std::string_view toolkit_version = "1.0.0";

// "GF(p)" or "GF(p^k)".
std::string field_text(const Field& F);

// One named comparison; pass iff expected == actual.
struct CheckResult {
  std::string name;
  std::string expected;
  std::string actual;
  bool pass = false;
};

// Structured result of one verification scenario.  Status is derived:
// "incomplete" when flagged, else "pass" iff every check passes.
struct VerificationReport {
  std::string scenario;
  std::string field;
  std::uint64_t seed = 0;
  double elapsed_seconds = 0.0;
  bool incomplete = false;
  std::string note;
  std::vector<CheckResult> checks;

  void check_eq(std::string name, std::string expected, std::string actual);
  void check_eq(std::string name, std::int64_t expected, std::int64_t actual);
  void check_true(std::string name, bool ok, std::string detail = "");

  std::uint32_t failures() const;
  bool passed() const { return !incomplete && failures() == 0; }
  std::string status() const;

  // Appends another report's checks under "prefix: " names.
  void merge(const std::string& prefix, const VerificationReport& other);
};

// Stable JSON form (keys sorted); timing is emitted only on request so that
// report bytes are reproducible across runs and thread counts.
std::string report_to_json(const VerificationReport& r, bool include_timing = false);

}  // namespace mla
