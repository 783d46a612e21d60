#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pds {

// Error taxonomy shared by the library, the HTTP service and the CLI.
// Service status codes and CLI exit codes are derived from the code alone.
enum class Errc {
  invalid_value,        // non-finite or unrepresentable numeric input
  invalid_spec,         // malformed range spec (e.g. seeded offset on width 0)
  parse_error,          // unparseable decimal / JSON / config text
  header_mismatch,      // CSV header does not match the manifest
  type_error,           // CSV cell failed typed parse
  duplicate_column,     // manifest or header declares a column twice
  unknown_column,
  unknown_table,
  unknown_user,
  inactive_user,
  unknown_role,
  unknown_measure,
  unknown_report,
  access_denied,
  identifier_forbidden,
  not_administrator,
  validation_failed,
  stale_table_version,
  snap_on_exact_spec,
  no_nonzero_width,
  io_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_value: return "invalid_value";
    case Errc::invalid_spec: return "invalid_spec";
    case Errc::parse_error: return "parse_error";
    case Errc::header_mismatch: return "header_mismatch";
    case Errc::type_error: return "type_error";
    case Errc::duplicate_column: return "duplicate_column";
    case Errc::unknown_column: return "unknown_column";
    case Errc::unknown_table: return "unknown_table";
    case Errc::unknown_user: return "unknown_user";
    case Errc::inactive_user: return "inactive_user";
    case Errc::unknown_role: return "unknown_role";
    case Errc::unknown_measure: return "unknown_measure";
    case Errc::unknown_report: return "unknown_report";
    case Errc::access_denied: return "access_denied";
    case Errc::identifier_forbidden: return "identifier_forbidden";
    case Errc::not_administrator: return "not_administrator";
    case Errc::validation_failed: return "validation_failed";
    case Errc::stale_table_version: return "stale_table_version";
    case Errc::snap_on_exact_spec: return "snap_on_exact_spec";
    case Errc::no_nonzero_width: return "no_nonzero_width";
    case Errc::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

// validation_failed carrying the individual violation messages, so callers
// (CLI stderr, HTTP 422 body) can list them.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(Errc::validation_failed, join(violations)),
        violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& vs) {
    std::string out = "validation failed";
    for (const auto& v : vs) {
      out += "; ";
      out += v;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

}  // namespace pds
