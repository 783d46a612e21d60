#pragma once

#include <array>
#include <string>
#include <string_view>

#include "pds/errors.hpp"

namespace pds {

// The five-rung privilege ladder. Ordinal order is the comparison order:
// lower privilege sees wider ranges.
enum class PrivilegeLevel : int {
  Low = 0,
  MediumLow = 1,
  Medium = 2,
  MediumHigh = 3,
  High = 4,
};

inline constexpr std::array<PrivilegeLevel, 5> kAllPrivileges = {
    PrivilegeLevel::Low, PrivilegeLevel::MediumLow, PrivilegeLevel::Medium,
    PrivilegeLevel::MediumHigh, PrivilegeLevel::High};

inline int ordinal(PrivilegeLevel p) { return static_cast<int>(p); }

// Canonical token, used in policy files and seeded-offset hashing.
inline const char* privilege_token(PrivilegeLevel p) {
  switch (p) {
    case PrivilegeLevel::Low: return "low";
    case PrivilegeLevel::MediumLow: return "medium_low";
    case PrivilegeLevel::Medium: return "medium";
    case PrivilegeLevel::MediumHigh: return "medium_high";
    case PrivilegeLevel::High: return "high";
  }
  return "?";
}

// Display name as printed in reports.
inline const char* privilege_name(PrivilegeLevel p) {
  switch (p) {
    case PrivilegeLevel::Low: return "Low";
    case PrivilegeLevel::MediumLow: return "Medium-Low";
    case PrivilegeLevel::Medium: return "Medium";
    case PrivilegeLevel::MediumHigh: return "Medium-High";
    case PrivilegeLevel::High: return "High";
  }
  return "?";
}

// Accepts the canonical token or the display name, case-insensitively, with
// '-' and '_' interchangeable. Any other name fails: there are exactly five
// levels.
inline PrivilegeLevel parse_privilege(std::string_view name) {
  std::string key;
  key.reserve(name.size());
  for (char c : name) {
    if (c == '-') c = '_';
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    key += c;
  }
  for (PrivilegeLevel p : kAllPrivileges)
    if (key == privilege_token(p)) return p;
  throw Error(Errc::parse_error, "unknown privilege level: '" + std::string(name) + "'");
}

}  // namespace pds
