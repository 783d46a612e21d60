#pragma once

#include <stdlib.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pds/customizer.hpp"
#include "pds/decimal.hpp"
#include "pds/json_codec.hpp"
#include "pds/policy.hpp"
#include "pds/rule_engine.hpp"
#include "pds/table.hpp"

namespace pdstest {

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "pds-test-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline pds::Decimal dec(const char* s) { return pds::Decimal::parse(s); }

inline pds::RangeSpec fixed_spec(const char* width, const char* offset = "0") {
  pds::RangeSpec s;
  s.width = dec(width);
  s.mode = pds::OffsetMode::Fixed;
  s.fixed_offset = dec(offset);
  return s;
}

inline pds::RangeSpec seeded_spec(const char* width) {
  pds::RangeSpec s;
  s.width = dec(width);
  s.mode = pds::OffsetMode::UserSeeded;
  return s;
}

// The policy from the worked example: widths 30/20/10/5/0 with offsets
// 0/5/0/0/0 on annual income in $,000.
inline pds::MeasurePolicy table1_policy(const std::string& measure_id = "annual_income_k") {
  pds::MeasurePolicy p;
  p.measure_id = measure_id;
  p.unit = "$,000";
  p.granularity = dec("1");
  p.per_privilege[pds::PrivilegeLevel::Low] = fixed_spec("30", "0");
  p.per_privilege[pds::PrivilegeLevel::MediumLow] = fixed_spec("20", "5");
  p.per_privilege[pds::PrivilegeLevel::Medium] = fixed_spec("10", "0");
  p.per_privilege[pds::PrivilegeLevel::MediumHigh] = fixed_spec("5", "0");
  p.per_privilege[pds::PrivilegeLevel::High] = fixed_spec("0", "0");
  p.salt = {0x01, 0x02, 0x03, 0x04};
  return p;
}

inline pds::SchemaManifest customer_manifest() {
  pds::SchemaManifest m;
  m.columns.push_back({"customer", pds::ColumnKind::Identifier, pds::ValueType::String, "", {}});
  m.columns.push_back({"region", pds::ColumnKind::Dimension, pds::ValueType::String, "", {}});
  m.columns.push_back({"annual_income_k", pds::ColumnKind::Measure, pds::ValueType::Decimal,
                       "$,000", dec("1")});
  return m;
}

// Five roles matching the worked example's ladder, one user per role.
inline void seed_table1_portfolio(pds::RuleEngine& re) {
  const pds::Identity admin = pds::Identity::admin();
  struct Row {
    const char* role;
    pds::PrivilegeLevel privilege;
    const char* user;
  };
  const Row rows[] = {
      {"external_user", pds::PrivilegeLevel::Low, "ext1"},
      {"internal_operator", pds::PrivilegeLevel::MediumLow, "op1"},
      {"managerial", pds::PrivilegeLevel::Medium, "mgr1"},
      {"knowledge_worker", pds::PrivilegeLevel::MediumHigh, "kw1"},
      {"cxo", pds::PrivilegeLevel::High, "cxo1"},
  };
  for (const Row& r : rows) {
    pds::RoleDef role;
    role.role_id = r.role;
    role.privilege = r.privilege;
    role.allowed_measures = {"annual_income_k"};
    role.allowed_dimensions = {"region"};
    role.may_see_identifiers = r.privilege == pds::PrivilegeLevel::High;
    re.upsert_role(admin, role);
  }
  re.upsert_policy(admin, table1_policy());
  for (const Row& r : rows) {
    pds::UserProfile u;
    u.user_id = r.user;
    u.display_name = r.user;
    u.role_id = r.role;
    u.api_key_digest = pds::crypto::sha256_hex(std::string("token-") + r.user);
    re.upsert_user(admin, u);
  }
}

inline std::string income_csv(const std::vector<std::string>& incomes,
                              const std::string& region = "EU") {
  std::string csv = "customer,region,annual_income_k\n";
  for (std::size_t i = 0; i < incomes.size(); ++i)
    csv += "c" + std::to_string(i + 1) + "," + region + "," + incomes[i] + "\n";
  return csv;
}

// Brute-force histogram oracle: per-row bucket assignment by direct floor
// arithmetic over doubles-free decimals, independent of histogram_counts.
inline std::map<std::string, int64_t> brute_force_histogram(
    const std::vector<pds::Decimal>& values, const std::vector<std::size_t>& rows,
    const pds::Decimal& width, const pds::Decimal& offset) {
  std::map<std::string, int64_t> out;
  for (std::size_t r : rows) {
    if (width.is_zero()) {
      ++out[values[r].to_string()];
      continue;
    }
    // Repeated-addition search for the containing cell; slow and obvious.
    pds::Decimal lo = offset;
    if (values[r] < lo) {
      while (values[r] < lo) lo = lo - width;
    } else {
      while (values[r] >= lo + width) lo = lo + width;
    }
    ++out[lo.to_string() + "-" + (lo + width).to_string()];
  }
  return out;
}

inline std::map<std::string, int64_t> to_counts(const std::vector<pds::BucketCount>& buckets) {
  std::map<std::string, int64_t> out;
  for (const auto& bc : buckets) {
    std::string key = bc.bucket.exact()
                          ? bc.bucket.lo.to_string()
                          : bc.bucket.lo.to_string() + "-" + bc.bucket.hi.to_string();
    out[key] = bc.count;
  }
  return out;
}

}  // namespace pdstest
