#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pds/crypto.hpp"
#include "pds/errors.hpp"
#include "pds/policy.hpp"
#include "pds/portfolio.hpp"
#include "pds/schema.hpp"

namespace pds {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw Error(Errc::parse_error, "malformed JSON in " + what);
  return j;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Errc::io_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-temp-then-rename so readers never observe a partial file.
inline void write_text_file_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(Errc::io_error, "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out)
      throw Error(Errc::io_error, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ── policies.json ────────────────────────────────────────────────────────────

inline ordered_json range_spec_to_json(const RangeSpec& s) {
  ordered_json j;
  j["width"] = s.width.to_string();
  if (s.mode == OffsetMode::UserSeeded)
    j["offset_mode"] = "user_seeded";
  else
    j["offset_mode"] = ordered_json{{"fixed", s.fixed_offset.to_string()}};
  return j;
}

inline RangeSpec range_spec_from_json(const json& j) {
  RangeSpec s;
  s.width = Decimal::parse(j.at("width").get<std::string>());
  const json& mode = j.at("offset_mode");
  if (mode.is_string() && mode.get<std::string>() == "user_seeded") {
    s.mode = OffsetMode::UserSeeded;
  } else if (mode.is_object() && mode.contains("fixed")) {
    s.mode = OffsetMode::Fixed;
    s.fixed_offset = Decimal::parse(mode.at("fixed").get<std::string>());
  } else {
    throw Error(Errc::parse_error, "offset_mode must be {\"fixed\": \"N\"} or \"user_seeded\"");
  }
  return s;
}

inline ordered_json measure_policy_to_json(const MeasurePolicy& p) {
  ordered_json j;
  j["measure_id"] = p.measure_id;
  j["unit"] = p.unit;
  j["granularity"] = p.granularity.to_string();
  ordered_json per;
  for (PrivilegeLevel lvl : kAllPrivileges)
    per[privilege_token(lvl)] = range_spec_to_json(p.per_privilege.at(lvl));
  j["per_privilege"] = per;
  return j;
}

// Salt is file-level; the caller threads it into each measure policy.
inline MeasurePolicy measure_policy_from_json(const json& j, std::vector<uint8_t> salt) {
  MeasurePolicy p;
  p.measure_id = j.at("measure_id").get<std::string>();
  p.unit = j.at("unit").get<std::string>();
  p.granularity = Decimal::parse(j.at("granularity").get<std::string>());
  p.salt = std::move(salt);
  const json& per = j.at("per_privilege");
  for (PrivilegeLevel lvl : kAllPrivileges) {
    if (!per.contains(privilege_token(lvl)))
      throw Error(Errc::parse_error, std::string("policy for '") + p.measure_id +
                                         "' missing privilege '" + privilege_token(lvl) + "'");
    p.per_privilege[lvl] = range_spec_from_json(per.at(privilege_token(lvl)));
  }
  return p;
}

struct PolicyFile {
  std::vector<uint8_t> salt;
  std::vector<MeasurePolicy> measures;
};

inline PolicyFile policy_file_from_json(const json& j) {
  PolicyFile f;
  f.salt = crypto::from_hex(j.at("salt_hex").get<std::string>());
  for (const json& m : j.at("measures"))
    f.measures.push_back(measure_policy_from_json(m, f.salt));
  return f;
}

inline ordered_json policy_file_to_json(const PolicyFile& f) {
  ordered_json j;
  j["salt_hex"] = crypto::to_hex(f.salt.data(), f.salt.size());
  ordered_json ms = ordered_json::array();
  for (const auto& m : f.measures) ms.push_back(measure_policy_to_json(m));
  j["measures"] = ms;
  return j;
}

// ── portfolio.json ───────────────────────────────────────────────────────────

inline ordered_json role_to_json(const RoleDef& r) {
  return {{"role_id", r.role_id},
          {"privilege", privilege_token(r.privilege)},
          {"allowed_measures", r.allowed_measures},
          {"allowed_dimensions", r.allowed_dimensions},
          {"may_see_identifiers", r.may_see_identifiers}};
}

inline RoleDef role_from_json(const json& j) {
  RoleDef r;
  r.role_id = j.at("role_id").get<std::string>();
  r.privilege = parse_privilege(j.at("privilege").get<std::string>());
  for (const json& m : j.at("allowed_measures")) r.allowed_measures.insert(m.get<std::string>());
  for (const json& d : j.at("allowed_dimensions")) r.allowed_dimensions.insert(d.get<std::string>());
  r.may_see_identifiers = j.value("may_see_identifiers", false);
  return r;
}

inline ordered_json user_to_json(const UserProfile& u) {
  return {{"user_id", u.user_id},
          {"display_name", u.display_name},
          {"role_id", u.role_id},
          {"api_key_digest", u.api_key_digest},
          {"active", u.active}};
}

inline UserProfile user_from_json(const json& j) {
  UserProfile u;
  u.user_id = j.at("user_id").get<std::string>();
  u.display_name = j.value("display_name", "");
  u.role_id = j.at("role_id").get<std::string>();
  u.api_key_digest = j.value("api_key_digest", "");
  u.active = j.value("active", true);
  return u;
}

struct PortfolioFile {
  std::vector<RoleDef> roles;
  std::vector<UserProfile> users;
};

inline PortfolioFile portfolio_from_json(const json& j) {
  PortfolioFile f;
  for (const json& r : j.at("roles")) f.roles.push_back(role_from_json(r));
  for (const json& u : j.at("users")) f.users.push_back(user_from_json(u));
  return f;
}

inline ordered_json portfolio_to_json(const PortfolioFile& f) {
  ordered_json roles = ordered_json::array();
  for (const auto& r : f.roles) roles.push_back(role_to_json(r));
  ordered_json users = ordered_json::array();
  for (const auto& u : f.users) users.push_back(user_to_json(u));
  return {{"roles", roles}, {"users", users}};
}

// ── manifest.json ────────────────────────────────────────────────────────────

inline SchemaManifest manifest_from_json(const json& j) {
  SchemaManifest m;
  for (const json& c : j.at("columns")) {
    ColumnDef def;
    def.name = c.at("name").get<std::string>();
    def.kind = parse_column_kind(c.at("kind").get<std::string>());
    def.value_type = parse_value_type(c.at("value_type").get<std::string>());
    def.unit = c.value("unit", "");
    if (c.contains("granularity"))
      def.granularity = Decimal::parse(c.at("granularity").get<std::string>());
    m.columns.push_back(std::move(def));
  }
  m.validate();
  return m;
}

inline ordered_json manifest_to_json(const SchemaManifest& m) {
  ordered_json cols = ordered_json::array();
  for (const auto& c : m.columns) {
    ordered_json jc;
    jc["name"] = c.name;
    jc["kind"] = column_kind_name(c.kind);
    jc["value_type"] = value_type_name(c.value_type);
    if (c.kind == ColumnKind::Measure) {
      jc["unit"] = c.unit;
      jc["granularity"] = c.granularity.to_string();
    }
    cols.push_back(jc);
  }
  return {{"columns", cols}};
}

}  // namespace pds
