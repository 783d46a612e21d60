#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "pds/audit.hpp"
#include "pds/errors.hpp"
#include "pds/json_codec.hpp"
#include "pds/policy.hpp"
#include "pds/portfolio.hpp"

namespace pds {

// The governance brain: user portfolio, role definitions, measure policies,
// and the audit history. Reads run concurrently; administrative writes are
// serialized and exclude readers while the in-memory store is swapped.
//
// Every resolve attempt appends exactly one audit entry (allow or deny).
class RuleEngine {
 public:
  struct Options {
    // Lowest privilege allowed exact disclosure (width 0). Never below
    // MediumHigh.
    PrivilegeLevel exact_floor = PrivilegeLevel::High;
    // Lowest privilege a role may pair with may_see_identifiers.
    PrivilegeLevel identifier_floor = PrivilegeLevel::High;
  };

  RuleEngine() : RuleEngine(Options{}) {}
  explicit RuleEngine(Options options) : options_(options) {}

  // ── persistence ────────────────────────────────────────────────────────────

  // Binds the engine to portfolio.json / policies.json, loading them when
  // present. Subsequent administrative changes rewrite the files atomically.
  void bind_storage(std::filesystem::path portfolio_path, std::filesystem::path policies_path) {
    std::unique_lock lock(mx_);
    portfolio_path_ = std::move(portfolio_path);
    policies_path_ = std::move(policies_path);
    if (std::filesystem::exists(*portfolio_path_)) {
      PortfolioFile f =
          portfolio_from_json(parse_json(read_text_file(*portfolio_path_), "portfolio"));
      roles_.clear();
      users_.clear();
      for (auto& r : f.roles) roles_[r.role_id] = std::move(r);
      for (auto& u : f.users) {
        if (!roles_.count(u.role_id))
          throw Error(Errc::unknown_role,
                      "user '" + u.user_id + "' references unknown role '" + u.role_id + "'");
        users_[u.user_id] = std::move(u);
      }
    }
    if (std::filesystem::exists(*policies_path_)) {
      PolicyFile f = policy_file_from_json(parse_json(read_text_file(*policies_path_), "policies"));
      salt_ = f.salt;
      policies_.clear();
      for (auto& m : f.measures) {
        ValidationResult v = validate_policy(m, options_.exact_floor);
        if (!v.ok()) throw ValidationError(v.violations);
        policies_[m.measure_id] = std::move(m);
      }
    }
  }

  void bind_audit_file(const std::string& path, bool fsync_on_append = false) {
    audit_.bind_file(path, fsync_on_append);
  }

  // ── resolution ─────────────────────────────────────────────────────────────

  // Resolves (user, measure) to the concrete range spec for the user's
  // current role. Appends one allow/deny audit entry per call.
  ResolvedSpec resolve(const std::string& user_id, const std::string& measure_id,
                       const std::string& query_digest = {}) {
    return resolve_checked(user_id, measure_id, {}, false, query_digest);
  }

  // Full access check for a query: measure allow-list, dimension allow-lists
  // and the identifier rule, in one auditable decision.
  ResolvedSpec resolve_checked(const std::string& user_id, const std::string& measure_id,
                               const std::vector<std::string>& dimensions,
                               bool wants_identifiers, const std::string& query_digest = {}) {
    std::shared_lock lock(mx_);
    auto deny = [&](Errc code, const std::string& what) -> Error {
      audit_.append({{}, user_id, AuditAction::Denied, {measure_id}, query_digest,
                     AuditOutcome::Deny, what});
      return Error(code, what);
    };

    auto uit = users_.find(user_id);
    if (uit == users_.end()) throw deny(Errc::unknown_user, "unknown user: '" + user_id + "'");
    const UserProfile& user = uit->second;
    if (!user.active) throw deny(Errc::inactive_user, "user '" + user_id + "' is inactive");
    auto rit = roles_.find(user.role_id);
    if (rit == roles_.end())
      throw deny(Errc::unknown_role, "role '" + user.role_id + "' is not defined");
    const RoleDef& role = rit->second;
    auto pit = policies_.find(measure_id);
    if (pit == policies_.end())
      throw deny(Errc::unknown_measure, "unknown measure: '" + measure_id + "'");
    const MeasurePolicy& policy = pit->second;
    if (!role.allowed_measures.count(measure_id))
      throw deny(Errc::access_denied,
                 "role '" + role.role_id + "' may not access measure '" + measure_id + "'");
    for (const auto& dim : dimensions)
      if (!role.allowed_dimensions.count(dim))
        throw deny(Errc::access_denied,
                   "role '" + role.role_id + "' may not use dimension '" + dim + "'");
    if (wants_identifiers && !role.may_see_identifiers)
      throw deny(Errc::identifier_forbidden,
                 "role '" + role.role_id + "' may not see identifier columns");

    const RangeSpec& spec = policy.per_privilege.at(role.privilege);
    ResolvedSpec resolved;
    resolved.measure_id = measure_id;
    resolved.width = spec.width;
    resolved.privilege = role.privilege;
    resolved.resolved_for = user_id;
    if (spec.width.is_zero())
      resolved.offset = Decimal();
    else if (spec.mode == OffsetMode::UserSeeded)
      resolved.offset = seeded_offset(user_id, role.role_id, role.privilege, measure_id,
                                      policy.salt, spec.width, policy.granularity);
    else
      resolved.offset = spec.fixed_offset;

    audit_.append({{}, user_id, AuditAction::Query, {measure_id}, query_digest,
                   AuditOutcome::Allow, "resolved width " + resolved.width.to_string()});
    return resolved;
  }

  // Read-only view of a user's role; no audit side effect.
  struct AccessView {
    UserProfile user;
    RoleDef role;
  };

  AccessView access_view(const std::string& user_id) const {
    std::shared_lock lock(mx_);
    auto uit = users_.find(user_id);
    if (uit == users_.end())
      throw Error(Errc::unknown_user, "unknown user: '" + user_id + "'");
    auto rit = roles_.find(uit->second.role_id);
    if (rit == roles_.end())
      throw Error(Errc::unknown_role, "role '" + uit->second.role_id + "' is not defined");
    return {uit->second, rit->second};
  }

  MeasurePolicy policy(const std::string& measure_id) const {
    std::shared_lock lock(mx_);
    auto it = policies_.find(measure_id);
    if (it == policies_.end())
      throw Error(Errc::unknown_measure, "unknown measure: '" + measure_id + "'");
    return it->second;
  }

  std::vector<std::string> measure_ids() const {
    std::shared_lock lock(mx_);
    std::vector<std::string> out;
    for (const auto& [id, _] : policies_) out.push_back(id);
    return out;
  }

  // ── administration ─────────────────────────────────────────────────────────

  void upsert_user(const Identity& caller, const UserProfile& profile) {
    require_admin(caller, "upsert_user " + profile.user_id);
    std::unique_lock lock(mx_);
    if (profile.user_id.empty())
      throw ValidationError({"user_id is empty"});
    if (!roles_.count(profile.role_id))
      throw Error(Errc::unknown_role, "unknown role: '" + profile.role_id + "'");
    if (!profile.api_key_digest.empty() && !crypto::is_hex_digest(profile.api_key_digest))
      throw ValidationError({"api_key_digest must be 64 lowercase hex digits"});
    users_[profile.user_id] = profile;
    persist_portfolio();
    admin_audit("upsert_user " + profile.user_id);
  }

  void set_role(const Identity& caller, const std::string& user_id, const std::string& role_id) {
    require_admin(caller, "set_role " + user_id);
    std::unique_lock lock(mx_);
    auto uit = users_.find(user_id);
    if (uit == users_.end())
      throw Error(Errc::unknown_user, "unknown user: '" + user_id + "'");
    if (!roles_.count(role_id))
      throw Error(Errc::unknown_role, "unknown role: '" + role_id + "'");
    uit->second.role_id = role_id;
    persist_portfolio();
    admin_audit("set_role " + user_id + " -> " + role_id);
  }

  void upsert_role(const Identity& caller, const RoleDef& role) {
    require_admin(caller, "upsert_role " + role.role_id);
    std::unique_lock lock(mx_);
    if (role.role_id.empty())
      throw ValidationError({"role_id is empty"});
    if (role.may_see_identifiers && ordinal(role.privilege) < ordinal(options_.identifier_floor))
      throw ValidationError({"may_see_identifiers requires privilege " +
                             std::string(privilege_name(options_.identifier_floor))});
    roles_[role.role_id] = role;
    persist_portfolio();
    admin_audit("upsert_role " + role.role_id);
  }

  void upsert_policy(const Identity& caller, MeasurePolicy policy) {
    require_admin(caller, "upsert_policy " + policy.measure_id);
    std::unique_lock lock(mx_);
    policy.salt = salt_;
    ValidationResult v = validate_policy(policy, options_.exact_floor);
    if (!v.ok()) throw ValidationError(v.violations);
    std::string id = policy.measure_id;
    policies_[id] = std::move(policy);
    persist_policies();
    admin_audit("upsert_policy " + id);
  }

  // Replacing the salt re-seeds every user-seeded grid.
  void set_salt(const Identity& caller, std::vector<uint8_t> salt) {
    require_admin(caller, "set_salt");
    std::unique_lock lock(mx_);
    salt_ = std::move(salt);
    for (auto& [_, p] : policies_) p.salt = salt_;
    persist_policies();
    admin_audit("set_salt");
  }

  std::vector<uint8_t> salt() const {
    std::shared_lock lock(mx_);
    return salt_;
  }

  std::vector<AuditEntry> list_audit(const Identity& caller, const AuditFilter& filter = {}) const {
    if (!caller.is_admin)
      throw Error(Errc::not_administrator, "audit log requires the administrator credential");
    return audit_.list(filter);
  }

  std::size_t audit_size() const { return audit_.size(); }

  // Token lookup for the service: SHA-256 digest of the bearer token against
  // stored user digests.
  std::optional<std::string> user_for_api_digest(const std::string& digest_hex) const {
    std::shared_lock lock(mx_);
    for (const auto& [id, u] : users_)
      if (!u.api_key_digest.empty() && u.api_key_digest == digest_hex) return id;
    return std::nullopt;
  }

 private:
  void require_admin(const Identity& caller, const std::string& what) {
    if (caller.is_admin) return;
    audit_.append({{}, caller.user_id, AuditAction::Denied, {}, {}, AuditOutcome::Deny,
                   "not administrator: " + what});
    throw Error(Errc::not_administrator, "administrator credential required");
  }

  void admin_audit(const std::string& detail) {
    audit_.append({{}, "admin", AuditAction::AdminChange, {}, {}, AuditOutcome::Allow, detail});
  }

  // Callers hold the unique lock.
  void persist_portfolio() {
    if (!portfolio_path_) return;
    PortfolioFile f;
    for (const auto& [_, r] : roles_) f.roles.push_back(r);
    for (const auto& [_, u] : users_) f.users.push_back(u);
    write_text_file_atomic(*portfolio_path_, portfolio_to_json(f).dump(2) + "\n");
  }

  void persist_policies() {
    if (!policies_path_) return;
    PolicyFile f;
    f.salt = salt_;
    for (const auto& [_, p] : policies_) f.measures.push_back(p);
    write_text_file_atomic(*policies_path_, policy_file_to_json(f).dump(2) + "\n");
  }

  Options options_;
  mutable std::shared_mutex mx_;
  std::map<std::string, RoleDef> roles_;
  std::map<std::string, UserProfile> users_;
  std::map<std::string, MeasurePolicy> policies_;
  std::vector<uint8_t> salt_;
  std::optional<std::filesystem::path> portfolio_path_;
  std::optional<std::filesystem::path> policies_path_;
  mutable AuditLog audit_;
};

}  // namespace pds
