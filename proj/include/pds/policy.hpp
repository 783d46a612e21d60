#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pds/crypto.hpp"
#include "pds/decimal.hpp"
#include "pds/errors.hpp"
#include "pds/privilege.hpp"

namespace pds {

// How the bucket grid of one privilege level is anchored.
// Fixed: every requester at the level shares one grid (offset given).
// UserSeeded: each requester gets a stable per-identity grid offset derived
// from a keyed hash, so nobody can assume ranges are centered on true values.
enum class OffsetMode { Fixed, UserSeeded };

struct RangeSpec {
  Decimal width;        // >= 0; 0 means exact disclosure
  OffsetMode mode = OffsetMode::Fixed;
  Decimal fixed_offset; // meaningful for Fixed; 0 <= offset < width when width > 0
};

// Per-measure range policy: one RangeSpec per privilege level, plus the
// measure's unit label, value granularity and the store salt used to seed
// per-user offsets.
struct MeasurePolicy {
  std::string measure_id;
  std::string unit;
  Decimal granularity;  // value step, e.g. 1 for $,000
  std::map<PrivilegeLevel, RangeSpec> per_privilege;
  std::vector<uint8_t> salt;
};

struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// A range spec resolved for one requester: the width of their privilege level
// and the concrete grid offset.
struct ResolvedSpec {
  std::string measure_id;
  Decimal width;
  Decimal offset;
  PrivilegeLevel privilege = PrivilegeLevel::Low;
  std::string resolved_for;  // user_id
};

// Checks every MeasurePolicy invariant. Violations are data, not failures:
// the result lists each offending level or pair.
//
// exact_floor is the lowest privilege allowed exact disclosure (width 0);
// default High. It may not be configured below MediumHigh.
inline ValidationResult validate_policy(const MeasurePolicy& policy,
                                        PrivilegeLevel exact_floor = PrivilegeLevel::High) {
  ValidationResult r;
  auto add = [&r](std::string v) { r.violations.push_back(std::move(v)); };

  if (ordinal(exact_floor) < ordinal(PrivilegeLevel::MediumHigh))
    add("exact-disclosure floor below Medium-High is not permitted");
  if (policy.measure_id.empty()) add("measure_id is empty");
  if (policy.granularity <= Decimal())
    add("granularity must be positive");

  for (PrivilegeLevel p : kAllPrivileges)
    if (!policy.per_privilege.count(p))
      add(std::string("missing range spec for privilege ") + privilege_name(p));
  if (!r.ok()) return r;

  for (PrivilegeLevel p : kAllPrivileges) {
    const RangeSpec& spec = policy.per_privilege.at(p);
    const std::string name = privilege_name(p);
    if (spec.width.is_negative()) {
      add(name + ": width must be nonnegative");
      continue;
    }
    if (spec.width.is_zero()) {
      if (ordinal(p) < ordinal(exact_floor))
        add(name + ": exact disclosure below floor " +
            privilege_name(exact_floor));
      if (spec.mode == OffsetMode::UserSeeded)
        add(name + ": user-seeded offset is invalid for width 0");
      else if (!spec.fixed_offset.is_zero())
        add(name + ": offset must be 0 when width is 0");
      continue;
    }
    if (!spec.width.is_multiple_of(policy.granularity))
      add(name + ": width " + spec.width.to_string() +
          " is not a multiple of granularity " + policy.granularity.to_string());
    if (spec.mode == OffsetMode::Fixed) {
      if (spec.fixed_offset.is_negative() || spec.fixed_offset >= spec.width)
        add(name + ": offset " + spec.fixed_offset.to_string() +
            " outside [0, " + spec.width.to_string() + ")");
      else if (!spec.fixed_offset.is_multiple_of(policy.granularity))
        add(name + ": offset " + spec.fixed_offset.to_string() +
            " is not a multiple of granularity " + policy.granularity.to_string());
    }
  }

  // Monotonicity: lower privilege never sees a narrower range.
  for (std::size_t i = 0; i + 1 < kAllPrivileges.size(); ++i) {
    PrivilegeLevel lo = kAllPrivileges[i];
    PrivilegeLevel hi = kAllPrivileges[i + 1];
    if (policy.per_privilege.at(lo).width < policy.per_privilege.at(hi).width)
      add(std::string(privilege_name(lo)) + " narrower than " + privilege_name(hi));
  }
  return r;
}

// Deterministic per-identity grid offset in [0, width).
//
// The offset is a keyed hash of (user, role, privilege, measure) quantized to
// the measure granularity. The same requester always lands on the same grid;
// changing role or privilege changes the hash input and therefore the grid.
inline Decimal seeded_offset(const std::string& user_id, const std::string& role_id,
                             PrivilegeLevel privilege, const std::string& measure_id,
                             const std::vector<uint8_t>& salt, const Decimal& width,
                             const Decimal& granularity) {
  if (width <= Decimal())
    throw Error(Errc::invalid_spec, "seeded offset requires width > 0");
  int64_t steps = width.exact_quotient(granularity);

  // Length-prefixed concatenation keeps field boundaries unambiguous.
  std::string msg;
  auto put = [&msg](std::string_view field) {
    uint32_t n = static_cast<uint32_t>(field.size());
    for (int shift = 24; shift >= 0; shift -= 8)
      msg += static_cast<char>((n >> shift) & 0xff);
    msg += field;
  };
  put(user_id);
  put(role_id);
  put(privilege_token(privilege));
  put(measure_id);

  crypto::Digest mac = crypto::hmac_sha256(salt, msg);
  uint64_t h = 0;
  for (int i = 0; i < 8; ++i) h = h << 8 | mac[static_cast<std::size_t>(i)];
  int64_t step = static_cast<int64_t>(h % static_cast<uint64_t>(steps));
  return granularity.times(step);
}

}  // namespace pds
