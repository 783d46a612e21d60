#pragma once

#include <set>
#include <string>

#include "pds/privilege.hpp"

namespace pds {

// A named role binding a privilege level to the columns it may touch.
struct RoleDef {
  std::string role_id;
  PrivilegeLevel privilege = PrivilegeLevel::Low;
  std::set<std::string> allowed_measures;
  std::set<std::string> allowed_dimensions;
  bool may_see_identifiers = false;
};

struct UserProfile {
  std::string user_id;
  std::string display_name;
  std::string role_id;
  std::string api_key_digest;  // lowercase hex SHA-256 of bearer token; empty = no API access
  bool active = true;
};

// Who is asking. The service derives this from the bearer token; the CLI
// trusts the local operator. Admin is a distinguished credential, not a
// privilege level.
struct Identity {
  bool is_admin = false;
  std::string user_id;

  static Identity admin() { return Identity{true, {}}; }
  static Identity user(std::string id) { return Identity{false, std::move(id)}; }
};

}  // namespace pds
