#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pds/errors.hpp"

namespace pds {

inline std::string now_iso8601() {
  using namespace std::chrono;
  std::time_t t = system_clock::to_time_t(system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

enum class AuditAction { Query, AdminChange, Denied };
enum class AuditOutcome { Allow, Deny };

inline const char* audit_action_name(AuditAction a) {
  switch (a) {
    case AuditAction::Query: return "query";
    case AuditAction::AdminChange: return "admin_change";
    case AuditAction::Denied: return "denied";
  }
  return "?";
}

inline AuditAction parse_audit_action(const std::string& s) {
  if (s == "query") return AuditAction::Query;
  if (s == "admin_change") return AuditAction::AdminChange;
  if (s == "denied") return AuditAction::Denied;
  throw Error(Errc::parse_error, "unknown audit action: '" + s + "'");
}

inline const char* audit_outcome_name(AuditOutcome o) {
  return o == AuditOutcome::Allow ? "allow" : "deny";
}

inline AuditOutcome parse_audit_outcome(const std::string& s) {
  if (s == "allow") return AuditOutcome::Allow;
  if (s == "deny") return AuditOutcome::Deny;
  throw Error(Errc::parse_error, "unknown audit outcome: '" + s + "'");
}

// One access decision. Entries are immutable once appended.
struct AuditEntry {
  std::string timestamp;  // UTC ISO-8601
  std::string user_id;
  AuditAction action = AuditAction::Query;
  std::vector<std::string> measure_ids;
  std::string query_digest;  // hex
  AuditOutcome outcome = AuditOutcome::Allow;
  std::string detail;

  nlohmann::ordered_json to_json() const {
    return {{"timestamp", timestamp},
            {"user_id", user_id},
            {"action", audit_action_name(action)},
            {"measure_ids", measure_ids},
            {"query_digest", query_digest},
            {"outcome", audit_outcome_name(outcome)},
            {"detail", detail}};
  }

  static AuditEntry from_json(const nlohmann::json& j) {
    AuditEntry e;
    e.timestamp = j.at("timestamp").get<std::string>();
    e.user_id = j.at("user_id").get<std::string>();
    e.action = parse_audit_action(j.at("action").get<std::string>());
    e.measure_ids = j.at("measure_ids").get<std::vector<std::string>>();
    e.query_digest = j.at("query_digest").get<std::string>();
    e.outcome = parse_audit_outcome(j.at("outcome").get<std::string>());
    e.detail = j.at("detail").get<std::string>();
    return e;
  }
};

struct AuditFilter {
  std::optional<std::string> user_id;
  std::optional<std::string> since;  // inclusive ISO-8601 lower bound
  std::optional<AuditOutcome> outcome;

  bool matches(const AuditEntry& e) const {
    if (user_id && e.user_id != *user_id) return false;
    if (since && e.timestamp < *since) return false;
    if (outcome && e.outcome != *outcome) return false;
    return true;
  }
};

// Append-only NDJSON log. In-memory always; file-backed once bound to a path.
// Appends are single write() calls of whole lines, ordered under the lock.
class AuditLog {
 public:
  AuditLog() = default;
  ~AuditLog() {
    if (fd_ >= 0) ::close(fd_);
  }
  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;

  // Loads any existing entries, then appends future ones to the file.
  void bind_file(const std::string& path, bool fsync_on_append = false) {
    std::lock_guard lock(mx_);
    std::ifstream in(path);
    if (in) {
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
          entries_.push_back(AuditEntry::from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
          throw Error(Errc::parse_error,
                      path + ":" + std::to_string(lineno) + ": bad audit line: " + e.what());
        }
      }
    }
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0)
      throw Error(Errc::io_error, "cannot open audit log: " + path);
    fsync_ = fsync_on_append;
  }

  void append(AuditEntry entry) {
    if (entry.timestamp.empty()) entry.timestamp = now_iso8601();
    std::lock_guard lock(mx_);
    if (fd_ >= 0) {
      std::string line = entry.to_json().dump();
      line += '\n';
      if (::write(fd_, line.data(), line.size()) != static_cast<ssize_t>(line.size()))
        throw Error(Errc::io_error, "audit append failed");
      if (fsync_) ::fsync(fd_);
    }
    entries_.push_back(std::move(entry));
  }

  std::vector<AuditEntry> list(const AuditFilter& filter = {}) const {
    std::lock_guard lock(mx_);
    std::vector<AuditEntry> out;
    for (const auto& e : entries_)
      if (filter.matches(e)) out.push_back(e);
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mx_);
    return entries_.size();
  }

 private:
  mutable std::mutex mx_;
  std::vector<AuditEntry> entries_;
  int fd_ = -1;
  bool fsync_ = false;
};

}  // namespace pds
