#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pds/config.hpp"
#include "pds/customizer.hpp"
#include "pds/json_codec.hpp"
#include "pds/rule_engine.hpp"
#include "pds/table.hpp"

namespace pds {

// The assembled privacy layer over one data directory:
//
//   <data_dir>/portfolio.json              roles + users
//   <data_dir>/policies.json               salt + measure policies
//   <data_dir>/audit.ndjson                append-only decision history
//   <data_dir>/tables/<id>/manifest.json   column schema
//   <data_dir>/tables/<id>/segments/N.csv  source CSVs; version n replays 1..n
//
// Tables persist as their source CSV segments only; versions are replayed at
// startup, so no desensitized or derived data store ever exists on disk.
class PrivacyLayer {
 public:
  explicit PrivacyLayer(std::filesystem::path data_dir, RuleEngine::Options options = {},
                        bool audit_fsync = false)
      : data_dir_(std::move(data_dir)), rules_(options) {
    std::filesystem::create_directories(data_dir_);
    rules_.bind_storage(data_dir_ / "portfolio.json", data_dir_ / "policies.json");
    rules_.bind_audit_file((data_dir_ / "audit.ndjson").string(), audit_fsync);
    load_tables();
  }

  RuleEngine& rules() { return rules_; }
  const TableStore& tables() const { return tables_; }
  const std::filesystem::path& data_dir() const { return data_dir_; }

  // ── table lifecycle ────────────────────────────────────────────────────────

  TableVersionPtr ingest_table(const std::string& table_id, const std::string& csv_text,
                               SchemaManifest manifest) {
    TableVersionPtr v = tables_.ingest(table_id, csv_text, std::move(manifest));
    auto dir = table_dir(table_id);
    std::filesystem::create_directories(dir / "segments");
    write_text_file_atomic(dir / "manifest.json",
                           manifest_to_json(v->manifest()).dump(2) + "\n");
    write_text_file_atomic(segment_path(table_id, 1), csv_text);
    return v;
  }

  TableVersionPtr append_table(const std::string& table_id, const std::string& csv_text) {
    TableVersionPtr v = tables_.append(table_id, csv_text);
    write_text_file_atomic(segment_path(table_id, v->version()), csv_text);
    return v;
  }

  // ── query paths ────────────────────────────────────────────────────────────

  PersonalizedDataSet run_query(const std::string& user_id, const QueryDescriptor& q) {
    TableVersionPtr table = tables_.latest(q.table_id);
    return personalize(rules_, *table, q, user_id);
  }

  PersonalizedDataSet redistribute_report(const PersonalizedDataSet& pds,
                                          const std::string& viewer_user_id) {
    return redistribute(rules_, tables_, pds, viewer_user_id);
  }

  PersonalizedDataSet refresh_report(const PersonalizedDataSet& pds, const std::string& user_id) {
    TableVersionPtr latest = tables_.latest(pds.descriptor.table_id);
    return refresh(rules_, pds, user_id, *latest);
  }

  UtilityReport utility(const std::string& table_id, const std::string& measure_id) {
    TableVersionPtr table = tables_.latest(table_id);
    return utility_report(*table, measure_id, rules_.policy(measure_id));
  }

  // Applies a policies.json-style document: optional salt_hex, then one
  // upsert per measure. Without a salt anywhere, a random one is drawn once.
  void apply_policy_document(const Identity& caller, const std::string& json_text) {
    json j = parse_json(json_text, "policy document");
    if (j.contains("salt_hex"))
      rules_.set_salt(caller, crypto::from_hex(j.at("salt_hex").get<std::string>()));
    else if (rules_.salt().empty())
      rules_.set_salt(caller, random_salt());
    for (const json& m : j.at("measures"))
      rules_.upsert_policy(caller, measure_policy_from_json(m, rules_.salt()));
  }

  static std::vector<uint8_t> random_salt() {
    std::random_device rd;
    std::vector<uint8_t> salt(16);
    for (auto& b : salt) b = static_cast<uint8_t>(rd());
    return salt;
  }

 private:
  std::filesystem::path table_dir(const std::string& table_id) const {
    return data_dir_ / "tables" / table_id;
  }

  std::filesystem::path segment_path(const std::string& table_id, int64_t version) const {
    char name[32];
    std::snprintf(name, sizeof name, "%06lld.csv", static_cast<long long>(version));
    return table_dir(table_id) / "segments" / name;
  }

  void load_tables() {
    auto root = data_dir_ / "tables";
    if (!std::filesystem::exists(root)) return;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
      if (!entry.is_directory()) continue;
      std::string table_id = entry.path().filename().string();
      SchemaManifest manifest =
          manifest_from_json(parse_json(read_text_file(entry.path() / "manifest.json"),
                                        "manifest for " + table_id));
      std::vector<std::filesystem::path> segments;
      for (const auto& seg : std::filesystem::directory_iterator(entry.path() / "segments"))
        segments.push_back(seg.path());
      std::sort(segments.begin(), segments.end());
      if (segments.empty()) continue;
      tables_.ingest(table_id, read_text_file(segments.front()), manifest);
      for (std::size_t i = 1; i < segments.size(); ++i)
        tables_.append(table_id, read_text_file(segments[i]));
    }
  }

  std::filesystem::path data_dir_;
  RuleEngine rules_;
  TableStore tables_;
};

}  // namespace pds
