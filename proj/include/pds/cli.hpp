#pragma once

#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pds/layer.hpp"
#include "pds/service.hpp"

namespace pds::cli {

inline Filter parse_filter_arg(const std::string& text) {
  // COL>=V takes precedence over COL=V; then COL<V.
  if (auto pos = text.find(">="); pos != std::string::npos)
    return {text.substr(0, pos), FilterOp::Ge, text.substr(pos + 2)};
  if (auto pos = text.find('<'); pos != std::string::npos)
    return {text.substr(0, pos), FilterOp::Lt, text.substr(pos + 1)};
  if (auto pos = text.find('='); pos != std::string::npos)
    return {text.substr(0, pos), FilterOp::Eq, text.substr(pos + 1)};
  throw Error(Errc::parse_error, "filter must be COL=V, COL>=V or COL<V: '" + text + "'");
}

inline std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline void print_bucket_rows(std::ostream& out, const std::vector<BucketCount>& buckets,
                              const std::string& unit) {
  std::string range_header = "Range" + (unit.empty() ? "" : " " + unit);
  out << std::left << std::setw(24) << range_header << std::right << std::setw(8) << "Count"
      << "\n";
  for (const auto& bc : buckets)
    out << std::left << std::setw(24) << format_bucket(bc.bucket) << std::right << std::setw(8)
        << bc.count << "\n";
}

inline void print_pds_table(std::ostream& out, const PersonalizedDataSet& pds) {
  if (pds.descriptor.mode == QueryMode::Records) {
    for (std::size_t i = 0; i < pds.record_columns.size(); ++i)
      out << (i ? "," : "") << pds.record_columns[i];
    out << "\n";
    for (const auto& row : pds.records) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << "\n";
    }
    return;
  }
  if (pds.descriptor.group_by) {
    for (const auto& g : pds.groups) {
      out << *pds.descriptor.group_by << " = " << g.key << " (" << g.total << " rows)\n";
      print_bucket_rows(out, g.buckets, pds.unit);
    }
    out << "Total rows: " << pds.total << "\n";
    return;
  }
  print_bucket_rows(out, pds.buckets, pds.unit);
  out << "Total rows: " << pds.total << "\n";
}

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pds — privilege-aware range views over tabular data"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "layer.conf path (key = value lines)");

  auto make_layer = [&]() {
    LayerConfig cfg;
    if (!config_path.empty())
      cfg = LayerConfig::load(config_path);
    else if (std::filesystem::exists("layer.conf"))
      cfg = LayerConfig::load("layer.conf");
    return std::make_pair(cfg, std::make_unique<PrivacyLayer>(cfg.data_dir, RuleEngine::Options{},
                                                              cfg.audit_fsync));
  };

  // ── ingest ─────────────────────────────────────────────────────────────────
  auto* ingest = app.add_subcommand("ingest", "Load a CSV into a new table");
  std::string csv_file, manifest_file, table_id;
  ingest->add_option("--csv", csv_file, "CSV file with header row")->required();
  ingest->add_option("--manifest", manifest_file, "manifest.json")->required();
  ingest->add_option("--table", table_id, "table id")->required();

  // ── query ──────────────────────────────────────────────────────────────────
  auto* query = app.add_subcommand("query", "Run a personalized query");
  std::string user_id, measure_id, group_by;
  std::vector<std::string> filter_args;
  bool records = false, as_json = false, as_table = false;
  query->add_option("--user", user_id, "requesting user id")->required();
  query->add_option("--table", table_id, "table id")->required();
  query->add_option("--measure", measure_id, "measure column")->required();
  query->add_option("--filter", filter_args, "COL=V, COL>=V or COL<V (repeatable)");
  query->add_option("--group-by", group_by, "dimension to group by");
  query->add_flag("--records", records, "masked rows instead of a histogram");
  query->add_flag("--json", as_json, "canonical JSON output");
  query->add_flag("--table-format,--table-out", as_table, "tabular output (default)");

  // ── admin ──────────────────────────────────────────────────────────────────
  auto* admin = app.add_subcommand("admin", "Administer the rule engine");
  admin->require_subcommand(1);

  auto* admin_user = admin->add_subcommand("user", "Manage users");
  admin_user->require_subcommand(1);
  auto* user_add = admin_user->add_subcommand("add", "Add or replace a user");
  std::string u_id, u_name, u_role, u_key, u_key_digest;
  bool u_inactive = false;
  user_add->add_option("--id", u_id)->required();
  user_add->add_option("--name", u_name);
  user_add->add_option("--role", u_role)->required();
  user_add->add_option("--api-key", u_key, "bearer token; stored as SHA-256 digest");
  user_add->add_option("--api-key-digest", u_key_digest, "precomputed hex digest");
  user_add->add_flag("--inactive", u_inactive);

  auto* user_set_role = admin_user->add_subcommand("set-role", "Reassign a user's role");
  std::string sr_id, sr_role;
  user_set_role->add_option("--id", sr_id)->required();
  user_set_role->add_option("--role", sr_role)->required();

  auto* admin_role = admin->add_subcommand("role", "Manage roles");
  admin_role->require_subcommand(1);
  auto* role_add = admin_role->add_subcommand("add", "Add or replace a role");
  std::string r_id, r_privilege, r_measures, r_dimensions;
  bool r_identifiers = false;
  role_add->add_option("--id", r_id)->required();
  role_add->add_option("--privilege", r_privilege, "low|medium_low|medium|medium_high|high")
      ->required();
  role_add->add_option("--measures", r_measures, "comma-separated measure ids");
  role_add->add_option("--dimensions", r_dimensions, "comma-separated dimension columns");
  role_add->add_flag("--see-identifiers", r_identifiers);

  auto* admin_policy = admin->add_subcommand("policy", "Manage measure policies");
  admin_policy->require_subcommand(1);
  auto* policy_set = admin_policy->add_subcommand("set", "Apply a policies.json document");
  std::string policy_file;
  policy_set->add_option("--file", policy_file)->required();

  // ── audit ──────────────────────────────────────────────────────────────────
  auto* audit = app.add_subcommand("audit", "Inspect the audit history");
  audit->require_subcommand(1);
  auto* audit_list = audit->add_subcommand("list", "List audit entries");
  std::string a_user;
  bool a_deny_only = false;
  audit_list->add_option("--user", a_user, "filter by user id");
  audit_list->add_flag("--deny-only", a_deny_only, "denied decisions only");

  // ── serve ──────────────────────────────────────────────────────────────────
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string serve_config;
  serve->add_option("--config", serve_config, "layer.conf path")->required();

  // ── utility ────────────────────────────────────────────────────────────────
  auto* utility = app.add_subcommand("utility", "Chi-square range diagnostics");
  std::string ut_table, ut_measure;
  utility->add_option("--table", ut_table)->required();
  utility->add_option("--measure", ut_measure)->required();

  try {
    std::vector<const char*> argv;
    argv.push_back("pds");
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const Identity admin_id = Identity::admin();
  try {
    if (*ingest) {
      auto [cfg, layer] = make_layer();
      SchemaManifest manifest =
          manifest_from_json(parse_json(read_text_file(manifest_file), manifest_file));
      TableVersionPtr v = layer->ingest_table(table_id, read_text_file(csv_file), manifest);
      out << "table '" << table_id << "' version " << v->version() << ", " << v->row_count()
          << " rows, digest " << v->digest() << "\n";
    } else if (*query) {
      auto [cfg, layer] = make_layer();
      QueryDescriptor q;
      q.table_id = table_id;
      q.measure_id = measure_id;
      for (const auto& f : filter_args) q.filters.push_back(parse_filter_arg(f));
      if (!group_by.empty()) q.group_by = group_by;
      q.mode = records ? QueryMode::Records : QueryMode::Histogram;
      PersonalizedDataSet pds = layer->run_query(user_id, q);
      if (as_json)
        out << pds_to_canonical_json(pds) << "\n";
      else
        print_pds_table(out, pds);
    } else if (*user_add) {
      auto [cfg, layer] = make_layer();
      UserProfile u;
      u.user_id = u_id;
      u.display_name = u_name;
      u.role_id = u_role;
      u.active = !u_inactive;
      if (!u_key.empty())
        u.api_key_digest = crypto::sha256_hex(u_key);
      else
        u.api_key_digest = u_key_digest;
      layer->rules().upsert_user(admin_id, u);
      out << "user '" << u_id << "' -> role '" << u_role << "'\n";
    } else if (*user_set_role) {
      auto [cfg, layer] = make_layer();
      layer->rules().set_role(admin_id, sr_id, sr_role);
      out << "user '" << sr_id << "' -> role '" << sr_role << "'\n";
    } else if (*role_add) {
      auto [cfg, layer] = make_layer();
      RoleDef r;
      r.role_id = r_id;
      r.privilege = parse_privilege(r_privilege);
      for (const auto& m : split_csv_list(r_measures)) r.allowed_measures.insert(m);
      for (const auto& d : split_csv_list(r_dimensions)) r.allowed_dimensions.insert(d);
      r.may_see_identifiers = r_identifiers;
      layer->rules().upsert_role(admin_id, r);
      out << "role '" << r_id << "' (" << privilege_name(r.privilege) << ")\n";
    } else if (*policy_set) {
      auto [cfg, layer] = make_layer();
      layer->apply_policy_document(admin_id, read_text_file(policy_file));
      out << "policies applied from " << policy_file << "\n";
    } else if (*audit_list) {
      auto [cfg, layer] = make_layer();
      AuditFilter filter;
      if (!a_user.empty()) filter.user_id = a_user;
      if (a_deny_only) filter.outcome = AuditOutcome::Deny;
      for (const auto& e : layer->rules().list_audit(admin_id, filter)) {
        out << e.timestamp << "  " << std::left << std::setw(12) << e.user_id << std::setw(14)
            << audit_action_name(e.action) << std::setw(7) << audit_outcome_name(e.outcome);
        for (const auto& m : e.measure_ids) out << " " << m;
        if (!e.detail.empty()) out << "  " << e.detail;
        out << "\n";
      }
    } else if (*serve) {
      LayerConfig cfg = LayerConfig::load(serve_config);
      if (cfg.admin_key_digest.empty())
        throw Error(Errc::validation_failed, "config must set admin_key_digest to serve");
      PrivacyLayer layer(cfg.data_dir, RuleEngine::Options{}, cfg.audit_fsync);
      Service service(layer, cfg.admin_key_digest, cfg.report_capacity);
      auto [host, port] = cfg.listen_host_port();
      out << "listening on " << host << ":" << port << "\n" << std::flush;
      if (!service.listen(host, port))
        throw Error(Errc::io_error, "cannot listen on " + cfg.listen_address);
    } else if (*utility) {
      auto [cfg, layer] = make_layer();
      UtilityReport r = layer->utility(ut_table, ut_measure);
      out << "measure " << r.measure_id << ", reference width " << r.reference_width.to_string()
          << "\n";
      out << std::left << std::setw(14) << "Privilege" << std::right << std::setw(8) << "Width"
          << std::setw(10) << "Buckets" << std::setw(14) << "ChiSquare" << "\n";
      for (const auto& lvl : r.levels) {
        std::ostringstream chi;
        chi << std::setprecision(6) << lvl.chi_square;
        out << std::left << std::setw(14) << privilege_name(lvl.privilege) << std::right
            << std::setw(8) << lvl.width.to_string() << std::setw(10) << lvl.bucket_count
            << std::setw(14) << chi.str() << "\n";
      }
    }
  } catch (const ValidationError& e) {
    err << "error: validation failed\n";
    for (const auto& v : e.violations()) err << "  - " << v << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::access_denied || e.code() == Errc::identifier_forbidden ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace pds::cli
