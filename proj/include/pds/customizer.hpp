#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "pds/bucket.hpp"
#include "pds/crypto.hpp"
#include "pds/errors.hpp"
#include "pds/filter.hpp"
#include "pds/rule_engine.hpp"
#include "pds/table.hpp"

namespace pds {

enum class QueryMode { Histogram, Records };

inline const char* query_mode_name(QueryMode m) {
  return m == QueryMode::Histogram ? "histogram" : "records";
}

inline QueryMode parse_query_mode(const std::string& s) {
  if (s == "histogram") return QueryMode::Histogram;
  if (s == "records") return QueryMode::Records;
  throw Error(Errc::parse_error, "unknown query mode: '" + s + "'");
}

// A re-executable description of a request. Reports carry the descriptor,
// never materialized data, so redistribution and refresh recompute from the
// raw table. Filter operands stay as originally given; snapping to a
// requester's grid happens at execution time.
struct QueryDescriptor {
  std::string table_id;
  std::string measure_id;
  std::vector<Filter> filters;
  std::optional<std::string> group_by;
  QueryMode mode = QueryMode::Histogram;
  std::vector<std::string> requested_columns;  // records mode; empty = defaults
};

inline nlohmann::ordered_json descriptor_to_json(const QueryDescriptor& q) {
  nlohmann::ordered_json j;
  j["table_id"] = q.table_id;
  j["measure_id"] = q.measure_id;
  auto filters = nlohmann::ordered_json::array();
  for (const auto& f : q.filters)
    filters.push_back({{"column", f.column}, {"op", filter_op_name(f.op)}, {"value", f.operand}});
  j["filters"] = filters;
  if (q.group_by) j["group_by"] = *q.group_by;
  j["mode"] = query_mode_name(q.mode);
  if (!q.requested_columns.empty()) j["requested_columns"] = q.requested_columns;
  return j;
}

inline QueryDescriptor descriptor_from_json(const nlohmann::json& j) {
  QueryDescriptor q;
  q.table_id = j.at("table_id").get<std::string>();
  q.measure_id = j.at("measure_id").get<std::string>();
  if (j.contains("filters")) {
    for (const auto& f : j.at("filters")) {
      Filter flt;
      flt.column = f.at("column").get<std::string>();
      flt.op = parse_filter_op(f.at("op").get<std::string>());
      flt.operand = f.at("value").get<std::string>();
      q.filters.push_back(std::move(flt));
    }
  }
  if (j.contains("group_by") && !j.at("group_by").is_null())
    q.group_by = j.at("group_by").get<std::string>();
  if (j.contains("mode")) q.mode = parse_query_mode(j.at("mode").get<std::string>());
  if (j.contains("requested_columns"))
    q.requested_columns = j.at("requested_columns").get<std::vector<std::string>>();
  return q;
}

inline std::string descriptor_digest(const QueryDescriptor& q) {
  return crypto::sha256_hex(descriptor_to_json(q).dump());
}

struct BucketCount {
  Bucket bucket;
  int64_t count = 0;
};

struct GroupHistogram {
  std::string key;
  std::vector<BucketCount> buckets;
  int64_t total = 0;
};

// The view delivered to one requester: bucket histogram (optionally grouped)
// or range-masked records, plus the recipe that produced it.
struct PersonalizedDataSet {
  QueryDescriptor descriptor;
  int64_t table_version = 0;
  ResolvedSpec resolved;
  std::string unit;
  std::vector<BucketCount> buckets;                 // histogram, ungrouped
  std::vector<GroupHistogram> groups;               // histogram with group_by
  std::vector<std::string> record_columns;          // records mode
  std::vector<std::vector<std::string>> records;    // records mode
  int64_t total = 0;
  std::string generated_at;
};

// Replaces a measure-filter operand by the lo of the bucket containing it, so
// predicates select whole buckets and cannot probe inside one. Idempotent.
inline Filter snap_filter(const Filter& f, const ResolvedSpec& spec) {
  if (spec.width.is_zero())
    throw Error(Errc::snap_on_exact_spec, "no snapping on exact-disclosure specs");
  if (f.op == FilterOp::Eq)
    throw Error(Errc::invalid_spec, "snap_filter applies to ge/lt filters");
  Filter out = f;
  out.operand = bucket_for(f.decimal_operand(), spec).lo.to_string();
  return out;
}

// Fixed-width histogram kernel. Buckets keyed by grid index, so a million
// values cost one floor division and one hash insert each.
inline std::vector<BucketCount> histogram_counts(const std::vector<Decimal>& values,
                                                 const std::vector<std::size_t>& rows,
                                                 const ResolvedSpec& spec) {
  std::vector<BucketCount> out;
  if (spec.width.is_zero()) {
    std::unordered_map<Decimal, int64_t, DecimalHash> counts;
    for (std::size_t r : rows) ++counts[values[r]];
    out.reserve(counts.size());
    for (const auto& [v, n] : counts) out.push_back({Bucket{v, v}, n});
  } else {
    std::unordered_map<int64_t, int64_t> counts;
    counts.reserve(rows.size() / 4 + 8);
    for (std::size_t r : rows) ++counts[(values[r] - spec.offset).floor_div(spec.width)];
    out.reserve(counts.size());
    for (const auto& [k, n] : counts) {
      Decimal lo = spec.offset + spec.width.times(k);
      out.push_back({Bucket{lo, lo + spec.width}, n});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const BucketCount& a, const BucketCount& b) { return a.bucket.lo < b.bucket.lo; });
  return out;
}

namespace detail {

// Renders any cell as a string; decimal dimensions use canonical rendering.
inline std::string cell_text(const TableVersion& table, const ColumnDef& def, std::size_t row) {
  if (def.value_type == ValueType::Decimal)
    return table.decimal_column(def.name)[row].to_string();
  return table.string_column(def.name)[row];
}

struct DescriptorPlan {
  std::vector<std::string> dimensions;  // dimension columns the query touches
  bool wants_identifiers = false;
};

// Structural validation against the manifest: unknown columns and mode
// violations fail here, before any access decision is made or audited.
inline DescriptorPlan validate_descriptor(const QueryDescriptor& q, const SchemaManifest& m) {
  DescriptorPlan plan;
  const ColumnDef& measure = m.require(q.measure_id);
  if (measure.kind != ColumnKind::Measure)
    throw ValidationError({"column '" + q.measure_id + "' is not a measure"});

  for (const auto& f : q.filters) {
    const ColumnDef& col = m.require(f.column);
    switch (col.kind) {
      case ColumnKind::Dimension:
        if (f.op != FilterOp::Eq)
          throw ValidationError({"dimension filter on '" + f.column + "' must use eq"});
        plan.dimensions.push_back(f.column);
        break;
      case ColumnKind::Measure:
        if (f.op == FilterOp::Eq)
          throw ValidationError({"eq filters apply to dimensions, not measure '" + f.column + "'"});
        if (f.column != q.measure_id)
          throw ValidationError({"range filters apply to the query measure only"});
        f.decimal_operand();  // parse failure surfaces here
        break;
      case ColumnKind::Identifier:
        throw ValidationError({"identifier column '" + f.column + "' cannot be filtered"});
    }
  }

  if (q.group_by) {
    if (q.mode != QueryMode::Histogram)
      throw ValidationError({"group_by applies to histogram mode"});
    const ColumnDef& col = m.require(*q.group_by);
    if (col.kind != ColumnKind::Dimension)
      throw ValidationError({"group_by column '" + *q.group_by + "' is not a dimension"});
    plan.dimensions.push_back(*q.group_by);
  }

  if (!q.requested_columns.empty() && q.mode != QueryMode::Records)
    throw ValidationError({"requested_columns applies to records mode"});
  for (const auto& name : q.requested_columns) {
    const ColumnDef& col = m.require(name);
    switch (col.kind) {
      case ColumnKind::Measure:
        if (name != q.measure_id)
          throw ValidationError({"records may include the query measure only, not '" + name + "'"});
        break;
      case ColumnKind::Dimension:
        plan.dimensions.push_back(name);
        break;
      case ColumnKind::Identifier:
        plan.wants_identifiers = true;
        break;
    }
  }
  return plan;
}

inline std::vector<Filter> snapped_filters(const QueryDescriptor& q, const SchemaManifest& m,
                                           const ResolvedSpec& spec) {
  std::vector<Filter> out;
  out.reserve(q.filters.size());
  for (const auto& f : q.filters) {
    const ColumnDef& col = m.require(f.column);
    if (col.kind == ColumnKind::Measure && !spec.width.is_zero())
      out.push_back(snap_filter(f, spec));
    else
      out.push_back(f);
  }
  return out;
}

}  // namespace detail

// Turns one raw query into a personalized data set at the requester's
// resolved spec. The raw table is read, bucketized and left untouched.
inline PersonalizedDataSet personalize(RuleEngine& rules, const TableVersion& table,
                                       const QueryDescriptor& q, const std::string& user_id) {
  const SchemaManifest& manifest = table.manifest();
  detail::DescriptorPlan plan = detail::validate_descriptor(q, manifest);

  ResolvedSpec resolved = rules.resolve_checked(user_id, q.measure_id, plan.dimensions,
                                                plan.wants_identifiers, descriptor_digest(q));

  PersonalizedDataSet pds;
  pds.descriptor = q;
  pds.table_version = table.version();
  pds.resolved = resolved;
  pds.unit = manifest.require(q.measure_id).unit;
  pds.generated_at = now_iso8601();

  std::vector<std::size_t> rows = table.scan(detail::snapped_filters(q, manifest, resolved));
  pds.total = static_cast<int64_t>(rows.size());
  const std::vector<Decimal>& values = table.decimal_column(q.measure_id);

  if (q.mode == QueryMode::Histogram) {
    if (!q.group_by) {
      pds.buckets = histogram_counts(values, rows, resolved);
    } else {
      const ColumnDef& gcol = manifest.require(*q.group_by);
      std::map<std::string, std::vector<std::size_t>> by_group;
      for (std::size_t r : rows) by_group[detail::cell_text(table, gcol, r)].push_back(r);
      for (auto& [key, group_rows] : by_group) {
        GroupHistogram g;
        g.key = key;
        g.total = static_cast<int64_t>(group_rows.size());
        g.buckets = histogram_counts(values, group_rows, resolved);
        pds.groups.push_back(std::move(g));
      }
    }
    return pds;
  }

  // Records mode: masked rows. Default column set is the measure plus every
  // dimension the caller's role allows, in manifest order.
  std::vector<std::string> columns = q.requested_columns;
  if (columns.empty()) {
    const RoleDef role = rules.access_view(user_id).role;
    for (const auto& c : manifest.columns) {
      if (c.name == q.measure_id)
        columns.push_back(c.name);
      else if (c.kind == ColumnKind::Dimension && role.allowed_dimensions.count(c.name))
        columns.push_back(c.name);
    }
  }
  pds.record_columns = columns;
  pds.records.reserve(rows.size());
  for (std::size_t r : rows) {
    std::vector<std::string> cells;
    cells.reserve(columns.size());
    for (const auto& name : columns) {
      const ColumnDef& col = manifest.require(name);
      if (col.kind == ColumnKind::Measure)
        cells.push_back(format_bucket(bucket_for(values[r], resolved)));
      else
        cells.push_back(detail::cell_text(table, col, r));
    }
    pds.records.push_back(std::move(cells));
  }
  return pds;
}

// Re-renders a submitted report for a different viewer at the viewer's own
// resolved spec, recomputed from the same raw table version. Coarse buckets
// are never split arithmetically; measure filters re-snap to the viewer's
// grid from the original operands held in the descriptor.
inline PersonalizedDataSet redistribute(RuleEngine& rules, const TableStore& store,
                                        const PersonalizedDataSet& pds,
                                        const std::string& viewer_user_id) {
  TableVersionPtr table = store.at(pds.descriptor.table_id, pds.table_version);
  return personalize(rules, *table, pds.descriptor, viewer_user_id);
}

// Re-executes the stored descriptor against the latest table version after a
// data load. The resolved spec follows the user's current portfolio state.
inline PersonalizedDataSet refresh(RuleEngine& rules, const PersonalizedDataSet& pds,
                                   const std::string& user_id, const TableVersion& latest) {
  if (user_id != pds.resolved.resolved_for)
    throw Error(Errc::access_denied, "refresh is reserved for the original requester");
  if (latest.table_id() != pds.descriptor.table_id)
    throw Error(Errc::stale_table_version, "refresh target is a different table");
  if (latest.version() < pds.table_version)
    throw Error(Errc::stale_table_version, "refresh target is older than the report");
  return personalize(rules, latest, pds.descriptor, user_id);
}

// ── utility diagnostics ──────────────────────────────────────────────────────

struct UtilityLevel {
  PrivilegeLevel privilege = PrivilegeLevel::Low;
  Decimal width;
  int64_t bucket_count = 0;
  double chi_square = 0.0;
};

struct UtilityReport {
  std::string measure_id;
  Decimal reference_width;
  std::vector<UtilityLevel> levels;  // levels with width > 0, privilege order
};

// Chi-square fit of each level's coarse histogram against the reference grid
// (the finest non-zero width in the policy, offset 0). Observed counts are
// the reference-grid histogram; expected counts spread each coarse bucket
// uniformly over the reference cells it overlaps. Diagnostic only: no
// pass/fail threshold is applied.
inline UtilityReport utility_report(const TableVersion& table, const std::string& measure_id,
                                    const MeasurePolicy& policy) {
  const ColumnDef& col = table.manifest().require(measure_id);
  if (col.kind != ColumnKind::Measure)
    throw ValidationError({"column '" + measure_id + "' is not a measure"});

  UtilityReport report;
  report.measure_id = measure_id;

  std::optional<Decimal> finest;
  for (PrivilegeLevel lvl : kAllPrivileges) {
    const Decimal& w = policy.per_privilege.at(lvl).width;
    if (!w.is_zero() && (!finest || w < *finest)) finest = w;
  }
  if (!finest)
    throw Error(Errc::no_nonzero_width, "policy discloses exact values at every level");
  report.reference_width = *finest;

  const std::vector<Decimal>& values = table.decimal_column(measure_id);
  std::vector<std::size_t> all_rows(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) all_rows[i] = i;

  ResolvedSpec ref;
  ref.width = *finest;
  std::vector<BucketCount> observed = histogram_counts(values, all_rows, ref);
  std::unordered_map<int64_t, int64_t> observed_by_cell;
  for (const auto& bc : observed)
    observed_by_cell[bc.bucket.lo.floor_div(*finest)] = bc.count;

  for (PrivilegeLevel lvl : kAllPrivileges) {
    const RangeSpec& spec = policy.per_privilege.at(lvl);
    if (spec.width.is_zero()) continue;

    ResolvedSpec coarse;
    coarse.width = spec.width;
    // User-seeded grids have no level-wide offset; the diagnostic uses 0.
    coarse.offset = spec.mode == OffsetMode::Fixed ? spec.fixed_offset : Decimal();
    std::vector<BucketCount> counts = histogram_counts(values, all_rows, coarse);

    // Expected mass per reference cell, spread proportionally to overlap.
    std::unordered_map<int64_t, double> expected;
    for (const auto& bc : counts) {
      int64_t first_cell = bc.bucket.lo.floor_div(*finest);
      for (int64_t j = first_cell;; ++j) {
        Decimal cell_lo = finest->times(j);
        if (cell_lo >= bc.bucket.hi) break;
        Decimal cell_hi = cell_lo + *finest;
        const Decimal& lo = cell_lo < bc.bucket.lo ? bc.bucket.lo : cell_lo;
        const Decimal& hi = cell_hi < bc.bucket.hi ? cell_hi : bc.bucket.hi;
        Decimal overlap = hi - lo;
        if (overlap <= Decimal()) continue;
        expected[j] += static_cast<double>(bc.count) *
                       (overlap.to_double() / spec.width.to_double());
      }
    }

    double chi = 0.0;
    for (const auto& [cell, e] : expected) {
      if (e <= 0.0) continue;
      auto it = observed_by_cell.find(cell);
      double o = it == observed_by_cell.end() ? 0.0 : static_cast<double>(it->second);
      chi += (o - e) * (o - e) / e;
    }

    UtilityLevel out;
    out.privilege = lvl;
    out.width = spec.width;
    out.bucket_count = static_cast<int64_t>(counts.size());
    out.chi_square = chi;
    report.levels.push_back(out);
  }
  return report;
}

// ── canonical JSON rendering ─────────────────────────────────────────────────

inline nlohmann::ordered_json bucket_count_to_json(const BucketCount& bc) {
  return {{"range", format_bucket(bc.bucket)},
          {"lo", bc.bucket.lo.to_string()},
          {"hi", bc.bucket.hi.to_string()},
          {"count", bc.count}};
}

// The canonical wire form shared by the service and the CLI. Key order and
// value rendering are fixed so the two paths emit identical bytes.
inline nlohmann::ordered_json pds_to_json(const PersonalizedDataSet& pds) {
  nlohmann::ordered_json j;
  j["measure"] = pds.resolved.measure_id;
  j["unit"] = pds.unit;
  j["width"] = pds.resolved.width.to_string();
  j["table_version"] = pds.table_version;
  j["total"] = pds.total;
  if (pds.descriptor.mode == QueryMode::Records) {
    j["columns"] = pds.record_columns;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : pds.records) rows.push_back(r);
    j["rows"] = rows;
    return j;
  }
  if (pds.descriptor.group_by) {
    j["group_by"] = *pds.descriptor.group_by;
    auto groups = nlohmann::ordered_json::array();
    for (const auto& g : pds.groups) {
      auto buckets = nlohmann::ordered_json::array();
      for (const auto& bc : g.buckets) buckets.push_back(bucket_count_to_json(bc));
      groups.push_back({{"key", g.key}, {"total", g.total}, {"buckets", buckets}});
    }
    j["groups"] = groups;
    return j;
  }
  auto buckets = nlohmann::ordered_json::array();
  for (const auto& bc : pds.buckets) buckets.push_back(bucket_count_to_json(bc));
  j["buckets"] = buckets;
  return j;
}

inline std::string pds_to_canonical_json(const PersonalizedDataSet& pds) {
  return pds_to_json(pds).dump();
}

inline nlohmann::ordered_json utility_report_to_json(const UtilityReport& r) {
  nlohmann::ordered_json j;
  j["measure"] = r.measure_id;
  j["reference_width"] = r.reference_width.to_string();
  auto levels = nlohmann::ordered_json::array();
  for (const auto& l : r.levels)
    levels.push_back({{"privilege", privilege_name(l.privilege)},
                      {"width", l.width.to_string()},
                      {"bucket_count", l.bucket_count},
                      {"chi_square", l.chi_square}});
  j["levels"] = levels;
  return j;
}

}  // namespace pds
