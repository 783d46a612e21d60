#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pds/crypto.hpp"
#include "pds/csv.hpp"
#include "pds/decimal.hpp"
#include "pds/errors.hpp"
#include "pds/filter.hpp"
#include "pds/schema.hpp"

namespace pds {

using ColumnData = std::variant<std::vector<Decimal>, std::vector<std::string>>;

// One immutable version of a table. The privacy layer only ever reads these;
// loads create new versions and older versions stay intact and digest-stable.
class TableVersion {
 public:
  const std::string& table_id() const { return table_id_; }
  int64_t version() const { return version_; }
  std::size_t row_count() const { return row_count_; }
  const SchemaManifest& manifest() const { return manifest_; }
  const std::string& digest() const { return digest_; }

  const std::vector<Decimal>& decimal_column(std::string_view name) const {
    return std::get<std::vector<Decimal>>(column(name));
  }

  const std::vector<std::string>& string_column(std::string_view name) const {
    return std::get<std::vector<std::string>>(column(name));
  }

  // Header row must match the manifest exactly and in order; cells parse at
  // the column's declared type (measures additionally at the declared
  // granularity). Produces version 1.
  static std::shared_ptr<const TableVersion> ingest_csv(std::string table_id,
                                                        std::string_view csv_text,
                                                        SchemaManifest manifest) {
    manifest.validate();
    auto t = std::shared_ptr<TableVersion>(new TableVersion);
    t->table_id_ = std::move(table_id);
    t->version_ = 1;
    t->manifest_ = std::move(manifest);
    for (const auto& col : t->manifest_.columns)
      t->columns_.push_back(col.value_type == ValueType::Decimal
                                ? ColumnData(std::vector<Decimal>{})
                                : ColumnData(std::vector<std::string>{}));
    t->append_parsed(csv_text);
    t->digest_ = crypto::sha256_hex(t->canonical_serialization());
    return t;
  }

  // New version with this version's rows plus the parsed rows; *this remains
  // readable and digest-stable. Appended CSV carries the same header.
  std::shared_ptr<const TableVersion> append_rows(std::string_view csv_text) const {
    auto t = std::shared_ptr<TableVersion>(new TableVersion(*this));
    t->version_ = version_ + 1;
    t->append_parsed(csv_text);
    t->digest_ = crypto::sha256_hex(t->canonical_serialization());
    return t;
  }

  // Indices of rows satisfying the conjunction of filters, in row order.
  std::vector<std::size_t> scan(const std::vector<Filter>& filters) const {
    struct Bound {
      const std::vector<Decimal>* decimals = nullptr;
      const std::vector<std::string>* strings = nullptr;
      FilterOp op = FilterOp::Eq;
      Decimal dec_operand;
      std::string str_operand;
    };
    std::vector<Bound> bound;
    bound.reserve(filters.size());
    for (const auto& f : filters) {
      const ColumnDef& def = manifest_.require(f.column);
      Bound b;
      b.op = f.op;
      if (f.op == FilterOp::Eq) {
        if (def.value_type != ValueType::String)
          throw Error(Errc::validation_failed,
                      "eq filter requires a string column: '" + f.column + "'");
        b.strings = &string_column(f.column);
        b.str_operand = f.operand;
      } else {
        if (def.value_type != ValueType::Decimal)
          throw Error(Errc::validation_failed,
                      "range filter requires a decimal column: '" + f.column + "'");
        b.decimals = &decimal_column(f.column);
        b.dec_operand = f.decimal_operand();
      }
      bound.push_back(std::move(b));
    }

    std::vector<std::size_t> out;
    for (std::size_t row = 0; row < row_count_; ++row) {
      bool keep = true;
      for (const auto& b : bound) {
        if (b.op == FilterOp::Eq) {
          keep = (*b.strings)[row] == b.str_operand;
        } else if (b.op == FilterOp::Ge) {
          keep = (*b.decimals)[row] >= b.dec_operand;
        } else {
          keep = (*b.decimals)[row] < b.dec_operand;
        }
        if (!keep) break;
      }
      if (keep) out.push_back(row);
    }
    return out;
  }

  // Canonical byte form hashed by snapshot_digest: schema line per column,
  // then each column's values in row order (column-major), '\n'-joined.
  // Documented in docs/formats.md; table_id and version are deliberately
  // excluded so the digest witnesses data content alone.
  std::string canonical_serialization() const {
    std::string out = "pds-table-v1\n";
    out += "columns " + std::to_string(manifest_.columns.size()) + "\n";
    for (const auto& c : manifest_.columns) {
      out += c.name;
      out += '|';
      out += column_kind_name(c.kind);
      out += '|';
      out += value_type_name(c.value_type);
      out += '|';
      out += c.unit;
      out += '|';
      if (c.kind == ColumnKind::Measure) out += c.granularity.to_string();
      out += '\n';
    }
    out += "rows " + std::to_string(row_count_) + "\n";
    for (std::size_t ci = 0; ci < manifest_.columns.size(); ++ci) {
      out += "column " + manifest_.columns[ci].name + "\n";
      if (const auto* dec = std::get_if<std::vector<Decimal>>(&columns_[ci])) {
        for (const auto& v : *dec) {
          out += v.to_string();
          out += '\n';
        }
      } else {
        for (const auto& v : std::get<std::vector<std::string>>(columns_[ci])) {
          out += v;
          out += '\n';
        }
      }
    }
    return out;
  }

 private:
  TableVersion() = default;

  const ColumnData& column(std::string_view name) const {
    for (std::size_t i = 0; i < manifest_.columns.size(); ++i)
      if (manifest_.columns[i].name == name) return columns_[i];
    throw Error(Errc::unknown_column, "unknown column: '" + std::string(name) + "'");
  }

  void append_parsed(std::string_view csv_text) {
    auto rows = parse_csv(csv_text);
    if (rows.empty())
      throw Error(Errc::header_mismatch, "CSV has no header row");
    const auto& header = rows.front();
    if (header.size() != manifest_.columns.size())
      throw Error(Errc::header_mismatch,
                  "header has " + std::to_string(header.size()) + " columns, manifest has " +
                      std::to_string(manifest_.columns.size()));
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] != manifest_.columns[i].name)
        throw Error(Errc::header_mismatch, "header column " + std::to_string(i + 1) +
                                               " is '" + header[i] + "', manifest says '" +
                                               manifest_.columns[i].name + "'");

    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() != manifest_.columns.size())
        throw Error(Errc::type_error, "row " + std::to_string(r) + " has " +
                                          std::to_string(row.size()) + " fields");
      for (std::size_t c = 0; c < row.size(); ++c) {
        const ColumnDef& def = manifest_.columns[c];
        if (def.value_type == ValueType::String) {
          std::get<std::vector<std::string>>(columns_[c]).push_back(row[c]);
          continue;
        }
        Decimal v;
        try {
          v = Decimal::parse(row[c]);
        } catch (const Error&) {
          throw Error(Errc::type_error, "row " + std::to_string(r) + ", column '" +
                                            def.name + "': not a decimal: '" + row[c] + "'");
        }
        if (def.kind == ColumnKind::Measure && !v.is_multiple_of(def.granularity))
          throw Error(Errc::type_error, "row " + std::to_string(r) + ", column '" + def.name +
                                            "': " + row[c] + " is not a multiple of granularity " +
                                            def.granularity.to_string());
        std::get<std::vector<Decimal>>(columns_[c]).push_back(v);
      }
      ++row_count_;
    }
  }

  std::string table_id_;
  int64_t version_ = 0;
  std::size_t row_count_ = 0;
  SchemaManifest manifest_;
  std::vector<ColumnData> columns_;
  std::string digest_;
};

using TableVersionPtr = std::shared_ptr<const TableVersion>;

// Recomputed from the live column data, not the cached value: comparing
// before/after digests witnesses that read paths never altered the table.
inline std::string snapshot_digest(const TableVersion& t) {
  return crypto::sha256_hex(t.canonical_serialization());
}

// In-memory registry of every version of every table. Publication is atomic:
// readers get a shared_ptr snapshot that stays valid regardless of later
// ingests.
class TableStore {
 public:
  TableVersionPtr ingest(std::string table_id, std::string_view csv, SchemaManifest manifest) {
    auto v1 = TableVersion::ingest_csv(std::move(table_id), csv, std::move(manifest));
    std::lock_guard lock(mx_);
    auto& versions = tables_[v1->table_id()];
    if (!versions.empty())
      throw Error(Errc::validation_failed,
                  "table '" + v1->table_id() + "' already exists");
    versions.push_back(v1);
    return v1;
  }

  TableVersionPtr append(const std::string& table_id, std::string_view csv) {
    std::lock_guard lock(mx_);
    auto& versions = existing(table_id);
    auto next = versions.back()->append_rows(csv);
    versions.push_back(next);
    return next;
  }

  TableVersionPtr latest(const std::string& table_id) const {
    std::lock_guard lock(mx_);
    return existing(table_id).back();
  }

  TableVersionPtr at(const std::string& table_id, int64_t version) const {
    std::lock_guard lock(mx_);
    const auto& versions = existing(table_id);
    for (const auto& v : versions)
      if (v->version() == version) return v;
    throw Error(Errc::stale_table_version,
                "table '" + table_id + "' version " + std::to_string(version) +
                    " is no longer available");
  }

  bool has(const std::string& table_id) const {
    std::lock_guard lock(mx_);
    return tables_.count(table_id) > 0;
  }

  std::vector<std::string> table_ids() const {
    std::lock_guard lock(mx_);
    std::vector<std::string> out;
    for (const auto& [id, _] : tables_) out.push_back(id);
    return out;
  }

 private:
  std::vector<TableVersionPtr>& existing(const std::string& table_id) {
    auto it = tables_.find(table_id);
    if (it == tables_.end() || it->second.empty())
      throw Error(Errc::unknown_table, "unknown table: '" + table_id + "'");
    return it->second;
  }

  const std::vector<TableVersionPtr>& existing(const std::string& table_id) const {
    return const_cast<TableStore*>(this)->existing(table_id);
  }

  mutable std::mutex mx_;
  std::map<std::string, std::vector<TableVersionPtr>> tables_;
};

}  // namespace pds
