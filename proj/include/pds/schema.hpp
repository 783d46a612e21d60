#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pds/decimal.hpp"
#include "pds/errors.hpp"

namespace pds {

// measure: numeric and sensitive, delivered as ranges
// dimension: categorical, usable for filtering and grouping
// identifier: names individuals; visible only to roles cleared for it
enum class ColumnKind { Measure, Dimension, Identifier };
enum class ValueType { Decimal, String };

inline const char* column_kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::Measure: return "measure";
    case ColumnKind::Dimension: return "dimension";
    case ColumnKind::Identifier: return "identifier";
  }
  return "?";
}

inline ColumnKind parse_column_kind(std::string_view s) {
  if (s == "measure") return ColumnKind::Measure;
  if (s == "dimension") return ColumnKind::Dimension;
  if (s == "identifier") return ColumnKind::Identifier;
  throw Error(Errc::parse_error, "unknown column kind: '" + std::string(s) + "'");
}

inline const char* value_type_name(ValueType t) {
  return t == ValueType::Decimal ? "decimal" : "string";
}

inline ValueType parse_value_type(std::string_view s) {
  if (s == "decimal") return ValueType::Decimal;
  if (s == "string") return ValueType::String;
  throw Error(Errc::parse_error, "unknown value type: '" + std::string(s) + "'");
}

struct ColumnDef {
  std::string name;
  ColumnKind kind = ColumnKind::Dimension;
  ValueType value_type = ValueType::String;
  std::string unit;      // measures only
  Decimal granularity;   // measures only; positive
};

struct SchemaManifest {
  std::vector<ColumnDef> columns;

  const ColumnDef* find(std::string_view name) const {
    for (const auto& c : columns)
      if (c.name == name) return &c;
    return nullptr;
  }

  const ColumnDef& require(std::string_view name) const {
    const ColumnDef* c = find(name);
    if (!c)
      throw Error(Errc::unknown_column, "unknown column: '" + std::string(name) + "'");
    return *c;
  }

  // Throws on duplicate names or ill-typed measure declarations.
  void validate() const {
    std::set<std::string> seen;
    for (const auto& c : columns) {
      if (c.name.empty())
        throw Error(Errc::validation_failed, "column with empty name");
      if (!seen.insert(c.name).second)
        throw Error(Errc::duplicate_column, "duplicate column: '" + c.name + "'");
      if (c.kind == ColumnKind::Measure) {
        if (c.value_type != ValueType::Decimal)
          throw Error(Errc::validation_failed,
                      "measure column '" + c.name + "' must be decimal");
        if (c.unit.empty())
          throw Error(Errc::validation_failed,
                      "measure column '" + c.name + "' missing unit");
        if (c.granularity <= Decimal())
          throw Error(Errc::validation_failed,
                      "measure column '" + c.name + "' needs positive granularity");
      }
    }
  }
};

}  // namespace pds
