#pragma once

#include <string>
#include <string_view>

#include "pds/decimal.hpp"
#include "pds/errors.hpp"

namespace pds {

// eq applies to dimensions (string equality); ge/lt apply to measures, with
// decimal operands that are snapped to the requester's bucket grid before any
// row is touched.
enum class FilterOp { Eq, Ge, Lt };

inline const char* filter_op_name(FilterOp op) {
  switch (op) {
    case FilterOp::Eq: return "eq";
    case FilterOp::Ge: return "ge";
    case FilterOp::Lt: return "lt";
  }
  return "?";
}

inline FilterOp parse_filter_op(std::string_view s) {
  if (s == "eq") return FilterOp::Eq;
  if (s == "ge") return FilterOp::Ge;
  if (s == "lt") return FilterOp::Lt;
  throw Error(Errc::parse_error, "unknown filter op: '" + std::string(s) + "'");
}

struct Filter {
  std::string column;
  FilterOp op = FilterOp::Eq;
  std::string operand;  // dimension value, or canonical decimal string

  Decimal decimal_operand() const { return Decimal::parse(operand); }

  friend bool operator==(const Filter& a, const Filter& b) {
    return a.column == b.column && a.op == b.op && a.operand == b.operand;
  }
};

}  // namespace pds
