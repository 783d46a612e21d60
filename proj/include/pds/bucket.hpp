#pragma once

#include <string>

#include "pds/decimal.hpp"
#include "pds/errors.hpp"
#include "pds/policy.hpp"

namespace pds {

// One cell of a requester's value grid: [lo, hi) when hi > lo, the single
// point lo when hi == lo (exact disclosure).
struct Bucket {
  Decimal lo;
  Decimal hi;

  bool exact() const { return lo == hi; }
  Decimal width() const { return hi - lo; }

  bool contains(const Decimal& v) const {
    return exact() ? v == lo : lo <= v && v < hi;
  }

  friend bool operator==(const Bucket& a, const Bucket& b) {
    return a.lo == b.lo && a.hi == b.hi;
  }
};

// Grid-aligned bucket assignment: lo = offset + floor((v - offset)/width)*width.
// Floor semantics make negative values land in the right cell.
inline Bucket bucket_for(const Decimal& value, const ResolvedSpec& spec) {
  if (spec.width.is_zero()) return Bucket{value, value};
  if (spec.offset.is_negative() || spec.offset >= spec.width)
    throw Error(Errc::invalid_spec, "offset outside [0, width)");
  int64_t k = (value - spec.offset).floor_div(spec.width);
  Decimal lo = spec.offset + spec.width.times(k);
  return Bucket{lo, lo + spec.width};
}

inline Bucket bucket_for(const Decimal& value, const Decimal& width, const Decimal& offset) {
  ResolvedSpec s;
  s.width = width;
  s.offset = offset;
  return bucket_for(value, s);
}

// Entry point for callers holding binary floats; NaN/inf is invalid_value.
inline Bucket bucket_for_value(double value, const ResolvedSpec& spec, int scale = 6) {
  return bucket_for(Decimal::from_double(value, scale), spec);
}

// "60-90" for ranges, "75" for exact disclosure. Signs appear only on the
// lo/hi tokens themselves, so "-10-0" is the cell [-10, 0).
inline std::string format_bucket(const Bucket& b) {
  if (b.exact()) return b.lo.to_string();
  return b.lo.to_string() + "-" + b.hi.to_string();
}

}  // namespace pds
