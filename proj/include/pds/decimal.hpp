#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "pds/errors.hpp"

namespace pds {

// Exact decimal arithmetic for measure values and bucket boundaries.
//
// A Decimal is units * 10^-scale with int64 units. Instances are kept
// normalized (smallest scale representing the value exactly), so equal values
// have identical (units, scale) pairs and render identically. All arithmetic
// is overflow-checked; bucket boundaries computed from policy widths and
// offsets are therefore bit-reproducible.
class Decimal {
 public:
  static constexpr int kMaxScale = 12;

  constexpr Decimal() : units_(0), scale_(0) {}

  static Decimal from_units(int64_t units, int scale) {
    if (scale < 0 || scale > kMaxScale)
      throw Error(Errc::invalid_value, "decimal scale out of range");
    Decimal d;
    d.units_ = units;
    d.scale_ = scale;
    d.normalize();
    return d;
  }

  // Accepts [+-]?digits[.digits]; anything else is a parse_error.
  static Decimal parse(std::string_view text) {
    std::size_t i = 0;
    bool neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      neg = text[i] == '-';
      ++i;
    }
    std::size_t int_begin = i;
    while (i < text.size() && is_digit(text[i])) ++i;
    if (i == int_begin)
      throw Error(Errc::parse_error, "not a decimal: '" + std::string(text) + "'");
    std::size_t int_end = i;
    std::size_t frac_begin = 0, frac_end = 0;
    if (i < text.size() && text[i] == '.') {
      ++i;
      frac_begin = i;
      while (i < text.size() && is_digit(text[i])) ++i;
      frac_end = i;
      if (frac_end == frac_begin)
        throw Error(Errc::parse_error, "not a decimal: '" + std::string(text) + "'");
    }
    if (i != text.size())
      throw Error(Errc::parse_error, "not a decimal: '" + std::string(text) + "'");
    if (frac_end - frac_begin > static_cast<std::size_t>(kMaxScale))
      throw Error(Errc::parse_error, "too many fraction digits: '" + std::string(text) + "'");

    int64_t units = 0;
    for (std::size_t p = int_begin; p < int_end; ++p) accumulate(units, text[p]);
    for (std::size_t p = frac_begin; p < frac_end; ++p) accumulate(units, text[p]);
    if (neg) units = -units;
    Decimal d;
    d.units_ = units;
    d.scale_ = static_cast<int>(frac_end - frac_begin);
    d.normalize();
    return d;
  }

  // Rejects NaN/inf; rounds to `scale` fraction digits. Convenience entry for
  // callers holding binary floats; file and wire paths parse strings instead.
  static Decimal from_double(double v, int scale = 6) {
    if (!std::isfinite(v))
      throw Error(Errc::invalid_value, "non-finite value");
    if (scale < 0 || scale > kMaxScale)
      throw Error(Errc::invalid_value, "decimal scale out of range");
    double scaled = v * static_cast<double>(pow10(scale));
    if (scaled >= 9.2e18 || scaled <= -9.2e18)
      throw Error(Errc::invalid_value, "value out of decimal range");
    return from_units(std::llround(scaled), scale);
  }

  int64_t units() const { return units_; }
  int scale() const { return scale_; }
  bool is_zero() const { return units_ == 0; }
  bool is_negative() const { return units_ < 0; }

  // Canonical rendering: minimal digits, no trailing fraction zeros, no
  // thousands separators. Used verbatim in bucket labels, digests and JSON.
  std::string to_string() const {
    if (scale_ == 0) return std::to_string(units_);
    uint64_t mag = units_ < 0 ? 0ull - static_cast<uint64_t>(units_)
                              : static_cast<uint64_t>(units_);
    uint64_t p = static_cast<uint64_t>(pow10(scale_));
    uint64_t whole = mag / p;
    uint64_t frac = mag % p;
    std::string f = std::to_string(frac);
    f.insert(0, static_cast<std::size_t>(scale_) - f.size(), '0');
    std::string out;
    if (units_ < 0) out += '-';
    out += std::to_string(whole);
    out += '.';
    out += f;
    return out;
  }

  Decimal operator+(const Decimal& o) const {
    auto [a, b, s] = aligned(*this, o);
    int64_t r;
    if (__builtin_add_overflow(a, b, &r))
      throw Error(Errc::invalid_value, "decimal overflow in +");
    return from_units(r, s);
  }

  Decimal operator-(const Decimal& o) const {
    auto [a, b, s] = aligned(*this, o);
    int64_t r;
    if (__builtin_sub_overflow(a, b, &r))
      throw Error(Errc::invalid_value, "decimal overflow in -");
    return from_units(r, s);
  }

  Decimal times(int64_t k) const {
    int64_t r;
    if (__builtin_mul_overflow(units_, k, &r))
      throw Error(Errc::invalid_value, "decimal overflow in *");
    return from_units(r, scale_);
  }

  // floor((*this) / divisor) as an integer; divisor must be nonzero.
  int64_t floor_div(const Decimal& divisor) const {
    if (divisor.units_ == 0)
      throw Error(Errc::invalid_value, "decimal division by zero");
    auto [a, b, s] = aligned(*this, divisor);
    (void)s;
    int64_t q = a / b;
    int64_t r = a % b;
    if (r != 0 && ((r < 0) != (b < 0))) --q;
    return q;
  }

  bool is_multiple_of(const Decimal& step) const {
    if (step.units_ == 0) return units_ == 0;
    auto [a, b, s] = aligned(*this, step);
    (void)s;
    return a % b == 0;
  }

  // Exact quotient (*this)/divisor when it is a nonnegative integer; used for
  // granularity step counts. Throws invalid_spec otherwise.
  int64_t exact_quotient(const Decimal& divisor) const {
    if (divisor.units_ == 0 || divisor.is_negative() || is_negative())
      throw Error(Errc::invalid_spec, "quotient requires positive operands");
    auto [a, b, s] = aligned(*this, divisor);
    (void)s;
    if (a % b != 0)
      throw Error(Errc::invalid_spec,
                  to_string() + " is not a multiple of " + divisor.to_string());
    return a / b;
  }

  double to_double() const {
    return static_cast<double>(units_) / static_cast<double>(pow10(scale_));
  }

  friend bool operator==(const Decimal& x, const Decimal& y) {
    return x.units_ == y.units_ && x.scale_ == y.scale_;
  }

  friend std::strong_ordering operator<=>(const Decimal& x, const Decimal& y) {
    auto [a, b, s] = aligned(x, y);
    (void)s;
    return a <=> b;
  }

 private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  static void accumulate(int64_t& units, char c) {
    if (__builtin_mul_overflow(units, 10, &units) ||
        __builtin_add_overflow(units, c - '0', &units))
      throw Error(Errc::parse_error, "decimal literal out of range");
  }

  static constexpr int64_t pow10(int n) {
    int64_t p = 1;
    for (int i = 0; i < n; ++i) p *= 10;
    return p;
  }

  void normalize() {
    while (scale_ > 0 && units_ % 10 == 0) {
      units_ /= 10;
      --scale_;
    }
  }

  // Both values at their common (max) scale.
  static std::tuple<int64_t, int64_t, int> aligned(const Decimal& x, const Decimal& y) {
    int s = x.scale_ > y.scale_ ? x.scale_ : y.scale_;
    return {rescale(x, s), rescale(y, s), s};
  }

  static int64_t rescale(const Decimal& d, int scale) {
    int64_t u = d.units_;
    for (int i = d.scale_; i < scale; ++i)
      if (__builtin_mul_overflow(u, 10, &u))
        throw Error(Errc::invalid_value, "decimal overflow in rescale");
    return u;
  }

  int64_t units_;
  int scale_;
};

struct DecimalHash {
  std::size_t operator()(const Decimal& d) const {
    return std::hash<int64_t>()(d.units()) * 1000003u ^
           std::hash<int>()(d.scale());
  }
};

}  // namespace pds
