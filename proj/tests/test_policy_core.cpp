#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "pds/bucket.hpp"
#include "pds/policy.hpp"
#include "pds/privilege.hpp"
#include "testutil.hpp"

using namespace pds;
using pdstest::dec;
using pdstest::fixed_spec;
using pdstest::seeded_spec;

namespace {

ResolvedSpec spec_of(const char* width, const char* offset) {
  ResolvedSpec s;
  s.width = dec(width);
  s.offset = dec(offset);
  return s;
}

}  // namespace

TEST_CASE("privilege ladder") {
  CHECK(parse_privilege("low") == PrivilegeLevel::Low);
  CHECK(parse_privilege("Medium-Low") == PrivilegeLevel::MediumLow);
  CHECK(parse_privilege("MEDIUM_HIGH") == PrivilegeLevel::MediumHigh);
  CHECK(parse_privilege("High") == PrivilegeLevel::High);
  CHECK_THROWS_AS(parse_privilege("supreme"), Error);
  CHECK_THROWS_AS(parse_privilege(""), Error);
  CHECK(ordinal(PrivilegeLevel::Low) < ordinal(PrivilegeLevel::High));
}

TEST_CASE("bucket_for reproduces the five worked-example rows for 75") {
  struct Row {
    const char* width;
    const char* offset;
    const char* lo;
    const char* hi;
  };
  const Row rows[] = {
      {"30", "0", "60", "90"},  // External User, Low
      {"20", "5", "65", "85"},  // Internal Operator, Medium-Low
      {"10", "0", "70", "80"},  // Managerial, Medium
      {"5", "0", "75", "80"},   // Knowledge Worker, Medium-High
  };
  for (const Row& r : rows) {
    Bucket b = bucket_for(dec("75"), spec_of(r.width, r.offset));
    CAPTURE(r.width, r.offset);
    CHECK(b.lo == dec(r.lo));
    CHECK(b.hi == dec(r.hi));
  }
  Bucket exact = bucket_for(dec("75"), spec_of("0", "0"));  // CXO: actual value
  CHECK(exact.lo == dec("75"));
  CHECK(exact.hi == dec("75"));
  CHECK(exact.exact());
}

TEST_CASE("bucket_for boundary and negative cases") {
  Bucket b = bucket_for(dec("60"), spec_of("30", "0"));  // lower bound inclusive
  CHECK(b.lo == dec("60"));
  CHECK(b.hi == dec("90"));

  Bucket n = bucket_for(dec("-7"), spec_of("10", "0"));  // floor semantics
  CHECK(n.lo == dec("-10"));
  CHECK(n.hi == dec("0"));
}

TEST_CASE("bucket_for_value rejects non-finite input") {
  CHECK_THROWS_AS(bucket_for_value(std::nan(""), spec_of("10", "0")), Error);
  CHECK_THROWS_AS(bucket_for_value(INFINITY, spec_of("10", "0")), Error);
  CHECK(bucket_for_value(75.0, spec_of("30", "0")).lo == dec("60"));
}

TEST_CASE("format_bucket display forms") {
  CHECK(format_bucket(Bucket{dec("60"), dec("90")}) == "60-90");
  CHECK(format_bucket(Bucket{dec("75"), dec("75")}) == "75");
  CHECK(format_bucket(Bucket{dec("-10"), dec("0")}) == "-10-0");
  CHECK(format_bucket(Bucket{dec("2.5"), dec("5")}) == "2.5-5");
}

TEST_CASE("validate_policy accepts the worked-example widths") {
  CHECK(validate_policy(pdstest::table1_policy()).ok());
}

TEST_CASE("validate_policy rejects non-monotone widths") {
  MeasurePolicy p = pdstest::table1_policy();
  p.per_privilege[PrivilegeLevel::Low] = fixed_spec("10");
  p.per_privilege[PrivilegeLevel::MediumLow] = fixed_spec("20");
  ValidationResult r = validate_policy(p);
  REQUIRE_FALSE(r.ok());
  bool found = false;
  for (const auto& v : r.violations)
    if (v.find("Low narrower than Medium-Low") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate_policy rejects exact disclosure below the floor") {
  MeasurePolicy p = pdstest::table1_policy();
  p.per_privilege[PrivilegeLevel::Medium] = fixed_spec("0");
  p.per_privilege[PrivilegeLevel::MediumHigh] = fixed_spec("0");
  ValidationResult r = validate_policy(p);
  REQUIRE_FALSE(r.ok());
  bool found = false;
  for (const auto& v : r.violations)
    if (v.find("exact disclosure below floor") != std::string::npos) found = true;
  CHECK(found);

  // The floor is configurable down to Medium-High, never lower.
  CHECK(validate_policy(p, PrivilegeLevel::MediumHigh).violations.size() == 1);
  CHECK_FALSE(validate_policy(p, PrivilegeLevel::Medium).ok());
}

TEST_CASE("validate_policy rejects malformed specs") {
  MeasurePolicy p = pdstest::table1_policy();
  p.per_privilege[PrivilegeLevel::Low] = fixed_spec("30", "31");  // offset >= width
  CHECK_FALSE(validate_policy(p).ok());

  p = pdstest::table1_policy();
  p.per_privilege[PrivilegeLevel::High] = seeded_spec("0");  // seeded + width 0
  CHECK_FALSE(validate_policy(p).ok());

  p = pdstest::table1_policy();
  p.per_privilege.erase(PrivilegeLevel::Medium);  // missing level
  CHECK_FALSE(validate_policy(p).ok());

  p = pdstest::table1_policy();
  p.per_privilege[PrivilegeLevel::Medium] = fixed_spec("10.5");  // off-granularity width
  CHECK_FALSE(validate_policy(p).ok());
}

TEST_CASE("seeded_offset determinism and range") {
  std::vector<uint8_t> salt = {9, 9, 9};
  Decimal a = seeded_offset("u1", "r1", PrivilegeLevel::Low, "income", salt, dec("10"), dec("1"));
  Decimal b = seeded_offset("u1", "r1", PrivilegeLevel::Low, "income", salt, dec("10"), dec("1"));
  CHECK(a == b);
  CHECK(a >= Decimal());
  CHECK(a < dec("10"));
  CHECK(a.is_multiple_of(dec("1")));

  CHECK_THROWS_AS(seeded_offset("u1", "r1", PrivilegeLevel::Low, "income", salt, dec("0"), dec("1")),
                  Error);
}

TEST_CASE("seeded_offset changes with role, privilege, measure and salt") {
  std::vector<uint8_t> salt = {1, 2};
  Decimal base = seeded_offset("u1", "r1", PrivilegeLevel::Low, "income", salt, dec("1000"), dec("1"));
  CHECK(base != seeded_offset("u1", "r2", PrivilegeLevel::Low, "income", salt, dec("1000"), dec("1")));
  CHECK(base != seeded_offset("u1", "r1", PrivilegeLevel::Medium, "income", salt, dec("1000"), dec("1")));
  CHECK(base != seeded_offset("u1", "r1", PrivilegeLevel::Low, "sales", salt, dec("1000"), dec("1")));
  CHECK(base != seeded_offset("u1", "r1", PrivilegeLevel::Low, "income", {7}, dec("1000"), dec("1")));
}

TEST_CASE("seeded_offset disperses across users") {
  std::vector<uint8_t> salt = {0xaa, 0xbb};
  std::set<std::string> seen;
  for (int i = 0; i < 100; ++i) {
    Decimal o = seeded_offset("user" + std::to_string(i), "r1", PrivilegeLevel::Low, "income",
                              salt, dec("20"), dec("1"));
    CHECK(o >= Decimal());
    CHECK(o < dec("20"));
    seen.insert(o.to_string());
  }
  CHECK(seen.size() >= 2);
}

TEST_CASE("seeded_offset respects coarse granularity") {
  std::vector<uint8_t> salt = {3};
  for (int i = 0; i < 50; ++i) {
    Decimal o = seeded_offset("u" + std::to_string(i), "r", PrivilegeLevel::Low, "m", salt,
                              dec("100"), dec("25"));
    CHECK(o.is_multiple_of(dec("25")));
    CHECK(o < dec("100"));
  }
}

// ── module invariants, randomized ────────────────────────────────────────────

namespace {

struct SpecGen {
  std::mt19937_64 rng{42};

  ResolvedSpec next() {
    std::uniform_int_distribution<int64_t> wsteps(1, 500);
    std::uniform_int_distribution<int> scale(0, 2);
    ResolvedSpec s;
    int sc = scale(rng);
    s.width = Decimal::from_units(wsteps(rng), sc);
    std::uniform_int_distribution<int64_t> osteps(0, s.width.units() - 1);
    s.offset = Decimal::from_units(osteps(rng), sc);
    return s;
  }

  Decimal value() {
    std::uniform_int_distribution<int64_t> units(-1000000, 1000000);
    std::uniform_int_distribution<int> scale(0, 2);
    return Decimal::from_units(units(rng), scale(rng));
  }
};

}  // namespace

TEST_CASE("property: containment — v always lies in its bucket") {
  SpecGen gen;
  for (int i = 0; i < 3000; ++i) {
    ResolvedSpec s = gen.next();
    Decimal v = gen.value();
    Bucket b = bucket_for(v, s);
    CAPTURE(v.to_string(), s.width.to_string(), s.offset.to_string());
    CHECK(b.contains(v));
    CHECK(b.hi - b.lo == s.width);
  }
}

TEST_CASE("property: tiling — consecutive buckets share a boundary, no overlap") {
  SpecGen gen;
  for (int i = 0; i < 2000; ++i) {
    ResolvedSpec s = gen.next();
    Decimal v = gen.value();
    Bucket b = bucket_for(v, s);
    // The right edge belongs to the next bucket.
    Bucket next = bucket_for(b.hi, s);
    CHECK(next.lo == b.hi);
    // Every value of [lo, hi) maps back to the same bucket.
    Bucket again = bucket_for(b.lo, s);
    CHECK(again.lo == b.lo);
    CHECK(bucket_for(v, s) == b);  // determinism
  }
}

TEST_CASE("property: monotone coarseness — wider spec, wider bucket") {
  SpecGen gen;
  for (int i = 0; i < 2000; ++i) {
    ResolvedSpec a = gen.next();
    ResolvedSpec b = gen.next();
    if (a.width < b.width) std::swap(a, b);
    Decimal v = gen.value();
    Bucket ba = bucket_for(v, a);
    Bucket bb = bucket_for(v, b);
    CHECK(ba.hi - ba.lo >= bb.hi - bb.lo);
  }
}

TEST_CASE("property: nesting — coarse bucket is the union of k fine buckets") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int64_t> fine_w(1, 50);
  std::uniform_int_distribution<int64_t> mult(1, 8);
  for (int i = 0; i < 500; ++i) {
    Decimal wf = Decimal::from_units(fine_w(rng), 0);
    int64_t k = mult(rng);
    Decimal wc = wf.times(k);
    std::uniform_int_distribution<int64_t> off(0, wf.units() - 1);
    Decimal offset = Decimal::from_units(off(rng), 0);  // congruent mod fine width

    ResolvedSpec coarse;
    coarse.width = wc;
    coarse.offset = offset;
    ResolvedSpec fine;
    fine.width = wf;
    fine.offset = offset;

    std::uniform_int_distribution<int64_t> vu(-10000, 10000);
    Decimal v = Decimal::from_units(vu(rng), 0);
    Bucket cb = bucket_for(v, coarse);

    // Brute force: walk the fine grid across the coarse bucket.
    int64_t cells = 0;
    for (Decimal lo = cb.lo; lo < cb.hi; lo = lo + wf) {
      Bucket fb = bucket_for(lo, fine);
      CHECK(fb.lo >= cb.lo);
      CHECK(fb.hi <= cb.hi);
      ++cells;
    }
    CHECK(cells == k);
  }
}

TEST_CASE("property: seeded offsets always land in [0, width)") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int64_t> wsteps(1, 300);
  for (int i = 0; i < 500; ++i) {
    Decimal w = Decimal::from_units(wsteps(rng), 0);
    Decimal o = seeded_offset("u" + std::to_string(i), "r", PrivilegeLevel::Medium, "m",
                              {0x42}, w, dec("1"));
    CHECK(o >= Decimal());
    CHECK(o < w);
  }
}
