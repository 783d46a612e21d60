#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pds/csv.hpp"
#include "pds/table.hpp"
#include "testutil.hpp"

using namespace pds;
using pdstest::customer_manifest;
using pdstest::dec;

TEST_CASE("csv parser handles quoting") {
  auto rows = parse_csv("a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][0] == "x,y");
  CHECK(rows[1][1] == "say \"hi\"");

  CHECK(parse_csv("a,b\r\n1,2\r\n")[1][0] == "1");
  CHECK(parse_csv("").empty());
  CHECK_THROWS_AS(parse_csv("a\n\"line1\nline2\"\n"), Error);  // no embedded newlines
  CHECK_THROWS_AS(parse_csv("\"unterminated"), Error);
}

TEST_CASE("ingest builds typed columns") {
  auto t = TableVersion::ingest_csv("cust", "customer,region,annual_income_k\nc1,EU,75\nc2,US,62\n",
                                    customer_manifest());
  CHECK(t->version() == 1);
  CHECK(t->row_count() == 2);
  CHECK(t->decimal_column("annual_income_k")[0] == dec("75"));
  CHECK(t->string_column("region")[1] == "US");
  CHECK(t->digest().size() == 64);
}

TEST_CASE("ingest rejects bad cells with row and column") {
  try {
    TableVersion::ingest_csv("cust", "customer,region,annual_income_k\nc1,EU,75\nc2,EU,abc\n",
                             customer_manifest());
    FAIL("expected type_error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::type_error);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    CHECK(std::string(e.what()).find("annual_income_k") != std::string::npos);
  }
}

TEST_CASE("ingest rejects off-granularity measure values") {
  CHECK_THROWS_AS(TableVersion::ingest_csv(
                      "cust", "customer,region,annual_income_k\nc1,EU,75.5\n", customer_manifest()),
                  Error);
}

TEST_CASE("ingest rejects header drift") {
  try {
    TableVersion::ingest_csv("cust", "customer,region,incme\nc1,EU,75\n", customer_manifest());
    FAIL("expected header_mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::header_mismatch);
  }
  CHECK_THROWS_AS(
      TableVersion::ingest_csv("cust", "customer,region\nc1,EU\n", customer_manifest()),
      Error);
}

TEST_CASE("duplicate manifest columns are rejected") {
  SchemaManifest m = customer_manifest();
  m.columns.push_back(m.columns[1]);
  try {
    TableVersion::ingest_csv("cust", "x", m);
    FAIL("expected duplicate_column");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::duplicate_column);
  }
}

TEST_CASE("append produces a new immutable version") {
  auto v1 = TableVersion::ingest_csv("cust", "customer,region,annual_income_k\nc1,EU,75\nc2,US,62\n",
                                     customer_manifest());
  std::string d1 = v1->digest();
  auto v2 = v1->append_rows("customer,region,annual_income_k\nc3,EU,91\n");
  CHECK(v2->version() == 2);
  CHECK(v2->row_count() == 3);
  CHECK(v1->row_count() == 2);
  CHECK(v1->digest() == d1);
  CHECK(snapshot_digest(*v1) == d1);
  CHECK(v2->digest() != d1);

  // Appending nothing still advances the version; content digest is equal.
  auto v3 = v2->append_rows("customer,region,annual_income_k\n");
  CHECK(v3->version() == 3);
  CHECK(v3->row_count() == 3);
  CHECK(snapshot_digest(*v3) == snapshot_digest(*v2));
}

TEST_CASE("append with a bad row leaves the store unchanged") {
  TableStore store;
  store.ingest("cust", "customer,region,annual_income_k\nc1,EU,75\n", customer_manifest());
  CHECK_THROWS_AS(store.append("cust", "customer,region,annual_income_k\nc2,EU,oops\n"), Error);
  CHECK(store.latest("cust")->version() == 1);
  CHECK(store.latest("cust")->row_count() == 1);
}

TEST_CASE("digest differs when one cell differs") {
  auto a = TableVersion::ingest_csv("t", "customer,region,annual_income_k\nc1,EU,75\n",
                                    customer_manifest());
  auto b = TableVersion::ingest_csv("t2", "customer,region,annual_income_k\nc1,EU,76\n",
                                    customer_manifest());
  CHECK(snapshot_digest(*a) != snapshot_digest(*b));
  // Identical content hashes identically regardless of table id.
  auto c = TableVersion::ingest_csv("t3", "customer,region,annual_income_k\nc1,EU,75\n",
                                    customer_manifest());
  CHECK(snapshot_digest(*a) == snapshot_digest(*c));
}

TEST_CASE("scan filters") {
  auto t = TableVersion::ingest_csv("cust",
                                    "customer,region,annual_income_k\n"
                                    "c1,EU,75\nc2,US,62\nc3,EU,91\nc4,APAC,88\n",
                                    customer_manifest());
  CHECK(t->scan({}) == std::vector<std::size_t>{0, 1, 2, 3});

  Filter eu{"region", FilterOp::Eq, "EU"};
  CHECK(t->scan({eu}) == std::vector<std::size_t>{0, 2});

  Filter ge80{"annual_income_k", FilterOp::Ge, "80"};
  CHECK(t->scan({ge80}) == std::vector<std::size_t>{2, 3});

  Filter lt80{"annual_income_k", FilterOp::Lt, "80"};
  CHECK(t->scan({eu, lt80}) == std::vector<std::size_t>{0});

  // Contradictory filters select nothing.
  Filter lt0{"annual_income_k", FilterOp::Lt, "0"};
  CHECK(t->scan({ge80, lt0}).empty());

  CHECK_THROWS_AS(t->scan({Filter{"nope", FilterOp::Eq, "x"}}), Error);
}

TEST_CASE("property: scan equals row-by-row predicate evaluation") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> rows_dist(0, 1000);
  std::uniform_int_distribution<int> income(0, 200);
  std::uniform_int_distribution<int> region(0, 2);
  const char* regions[] = {"EU", "US", "APAC"};

  for (int iter = 0; iter < 20; ++iter) {
    int n = rows_dist(rng);
    std::string csv = "customer,region,annual_income_k\n";
    std::vector<std::string> rs;
    std::vector<int> vs;
    for (int i = 0; i < n; ++i) {
      rs.push_back(regions[region(rng)]);
      vs.push_back(income(rng));
      csv += "c" + std::to_string(i) + "," + rs.back() + "," + std::to_string(vs.back()) + "\n";
    }
    auto t = TableVersion::ingest_csv("t", csv, customer_manifest());

    std::string want_region = regions[region(rng)];
    int ge = income(rng);
    int lt = income(rng);
    std::vector<Filter> filters = {{"region", FilterOp::Eq, want_region},
                                   {"annual_income_k", FilterOp::Ge, std::to_string(ge)},
                                   {"annual_income_k", FilterOp::Lt, std::to_string(lt)}};

    std::vector<std::size_t> expected;
    for (int i = 0; i < n; ++i)
      if (rs[i] == want_region && vs[i] >= ge && vs[i] < lt)
        expected.push_back(static_cast<std::size_t>(i));

    CHECK(t->scan(filters) == expected);
  }
}

TEST_CASE("table store versioning") {
  TableStore store;
  auto v1 = store.ingest("cust", "customer,region,annual_income_k\nc1,EU,75\n", customer_manifest());
  CHECK_THROWS_AS(store.ingest("cust", "customer,region,annual_income_k\n", customer_manifest()),
                  Error);
  auto v2 = store.append("cust", "customer,region,annual_income_k\nc2,US,62\n");
  CHECK(store.latest("cust")->version() == 2);
  CHECK(store.at("cust", 1)->digest() == v1->digest());
  CHECK_THROWS_AS(store.at("cust", 9), Error);
  CHECK_THROWS_AS(store.latest("nope"), Error);
  CHECK(store.table_ids() == std::vector<std::string>{"cust"});
}
