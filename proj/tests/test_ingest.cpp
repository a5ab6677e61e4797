#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "hpi/errors.hpp"
#include "hpi/transactions.hpp"

using namespace hpi;

namespace {

CsvSchema schema_h2() {
  CsvSchema s;
  s.hedonic_columns = {"bath", "sqft"};
  s.anchor_year = 1997;
  s.anchor_month = 1;
  return s;
}

}  // namespace

TEST_CASE("well-formed rows parse with zero rejects") {
  std::istringstream csv(
      "region_id,sale_date,price,bath,sqft\n"
      "a,1997-01,100000,2,1500\n"
      "a,1997-03,120000,1,900\n"
      "b,1998-01,250000,3,2400\n");
  const auto set = parse_transactions(csv, schema_h2());
  REQUIRE(set.rows.size() == 3);
  CHECK(set.rejects.empty());
  CHECK(set.rows[0].month == 0);
  CHECK(set.rows[1].month == 2);
  CHECK(set.rows[2].month == 12);
  CHECK(set.rows[2].price == doctest::Approx(250000.0));
  CHECK(set.rows[0].hedonics(1) == doctest::Approx(1500.0));
}

TEST_CASE("nonpositive price is a row reject, not a failure") {
  std::istringstream csv(
      "region_id,sale_date,price,bath,sqft\n"
      "a,1997-01,100000,2,1500\n"
      "a,1997-02,0,2,1500\n"
      "a,1997-03,120000,1,900\n");
  const auto set = parse_transactions(csv, schema_h2());
  CHECK(set.rows.size() == 2);
  REQUIRE(set.rejects.size() == 1);
  CHECK(set.rejects[0].reason == "nonpositive price");
  CHECK(set.rejects[0].line == 3);
}

TEST_CASE("missing declared column is a schema error naming it") {
  std::istringstream csv("region_id,sale_date,bath,sqft\na,1997-01,2,1500\n");
  try {
    parse_transactions(csv, schema_h2());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("price") != std::string::npos);
  }
}

TEST_CASE("unparseable dates and out-of-range months are rejects") {
  CsvSchema s = schema_h2();
  s.num_months = 12;
  std::istringstream csv(
      "region_id,sale_date,price,bath,sqft\n"
      "a,burp,100,2,1500\n"
      "a,1996-12,100,2,1500\n"
      "a,1998-01,100,2,1500\n"
      "a,1997-06,100,2,1500\n");
  const auto set = parse_transactions(csv, s);
  CHECK(set.rows.size() == 1);
  REQUIRE(set.rejects.size() == 3);
  CHECK(set.rejects[0].reason.find("unparseable date") == 0);
  CHECK(set.rejects[1].reason == "month out of range");
  CHECK(set.rejects[2].reason == "month out of range");
}

TEST_CASE("month parsing accepts YYYY-MM-DD and rejects junk") {
  CHECK(parse_month_index("2001-07", 1997, 1) == 54);
  CHECK(parse_month_index("1997-01-15", 1997, 1) == 0);
  CHECK(!parse_month_index("199701", 1997, 1));
  CHECK(!parse_month_index("1997-13", 1997, 1));
  CHECK(!parse_month_index("1997/01", 1997, 1));
}

TEST_CASE("quoted csv fields") {
  const auto fields = split_csv_line("\"a,b\",2,\"say \"\"hi\"\"\"");
  REQUIRE(fields.size() == 3);
  CHECK(fields[0] == "a,b");
  CHECK(fields[2] == "say \"hi\"");
}
