#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hpi {

// Column-name configuration for the transactions CSV plus the month anchor.
struct CsvSchema {
  std::string region_column = "region_id";
  std::string date_column = "sale_date";
  std::string price_column = "price";
  std::vector<std::string> hedonic_columns;  // size H
  int anchor_year = 1997;
  int anchor_month = 1;  // 1..12
  // When set, rows with month index outside [0, T) are rejected.
  std::optional<int> num_months;
};

struct Transaction {
  std::string region_id;
  int month = 0;  // months since the anchor
  double price = 0.0;
  Eigen::VectorXd hedonics;  // length H
};

struct RowReject {
  std::size_t line;  // 1-based line number in the source
  std::string reason;
};

struct TransactionSet {
  std::vector<Transaction> rows;
  std::vector<RowReject> rejects;
  int hedonic_dim = 0;
};

// Parses a header-first CSV. Missing declared columns throw DataError;
// bad rows (non-positive price, unparseable date/number, out-of-range
// month) are collected as rejects with reasons.
TransactionSet parse_transactions(std::istream& source, const CsvSchema& schema);

// "YYYY-MM" (optionally "YYYY-MM-DD") -> month index relative to the anchor.
std::optional<int> parse_month_index(const std::string& date, int anchor_year,
                                     int anchor_month);

// Minimal CSV line splitter with double-quote support.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace hpi
