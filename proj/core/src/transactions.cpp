#include "hpi/transactions.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <unordered_map>

#include "hpi/errors.hpp"

namespace hpi {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

std::optional<int> parse_month_index(const std::string& date, int anchor_year,
                                     int anchor_month) {
  // Expected YYYY-MM with an optional -DD suffix.
  if (date.size() < 7 || date[4] != '-') return std::nullopt;
  if (date.size() > 7 && date[7] != '-') return std::nullopt;
  int year = 0, month = 0;
  auto [py, ey] = std::from_chars(date.data(), date.data() + 4, year);
  auto [pm, em] = std::from_chars(date.data() + 5, date.data() + 7, month);
  if (ey != std::errc{} || em != std::errc{} || py != date.data() + 4 ||
      pm != date.data() + 7)
    return std::nullopt;
  if (month < 1 || month > 12) return std::nullopt;
  return (year - anchor_year) * 12 + (month - anchor_month);
}

namespace {

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

TransactionSet parse_transactions(std::istream& source, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(source, line))
    throw DataError("transactions CSV is empty (no header)");
  const auto header = split_csv_line(line);
  std::unordered_map<std::string, int> col;
  for (std::size_t i = 0; i < header.size(); ++i)
    col[header[i]] = static_cast<int>(i);

  auto require = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end())
      throw DataError("transactions CSV is missing column '" + name + "'");
    return it->second;
  };
  const int region_idx = require(schema.region_column);
  const int date_idx = require(schema.date_column);
  const int price_idx = require(schema.price_column);
  std::vector<int> hed_idx;
  for (const auto& name : schema.hedonic_columns) hed_idx.push_back(require(name));
  const int H = static_cast<int>(hed_idx.size());

  TransactionSet set;
  set.hedonic_dim = H;
  std::size_t line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    auto reject = [&](const std::string& reason) {
      set.rejects.push_back({line_no, reason});
    };
    const int max_needed = std::max({region_idx, date_idx, price_idx,
                                     hed_idx.empty() ? 0 : *std::max_element(hed_idx.begin(), hed_idx.end())});
    if (static_cast<int>(fields.size()) <= max_needed) {
      reject("too few fields");
      continue;
    }
    const auto month = parse_month_index(fields[date_idx], schema.anchor_year,
                                         schema.anchor_month);
    if (!month) {
      reject("unparseable date '" + fields[date_idx] + "'");
      continue;
    }
    if (*month < 0 || (schema.num_months && *month >= *schema.num_months)) {
      reject("month out of range");
      continue;
    }
    const auto price = parse_double(fields[price_idx]);
    if (!price) {
      reject("unparseable price '" + fields[price_idx] + "'");
      continue;
    }
    if (*price <= 0.0) {
      reject("nonpositive price");
      continue;
    }
    Eigen::VectorXd u(H);
    bool bad = false;
    for (int h = 0; h < H; ++h) {
      const auto v = parse_double(fields[hed_idx[h]]);
      if (!v) {
        reject("unparseable value in column '" + schema.hedonic_columns[h] + "'");
        bad = true;
        break;
      }
      u(h) = *v;
    }
    if (bad) continue;
    set.rows.push_back({fields[region_idx], *month, *price, std::move(u)});
  }
  return set;
}

}  // namespace hpi
