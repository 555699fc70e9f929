#include "csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "dml/error.hpp"

namespace dml::cli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

double parse_number(const std::string& raw, std::size_t line, const std::string& column) {
  const std::string s = trim(raw);
  double value = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::NonFiniteValue,
                "line " + std::to_string(line) + ", column '" + column + "': not a number: '" + s + "'");
  }
  return value;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> record_lines;
  std::vector<std::string> record;
  std::string cell;
  bool quoted = false, cell_started = false, any = false;
  std::size_t line = 1, record_line = 1;

  const auto end_cell = [&] {
    record.push_back(cell);
    cell.clear();
    cell_started = false;
  };
  const auto end_record = [&] {
    if (any || !record.empty()) {
      end_cell();
      const bool blank = record.size() == 1 && trim(record[0]).empty();
      if (!blank) {
        records.push_back(std::move(record));
        record_lines.push_back(record_line);
      }
    }
    record.clear();
    any = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        cell += c;
      }
      continue;
    }
    if (!any) record_line = line;
    switch (c) {
      case '"':
        if (cell_started && !trim(cell).empty()) {
          throw Error(ErrorCode::NonFiniteValue, "line " + std::to_string(line) + ": stray quote");
        }
        quoted = true;
        cell_started = any = true;
        break;
      case ',':
        end_cell();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        cell += c;
        cell_started = any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::NonFiniteValue, "unterminated quoted field");
  end_record();

  CsvTable table;
  if (records.empty()) throw Error(ErrorCode::MissingColumn, "empty CSV: no header row");
  table.header = records.front();
  for (auto& h : table.header) h = trim(h);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw Error(ErrorCode::MissingColumn, "line " + std::to_string(record_lines[r]) + ": expected " +
                                                std::to_string(table.header.size()) + " fields, got " +
                                                std::to_string(records[r].size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingColumn, "cannot open data file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

Dataset dataset_from_csv(const CsvTable& table, const std::string& outcome, const std::string& treatment,
                         const std::vector<std::string>& covariates) {
  const auto column = [&](const std::string& name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found");
    return static_cast<std::size_t>(it - table.header.begin());
  };
  const std::size_t y_col = column(outcome);
  const std::size_t d_col = column(treatment);
  std::vector<std::string> names = covariates;
  if (names.empty()) {
    for (const auto& h : table.header) {
      if (h != outcome && h != treatment) names.push_back(h);
    }
  }
  std::vector<std::size_t> z_cols;
  for (const auto& name : names) {
    if (name == outcome || name == treatment) {
      throw Error(ErrorCode::MissingColumn, "column '" + name + "' cannot be both a covariate and outcome/treatment");
    }
    z_cols.push_back(column(name));
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Eigen::VectorXd y(n), d(n);
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(z_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::size_t line = static_cast<std::size_t>(i) + 2;
    y[i] = parse_number(row[y_col], line, outcome);
    d[i] = parse_number(row[d_col], line, treatment);
    for (std::size_t j = 0; j < z_cols.size(); ++j) {
      z(i, static_cast<Eigen::Index>(j)) = parse_number(row[z_cols[j]], line, names[j]);
    }
  }
  return validate_dataset(std::move(y), std::move(d), std::move(z), std::move(names));
}

}  // namespace dml::cli
