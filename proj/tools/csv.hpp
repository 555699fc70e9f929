#pragma once

#include <string>
#include <vector>

#include "dml/data.hpp"

namespace dml::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 subset: comma separator, optional double quotes with "" escapes,
/// CRLF or LF line ends. Blank lines are skipped. Throws DataError-class
/// errors (MissingColumn for ragged rows) with the line number.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

/// Builds a Dataset from named columns. Empty `covariates` means every column
/// other than the outcome and treatment. Throws MissingColumn naming the column
/// and NonFiniteValue naming the row and column of an unparsable cell.
Dataset dataset_from_csv(const CsvTable& table, const std::string& outcome, const std::string& treatment,
                         const std::vector<std::string>& covariates);

}  // namespace dml::cli
