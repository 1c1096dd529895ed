#include "fediff/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fediff {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  return cells;
}

double parse_double(const std::string& s, const std::filesystem::path& file, std::size_t lineno) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                             ": cannot parse number '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("float formatting failed");
  return std::string(buf, ptr);
}

SampleTable read_samples_csv(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open input file: " + file.string());

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  const auto header = split(line);
  int x_col = -1, y_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "x") x_col = static_cast<int>(i);
    if (header[i] == "y") y_col = static_cast<int>(i);
  }
  if (y_col < 0)
    throw std::runtime_error(file.string() + ": header must be 'x,y' or 'y'");

  SampleTable table;
  if (x_col >= 0) table.x.emplace();
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(header.size()) + " fields");
    table.y.push_back(parse_double(cells[static_cast<std::size_t>(y_col)], file, lineno));
    if (x_col >= 0)
      table.x->push_back(parse_double(cells[static_cast<std::size_t>(x_col)], file, lineno));
  }
  return table;
}

void write_columns_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
                       const std::vector<const std::vector<double>*>& columns) {
  if (header.size() != columns.size())
    throw std::invalid_argument("header and column counts differ");
  const std::size_t rows = columns.empty() ? 0 : columns.front()->size();
  for (const auto* col : columns)
    if (col->size() != rows) throw std::invalid_argument("columns have different lengths");

  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot open output file: " + file.string());
  for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
  os << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j)
      os << (j ? "," : "") << format_double((*columns[j])[i]);
    os << '\n';
  }
  if (!os) throw std::runtime_error("failed writing output file: " + file.string());
}

}  // namespace fediff
