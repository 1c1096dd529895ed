#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fediff {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Samples read from a CSV file with header `x,y` or `y`.
struct SampleTable {
  std::optional<std::vector<double>> x;
  std::vector<double> y;
};

/// Throws std::runtime_error (with the file path) on I/O or parse failures.
SampleTable read_samples_csv(const std::filesystem::path& file);

/// Writes a CSV with the given header and equally long columns.
void write_columns_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
                       const std::vector<const std::vector<double>*>& columns);

}  // namespace fediff
