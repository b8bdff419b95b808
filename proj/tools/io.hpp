#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vspline/correlation.hpp"
#include "vspline/samples.hpp"

namespace vspline::cli {

/// Failure reading or writing a file; maps to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that parses back to the same double ("nan", "inf" for non-finite values).
std::string format_double(double x);
double parse_double(std::string_view text);

/// Dataset CSV with header "t,y,v".
Samples read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Samples& samples);
std::string format_dataset(const Samples& samples);

/// Numeric table; a first line that does not parse as numbers is taken as a header.
std::vector<std::vector<double>> read_table(const std::filesystem::path& path);

/// One weight per line (n + 1 weights for n samples).
std::vector<double> read_weights(const std::filesystem::path& path, std::size_t intervals);

/// 2n rows of n columns: W, then Ucorr.
CorrelationSpec read_correlation(const std::filesystem::path& path, std::size_t n);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vspline::cli
