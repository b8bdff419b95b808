#include "io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace vspline::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

bool try_parse(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_row(std::string_view line, std::vector<double>& row) {
  row.clear();
  for (auto field : split(line)) {
    double x;
    if (!try_parse(field, x)) return false;
    row.push_back(x);
  }
  return true;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return buf.str();
}

std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t number = 0, start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++number;
    const auto line = trim(text.substr(start, end - start));
    if (!line.empty()) out.emplace_back(number, line);
    start = end + 1;
  }
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return "'" + path.string() + "' line " + std::to_string(line);
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double x;
  if (!try_parse(text, x)) throw IoError("not a number: '" + std::string(text) + "'");
  return x;
}

Samples read_dataset(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto lines = lines_of(text);
  if (lines.empty()) throw IoError("'" + path.string() + "' is empty");
  const auto header = split(lines.front().second);
  if (header.size() != 3 || header[0] != "t" || header[1] != "y" || header[2] != "v") {
    throw IoError(where(path, lines.front().first) + ": expected header 't,y,v'");
  }
  Samples out;
  std::vector<double> row;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [number, line] = lines[k];
    if (!parse_row(line, row) || row.size() != 3) {
      throw IoError(where(path, number) + ": expected three numeric fields t,y,v");
    }
    for (double x : row) {
      if (!std::isfinite(x)) throw IoError(where(path, number) + ": non-finite value");
    }
    if (!out.empty() && !(row[0] > out.back().t)) {
      throw IoError(where(path, number) + ": t must be strictly increasing");
    }
    out.push_back({row[0], row[1], row[2]});
  }
  return out;
}

std::string format_dataset(const Samples& samples) {
  std::string out = "t,y,v\n";
  for (const auto& s : samples) {
    out += format_double(s.t) + ',' + format_double(s.y) + ',' + format_double(s.v) + '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, const Samples& samples) {
  write_text(path, format_dataset(samples));
}

std::vector<std::vector<double>> read_table(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto lines = lines_of(text);
  std::vector<std::vector<double>> out;
  std::vector<double> row;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto& [number, line] = lines[k];
    if (!parse_row(line, row)) {
      if (k == 0) continue;
      throw IoError(where(path, number) + ": expected numeric fields");
    }
    out.push_back(row);
  }
  return out;
}

std::vector<double> read_weights(const std::filesystem::path& path, std::size_t intervals) {
  const auto table = read_table(path);
  std::vector<double> w;
  for (const auto& row : table) {
    if (row.size() != 1) throw IoError("'" + path.string() + "': expected one weight per line");
    w.push_back(row[0]);
  }
  if (w.size() != intervals) {
    throw IoError("'" + path.string() + "': expected " + std::to_string(intervals) + " weights, got " +
                  std::to_string(w.size()));
  }
  return w;
}

CorrelationSpec read_correlation(const std::filesystem::path& path, std::size_t n) {
  const auto table = read_table(path);
  if (table.size() != 2 * n) {
    throw IoError("'" + path.string() + "': expected " + std::to_string(2 * n) + " rows (W then Ucorr), got " +
                  std::to_string(table.size()));
  }
  const auto size = static_cast<Eigen::Index>(n);
  CorrelationSpec corr{Eigen::MatrixXd(size, size), Eigen::MatrixXd(size, size)};
  for (std::size_t i = 0; i < 2 * n; ++i) {
    if (table[i].size() != n) {
      throw IoError("'" + path.string() + "': row " + std::to_string(i + 1) + " needs " + std::to_string(n) +
                    " columns");
    }
    auto& m = i < n ? corr.W : corr.Ucorr;
    for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i % n), static_cast<Eigen::Index>(j)) = table[i][j];
  }
  return corr;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  out.close();
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

}  // namespace vspline::cli
