#include "miocp/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "miocp/errors.hpp"

namespace miocp {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), x);
  return std::string(buffer, result.ptr);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 1099511628211ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buffer);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << content;
  if (!out.good()) throw ValidationError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

CsvWriter::CsvWriter(std::string version_stamp, std::vector<std::string> header)
    : stamp_(std::move(version_stamp)), header_(std::move(header)) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size())
    throw ValidationError("CsvWriter: row width does not match the header");
  rows_.push_back(cells);
}

std::string CsvWriter::str() const {
  std::string out = "# " + stamp_ + "\n";
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out.push_back(',');
    out += header_[i];
  }
  out.push_back('\n');
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      out += row[i];
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace miocp
