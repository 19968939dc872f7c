#ifndef MIOCP_REPORT_IO_HPP
#define MIOCP_REPORT_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace miocp {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double x);

/// FNV-1a hash of a byte string, hex encoded; stamps outputs with the
/// configuration they came from.
std::string fnv1a_hex(const std::string& bytes);

/// Writes content verbatim (UTF-8, LF endings assumed in content).
void write_text_file(const std::string& path, const std::string& content);

std::string read_text_file(const std::string& path);

/// Minimal CSV emitter: mandatory header row, LF endings, a leading
/// version/config comment line.
class CsvWriter {
 public:
  CsvWriter(std::string version_stamp, std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);
  std::string str() const;

 private:
  std::string stamp_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace miocp

#endif
