#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace impact {

// 17 significant digits: doubles round-trip exactly
std::string format_double(double v);

// RFC-style quoting; '.' decimal separator comes from the C locale
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void header(std::span<const std::string> names);
  void row(std::span<const std::string> cells);

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

std::uint64_t fnv1a64(std::span<const char> bytes);

}  // namespace impact
