#pragma once

#include "condconf/evaluation.hpp"

#include <string>
#include <vector>

namespace condconf::cli {

inline constexpr const char* kBinHeader = "bin_lo,bin_hi,nominal_mean,realized,count,stderr";
inline constexpr const char* kGroupHeader = "group,nominal_mean,realized,count,stderr";

/// Shortest text that reads back to the same double; "inf"/"-inf" for infinities.
std::string format_number(double v);

std::string bin_report_csv(const CoverageReport& report);
std::string group_report_csv(const CoverageReport& report);

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file. Throws IoError.
void write_file_atomic(const std::string& path, const std::string& contents);

class CsvBuilder {
 public:
  explicit CsvBuilder(std::vector<std::string> header);
  CsvBuilder& row(const std::vector<std::string>& cells);
  std::string str() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

}  // namespace condconf::cli
