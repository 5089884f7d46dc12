#include "cli/reports.hpp"

#include "condconf/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace condconf::cli {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string bin_report_csv(const CoverageReport& report) {
  CsvBuilder csv({"bin_lo", "bin_hi", "nominal_mean", "realized", "count", "stderr"});
  for (const auto& r : report.rows) {
    csv.row({format_number(r.bin_lo), format_number(r.bin_hi), format_number(r.nominal_mean),
             format_number(r.realized), std::to_string(r.count), format_number(r.stderr_)});
  }
  return csv.str();
}

std::string group_report_csv(const CoverageReport& report) {
  CsvBuilder csv({"group", "nominal_mean", "realized", "count", "stderr"});
  for (const auto& r : report.rows) {
    csv.row({r.group, format_number(r.nominal_mean), format_number(r.realized), std::to_string(r.count),
             format_number(r.stderr_)});
  }
  return csv.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + target.parent_path().string() + "': " + ec.message());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into '" + path + "'");
  }
}

CsvBuilder::CsvBuilder(std::vector<std::string> header) : width_(header.size()) {
  row(header);
}

CsvBuilder& CsvBuilder::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw ValidationError("csv row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\n") != std::string::npos) {
      text_ += '"';
      for (char ch : c) {
        if (ch == '"') text_ += '"';
        text_ += ch;
      }
      text_ += '"';
    } else {
      text_ += c;
    }
  }
  text_ += '\n';
  return *this;
}

}  // namespace condconf::cli
