#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace sysrisk {

// Formats a double with 17 significant digits ("%.17g").
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& field(double v);
  CsvWriter& field(unsigned long long v);
  CsvWriter& field(long long v);
  CsvWriter& field(const std::string& s);
  void end_row();

 private:
  std::FILE* file_ = nullptr;
  std::filesystem::path path_;
  bool first_ = true;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;  // throws Io when absent
};

// Reads a numeric CSV with one header line; non-numeric cells raise an Io
// error naming the row.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace sysrisk
