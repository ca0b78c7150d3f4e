#include "csv.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace sysrisk {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  file_ = std::fopen(path.c_str(), "w");
  require(file_ != nullptr, ErrorKind::Io, "cannot open " + path.string() + " for writing");
  for (const auto& h : header) field(h);
  end_row();
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(file_);
}

CsvWriter& CsvWriter::field(double v) { return field(format_double(v)); }

CsvWriter& CsvWriter::field(unsigned long long v) { return field(std::to_string(v)); }

CsvWriter& CsvWriter::field(long long v) { return field(std::to_string(v)); }

CsvWriter& CsvWriter::field(const std::string& s) {
  if (!first_) std::fputc(',', file_);
  std::fputs(s.c_str(), file_);
  first_ = false;
  return *this;
}

void CsvWriter::end_row() {
  std::fputc('\n', file_);
  first_ = true;
  require(!std::ferror(file_), ErrorKind::Io, "write failed on " + path_.string());
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  fail(ErrorKind::Io, "missing column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io, path.string() + ": empty file");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      require(end != cell.c_str() && *end == '\0', ErrorKind::Io,
              path.string() + ": row " + std::to_string(row) + ": non-numeric cell '" + cell + "'");
      values.push_back(v);
    }
    require(values.size() == table.header.size(), ErrorKind::Io,
            path.string() + ": row " + std::to_string(row) + " has " + std::to_string(values.size()) +
                " cells, expected " + std::to_string(table.header.size()));
    table.rows.push_back(std::move(values));
  }
  return table;
}

}  // namespace sysrisk
