#include "distcause/csv.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "distcause/errors.hpp"

namespace distcause {

std::string format_double(double value) {
  char buf[40];
  // Shortest representation that parses back exactly.
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) return buf;
  }
  return buf;
}

double parse_double(const std::string& text, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw ValidationError("not a number in " + context + ": '" + text + "'");
  }
  if (!std::isfinite(v)) {
    throw ValidationError("non-finite value in " + context + ": '" + text + "'");
  }
  return v;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"' && cur.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) {
    throw ValidationError("unterminated quote on line " + std::to_string(line_no));
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  CsvTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      table.header = split_csv_line(line, line_no);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line, line_no);
    if (fields.size() != table.header.size()) {
      throw ValidationError("row " + std::to_string(line_no) + " in " + path + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw ValidationError("empty csv file: " + path);
  return table;
}

CsvWriter::CsvWriter(const std::string& path) : file_(std::fopen(path.c_str(), "w")) {
  if (!file_) throw ValidationError("cannot open file for writing: " + path);
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(file_);
}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string& f = fields[i];
    const bool needs_quote =
        f.find_first_of(",\"\n") != std::string::npos;
    if (needs_quote) {
      std::fputc('"', file_);
      for (char ch : f) {
        if (ch == '"') std::fputc('"', file_);
        std::fputc(ch, file_);
      }
      std::fputc('"', file_);
    } else {
      std::fputs(f.c_str(), file_);
    }
    std::fputc(i + 1 == fields.size() ? '\n' : ',', file_);
  }
}

}  // namespace distcause
