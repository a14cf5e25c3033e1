#ifndef DISTCAUSE_CSV_HPP
#define DISTCAUSE_CSV_HPP

#include <cstdio>
#include <string>
#include <vector>

namespace distcause {

// Shortest exact decimal form that round-trips the double.
std::string format_double(double value);

double parse_double(const std::string& text, const std::string& context);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

// Strict reader: header row required, every row must match its width.
// Handles double-quoted fields with "" escapes.
CsvTable read_csv(const std::string& path);

// Line-buffered writer emitting LF endings; fields containing separators or
// quotes are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void write_row(const std::vector<std::string>& fields);

 private:
  std::FILE* file_;
};

}  // namespace distcause

#endif  // DISTCAUSE_CSV_HPP
