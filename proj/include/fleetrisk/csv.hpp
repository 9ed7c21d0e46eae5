#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fleetrisk::csv {

// Minimal RFC 4180 reader: quoted fields, doubled quotes, embedded
// delimiters and newlines, CRLF line endings.
class Reader {
 public:
  Reader(std::istream& in, char delimiter) : in_(in), delim_(delimiter) {}

  /// Reads the next record. Returns false at end of input. Blank lines are
  /// skipped. line() reports the physical line the record started on.
  bool next(std::vector<std::string>& fields);
  std::size_t line() const { return record_line_; }
  /// True when the last record ended inside an unterminated quote.
  bool unterminated() const { return unterminated_; }

 private:
  std::istream& in_;
  char delim_;
  std::size_t physical_line_ = 0;
  std::size_t record_line_ = 0;
  bool unterminated_ = false;
};

std::string escape(std::string_view field, char delimiter = ',');
void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace fleetrisk::csv
