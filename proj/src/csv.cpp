#include "fleetrisk/csv.hpp"

namespace fleetrisk::csv {

bool Reader::next(std::vector<std::string>& fields) {
  fields.clear();
  unterminated_ = false;
  std::string line;
  // skip blank lines
  for (;;) {
    if (!std::getline(in_, line)) return false;
    ++physical_line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (physical_line_ == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (!line.empty()) break;
  }
  record_line_ = physical_line_;

  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  for (;;) {
    if (i >= line.size()) {
      if (quoted) {
        std::string more;
        if (!std::getline(in_, more)) {
          unterminated_ = true;
          fields.push_back(std::move(field));
          return true;
        }
        ++physical_line_;
        if (!more.empty() && more.back() == '\r') more.pop_back();
        field.push_back('\n');
        line = std::move(more);
        i = 0;
        continue;
      }
      fields.push_back(std::move(field));
      return true;
    }
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == delim_) {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
    ++i;
  }
}

std::string escape(std::string_view field, char delimiter) {
  const bool needs = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos ||
                     (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << delimiter;
    out << escape(fields[i], delimiter);
  }
  out << '\n';
}

}  // namespace fleetrisk::csv
