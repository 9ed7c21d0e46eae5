#include "fleetrisk/common.hpp"

#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace fleetrisk {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonPositiveSpan: return "NonPositiveSpan";
    case ErrorCode::EmptySpec: return "EmptySpec";
    case ErrorCode::NotStandardized: return "NotStandardized";
    case ErrorCode::SingleClassLabels: return "SingleClassLabels";
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::ColumnMismatch: return "ColumnMismatch";
    case ErrorCode::DegeneratePanel: return "DegeneratePanel";
    case ErrorCode::ZeroFalseMean: return "ZeroFalseMean";
    case ErrorCode::EmptyTestRange: return "EmptyTestRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
  }
  return "UnknownError";
}

bool is_usage_error(ErrorCode code) {
  return code == ErrorCode::InvalidConfig || code == ErrorCode::EmptySpec;
}

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  const sys_days sd{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  return Date(sd.time_since_epoch().count());
}

namespace {

std::optional<int> digits(std::string_view s) {
  if (s.empty() || s.size() > 4) return std::nullopt;
  int v = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

std::optional<Date> checked(int y, int m, int d) {
  using namespace std::chrono;
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  const year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                           std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date(sys_days{ymd}.time_since_epoch().count());
}

}  // namespace

std::optional<Date> Date::parse(std::string_view text) {
  text = trim(text);
  if (auto cut = text.find_first_of(" T"); cut != std::string_view::npos) {
    text = text.substr(0, cut);
  }
  if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    auto y = digits(text.substr(0, 4));
    auto m = digits(text.substr(5, 2));
    auto d = digits(text.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    return checked(*y, *m, *d);
  }
  auto s1 = text.find('/');
  if (s1 == std::string_view::npos) return std::nullopt;
  auto s2 = text.find('/', s1 + 1);
  if (s2 == std::string_view::npos) return std::nullopt;
  auto m = digits(text.substr(0, s1));
  auto d = digits(text.substr(s1 + 1, s2 - s1 - 1));
  auto ys = text.substr(s2 + 1);
  if (ys.size() != 4) return std::nullopt;
  auto y = digits(ys);
  if (!y || !m || !d || s1 > 2 || s2 - s1 - 1 > 2) return std::nullopt;
  return checked(*y, *m, *d);
}

int Date::year() const {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{std::chrono::days{days_}}};
  return static_cast<int>(ymd.year());
}

int Date::weekday() const {
  // 1970-01-01 was a Thursday (index 3 with Monday = 0).
  return static_cast<int>(((days_ + 3) % 7 + 7) % 7);
}

std::string Date::iso() const {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{std::chrono::days{days_}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace fleetrisk
