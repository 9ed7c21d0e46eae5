#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fleetrisk {

enum class ErrorCode {
  Io,
  InvalidConfig,
  MissingColumn,
  Parse,
  EmptyDataset,
  NonPositiveSpan,
  EmptySpec,
  NotStandardized,
  SingleClassLabels,
  NonFiniteFeature,
  WidthMismatch,
  ColumnMismatch,
  DegeneratePanel,
  ZeroFalseMean,
  EmptyTestRange,
  LengthMismatch,
};

const char* to_string(ErrorCode code);

// Usage-class errors map to exit code 2 at the CLI boundary, everything
// else is a data error (exit code 1).
bool is_usage_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::int64_t days) : days_(days) {}

  static Date from_ymd(int year, unsigned month, unsigned day);

  /// Accepts YYYY-MM-DD and M/D/YYYY; an optional time suffix after a space
  /// or 'T' is ignored.
  static std::optional<Date> parse(std::string_view text);

  constexpr std::int64_t days() const { return days_; }
  int year() const;
  /// 0 = Monday ... 6 = Sunday.
  int weekday() const;
  Date monday() const { return Date(days_ - weekday()); }
  std::string iso() const;

  constexpr Date operator+(std::int64_t d) const { return Date(days_ + d); }
  constexpr std::int64_t operator-(Date other) const { return days_ - other.days_; }
  constexpr auto operator<=>(const Date&) const = default;

 private:
  std::int64_t days_ = 0;
};

/// Floor division, used for week arithmetic across negative day offsets.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Shortest round-trip decimal representation.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace fleetrisk
