#include "fogcast/common.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace fogcast {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedReport: return "MalformedReport";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kRowError: return "RowError";
    case ErrorCode::kNonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::kEmptyGrid: return "EmptyGrid";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kOutOfRangeDay: return "OutOfRangeDay";
    case ErrorCode::kOutOfRangeLatitude: return "OutOfRangeLatitude";
    case ErrorCode::kSeriesTooShort: return "SeriesTooShort";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kOverlappingRanges: return "OverlappingRanges";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kInvalidHyperparams: return "InvalidHyperparams";
    case ErrorCode::kCorruptModelFile: return "CorruptModelFile";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kZeroCoverNode: return "ZeroCoverNode";
    case ErrorCode::kTooManyFeatures: return "TooManyFeatures";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kUnachievableRecall: return "UnachievableRecall";
    case ErrorCode::kEmptyTraining: return "EmptyTraining";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidSpec:
    case ErrorCode::kInvalidHyperparams:
    case ErrorCode::kOverlappingRanges:
      return kExitConfig;
    case ErrorCode::kInvariantViolation:
    case ErrorCode::kZeroCoverNode:
      return kExitInternal;
    default:
      return kExitData;
  }
}

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute,
                         int second) {
  using namespace std::chrono;
  const sys_days date{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  return Timestamp{date} + hours{hour} + minutes{minute} + seconds{second};
}

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const char* last = first + len;
  for (const char* p = first; p != last; ++p) {
    if (*p < '0' || *p > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  const bool shape_ok = (text.size() == 16 || text.size() == 19) && text[4] == '-' &&
                        text[7] == '-' && (text[10] == ' ' || text[10] == 'T') &&
                        text[13] == ':' && (text.size() == 16 || text[16] == ':');
  if (!shape_ok || !read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) ||
      !read_int(text, 8, 2, d) || !read_int(text, 11, 2, h) || !read_int(text, 14, 2, mi) ||
      (text.size() == 19 && !read_int(text, 17, 2, s))) {
    throw Error(ErrorCode::kRowError, "unparseable timestamp '" + std::string(text) + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(mo)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw Error(ErrorCode::kRowError, "timestamp out of range '" + std::string(text) + "'");
  }
  return make_timestamp(y, unsigned(mo), unsigned(d), h, mi, s);
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const hh_mm_ss hms{ts - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), int(hms.hours().count()),
                int(hms.minutes().count()), int(hms.seconds().count()));
  return buf;
}

Timestamp floor_to_hour(Timestamp ts) {
  return std::chrono::floor<std::chrono::hours>(ts);
}

int day_of_year(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const sys_days jan1{ymd.year() / January / 1};
  return int((day - jan1).count()) + 1;
}

int utc_month(Timestamp ts) {
  const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(ts)};
  return int(unsigned(ymd.month()));
}

int utc_year(Timestamp ts) {
  const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(ts)};
  return int(ymd.year());
}

int utc_hour(Timestamp ts) {
  const auto since_midnight = ts - std::chrono::floor<std::chrono::days>(ts);
  return int(std::chrono::duration_cast<std::chrono::hours>(since_midnight).count());
}

double utc_fractional_hours(Timestamp ts) {
  const auto since_midnight = ts - std::chrono::floor<std::chrono::days>(ts);
  return double(since_midnight.count()) / double(kSecondsPerHour);
}

bool TimeRange::overlaps(const TimeRange& other) const {
  if (empty() || other.empty()) return false;
  return std::max(begin, other.begin) < std::min(end, other.end);
}

TimeRange TimeRange::years(int first_year, int last_year) {
  return {make_timestamp(first_year, 1, 1), make_timestamp(last_year + 1, 1, 1)};
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw Error(ErrorCode::kSchemaMismatch, "row width " + std::to_string(values.size()) +
                                                " != matrix width " + std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

}  // namespace fogcast
