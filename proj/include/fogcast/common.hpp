#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fogcast {

enum class ErrorCode {
  // ingest
  kMalformedReport,
  kMissingColumn,
  kRowError,
  kNonMonotonicTime,
  kEmptyGrid,
  kNoOverlap,
  // solar
  kOutOfRangeDay,
  kOutOfRangeLatitude,
  // features
  kSeriesTooShort,
  kEmptyDataset,
  kSchemaMismatch,
  kOverlappingRanges,
  // gbdt
  kDegenerateLabels,
  kInvalidHyperparams,
  kCorruptModelFile,
  kVersionMismatch,
  // explain
  kZeroCoverNode,
  kTooManyFeatures,
  // eval
  kSingleClass,
  kNoPositives,
  kUnachievableRecall,
  kEmptyTraining,
  // cli
  kInvalidSpec,
  kConfigError,
  kIoError,
  kInvariantViolation,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library is an Error carrying a code, so the
// CLI can map it to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInternal = 4;

int exit_code_for(ErrorCode code);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Time. All instants are UTC, second resolution.

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::int64_t kSecondsPerHour = 3600;

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0,
                         int minute = 0, int second = 0);

// Accepts "YYYY-MM-DD HH:MM[:SS]" and "YYYY-MM-DDTHH:MM[:SS][Z]".
// Throws Error(kRowError) on anything else.
Timestamp parse_timestamp(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp ts);

Timestamp floor_to_hour(Timestamp ts);
int day_of_year(Timestamp ts);  // 1..366
int utc_month(Timestamp ts);    // 1..12
int utc_hour(Timestamp ts);     // 0..23
int utc_year(Timestamp ts);
double utc_fractional_hours(Timestamp ts);  // 0 <= h < 24

// Half-open UTC interval [begin, end).
struct TimeRange {
  Timestamp begin;
  Timestamp end;

  bool contains(Timestamp ts) const { return ts >= begin && ts < end; }
  bool empty() const { return end <= begin; }
  bool overlaps(const TimeRange& other) const;

  // Inclusive calendar years: [first_year-01-01, (last_year+1)-01-01).
  static TimeRange years(int first_year, int last_year);
};

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles.

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void append_row(std::span<const double> values);
  void reserve_rows(std::size_t n) { data_.reserve(n * cols_); }

  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

}  // namespace fogcast
