#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace loadpct {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV, JSON, timestamps).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Attribute schema or series length disagreement between two artifacts.
class SchemaError : public Error {
 public:
  using Error::Error;
};

using Date = std::chrono::year_month_day;

/// Parses a strict ISO-8601 calendar date `YYYY-MM-DD`.
Date parse_date(std::string_view text);
std::string format_date(Date date);

enum class AttributeKind { consumer, weather, calendar };

std::string_view to_string(AttributeKind kind);
AttributeKind attribute_kind_from_string(std::string_view text);

/// Column names appended by weather and calendar enrichment, in schema order.
inline constexpr std::string_view kWeatherAttributeNames[] = {
    "tempC_min", "tempC_max", "tempC_avg", "feels_like_avg",
    "sun_hour",  "uv_index",  "humidity",  "wind_kmph"};
inline constexpr std::string_view kCalendarAttributeNames[] = {
    "day_of_week", "day_of_month", "day_of_year", "month",
    "season",      "is_weekend",   "is_holiday"};

/// Kind implied by a column name: the enrichment names map to weather and
/// calendar, everything else is a consumer attribute.
AttributeKind infer_attribute_kind(std::string_view name);

struct AttributeSpec {
  std::string name;
  AttributeKind kind = AttributeKind::consumer;

  bool operator==(const AttributeSpec&) const = default;
};

/// Ordered attribute schema. Names are unique.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<AttributeSpec> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const AttributeSpec& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  const std::vector<AttributeSpec>& entries() const { return entries_; }

  std::optional<std::size_t> index_of(std::string_view name) const;

  /// FNV-1a over names and kinds; stable across platforms.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<AttributeSpec> entries_;
};

/// Dense row-major matrix whose rows all share one width. Used for day
/// series (width T) and attribute vectors (width A).
class SeriesMatrix {
 public:
  SeriesMatrix() = default;
  explicit SeriesMatrix(std::size_t width) : width_(width) {}
  SeriesMatrix(std::size_t rows, std::size_t width)
      : width_(width), data_(rows * width, 0.0) {}

  std::size_t rows() const { return width_ == 0 ? rows_zero_width_ : data_.size() / width_; }
  std::size_t width() const { return width_; }
  bool empty() const { return rows() == 0; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * width_, width_};
  }
  std::span<double> row(std::size_t i) { return {data_.data() + i * width_, width_}; }

  void push_back(std::span<const double> values);
  void reserve(std::size_t rows) { data_.reserve(rows * width_); }
  const std::vector<double>& data() const { return data_; }

  /// Hash of the shape and every value's bit pattern.
  std::uint64_t fingerprint() const;

  bool operator==(const SeriesMatrix&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t rows_zero_width_ = 0;
  std::vector<double> data_;
};

struct DayInstance {
  std::string consumer_id;
  Date date;
  std::vector<double> attributes;
  std::vector<double> series;
};

/// Columnar container of day instances sharing one schema and one series
/// length T. Shape is enforced on insertion; value-level invariants are
/// checked by validate_dataset.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Schema schema, std::size_t series_length);

  void add(std::string consumer_id, Date date, std::span<const double> attributes,
           std::span<const double> series);
  void add(const DayInstance& instance) {
    add(instance.consumer_id, instance.date, instance.attributes, instance.series);
  }

  std::size_t size() const { return consumer_ids_.size(); }
  bool empty() const { return consumer_ids_.empty(); }
  const Schema& schema() const { return schema_; }
  std::size_t series_length() const { return series_.width(); }

  const std::string& consumer_id(std::size_t i) const { return consumer_ids_[i]; }
  Date date(std::size_t i) const { return dates_[i]; }
  std::span<const double> attributes(std::size_t i) const { return attributes_.row(i); }
  std::span<const double> series(std::size_t i) const { return series_.row(i); }
  DayInstance instance(std::size_t i) const;

  const SeriesMatrix& series_matrix() const { return series_; }
  const SeriesMatrix& attribute_matrix() const { return attributes_; }

  Dataset subset(std::span<const std::size_t> rows) const;
  /// Distinct consumer ids, sorted.
  std::vector<std::string> consumers() const;
  /// Rows whose consumer id is in `ids` (ids need not be sorted).
  std::vector<std::size_t> rows_of(std::span<const std::string> ids) const;
  /// Reorders rows by (consumer_id, date).
  void sort_canonical();

  bool operator==(const Dataset&) const = default;

 private:
  Schema schema_;
  std::vector<std::string> consumer_ids_;
  std::vector<Date> dates_;
  SeriesMatrix attributes_;
  SeriesMatrix series_;
};

struct Violation {
  std::optional<std::size_t> instance;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate_dataset(const Dataset& dataset);

/// Reads the canonical day-instance CSV. Lines starting with '#' before the
/// header are treated as comments. Attribute kinds are inferred from names.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const Dataset& dataset,
                       std::span<const std::string> comments = {});
void write_dataset_csv(const std::string& path, const Dataset& dataset,
                       std::span<const std::string> comments = {});

/// One meter reading. `local_time` is the wall-clock interval start as
/// written in the source file; `utc_offset` converts it to an instant.
struct MeterReading {
  std::chrono::sys_seconds local_time;
  std::chrono::minutes utc_offset{0};
  double kwh = 0.0;

  std::chrono::sys_seconds instant() const { return local_time - utc_offset; }
};

/// Parses `YYYY-MM-DDTHH:MM[:SS](Z|±HH:MM)`; a space may replace the 'T'.
MeterReading parse_timestamp(std::string_view text);

struct DayRecord {
  std::string consumer_id;
  Date date;
  std::vector<double> values;
};

struct Segmentation {
  std::vector<DayRecord> days;
  std::vector<Date> dropped_dates;

  std::size_t dropped_count() const { return dropped_dates.size(); }
};

/// Splits one consumer's sorted readings into local calendar days. Days
/// without exactly 24h/period readings are dropped; a kept day must sit on
/// the regular grid starting at 00:00.
Segmentation segment_year_to_days(const std::string& consumer_id,
                                  std::span<const MeterReading> readings,
                                  std::chrono::minutes sampling_period);

}  // namespace loadpct
