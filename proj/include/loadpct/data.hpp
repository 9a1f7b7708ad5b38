#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loadpct/core.hpp"

namespace loadpct {

inline constexpr std::string_view kYearlyConsumptionName = "yearly_consumption";

struct WeatherDay {
  Date date;
  double tempC_min = 0.0;
  double tempC_max = 0.0;
  double tempC_avg = 0.0;
  double feels_like_avg = 0.0;
  double sun_hour = 0.0;
  double uv_index = 0.0;
  double humidity = 0.0;
  double wind_kmph = 0.0;

  /// Values in kWeatherAttributeNames order.
  std::array<double, 8> values() const;
};

/// Region-level weather, one row per date.
class WeatherTable {
 public:
  /// Throws Error on a duplicate date.
  void add(const WeatherDay& day);
  const WeatherDay* find(Date date) const;
  std::size_t size() const { return rows_.size(); }
  /// Rows in date order.
  std::vector<WeatherDay> rows() const;

 private:
  std::map<Date, WeatherDay> rows_;
};

WeatherTable read_weather_csv(std::istream& in);
WeatherTable read_weather_csv(const std::string& path);
void write_weather_csv(std::ostream& out, const WeatherTable& table);

using HolidaySet = std::set<Date>;

/// One ISO date per line; blank lines and '#' comments ignored.
HolidaySet read_holidays(std::istream& in);
HolidaySet read_holidays(const std::string& path);

/// day_of_week (Monday=0), day_of_month, day_of_year, month,
/// season (Dec-Feb=0, Mar-May=1, Jun-Aug=2, Sep-Nov=3), is_weekend, is_holiday.
std::array<double, 7> enrich_calendar(Date date, const HolidaySet& holidays);

/// Weather values for each record's date. Throws Error naming every date
/// missing from `weather`.
std::vector<std::array<double, 8>> join_weather(std::span<const DayRecord> records,
                                                const WeatherTable& weather);

enum class Encoding { numeric, ordinal, onehot };

struct AttributeEncoding {
  std::string name;
  Encoding encoding = Encoding::numeric;
  std::vector<std::string> levels;
};

/// JSON sidecar: {"attributes": [{"name": ..., "encoding": "numeric" |
/// "ordinal" | "onehot", "levels": [...]}, ...]}.
struct EncodingSchema {
  std::vector<AttributeEncoding> attributes;

  /// Output columns; one-hot attributes expand to `name=level`.
  std::vector<std::string> column_names() const;
};

EncodingSchema parse_encoding_json(std::string_view text);
EncodingSchema read_encoding_json(const std::string& path);

struct SurveyTable {
  std::vector<std::string> columns;  // excluding consumer_id
  std::vector<std::string> consumer_ids;
  std::vector<std::vector<std::string>> rows;
};

SurveyTable read_survey_csv(std::istream& in);
SurveyTable read_survey_csv(const std::string& path);

struct EncodedAttributes {
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> by_consumer;
};

/// Ordinal -> level index, one-hot -> indicator columns, numeric ->
/// parsed value. Unknown levels throw Error naming attribute and value.
EncodedAttributes encode_attributes(const SurveyTable& survey, const EncodingSchema& schema);

using MeterTable = std::map<std::string, std::vector<MeterReading>>;

/// `consumer_id,timestamp,kwh`; readings of each consumer sorted by instant.
MeterTable read_meter_csv(std::istream& in);
MeterTable read_meter_csv(const std::string& path);

struct IngestOptions {
  std::chrono::minutes sampling_period{30};
  /// Append yearly_consumption computed from the meter data when the
  /// survey does not provide it.
  bool derive_yearly_consumption = true;
};

struct IngestResult {
  Dataset dataset;
  std::map<std::string, std::size_t> dropped_days;
};

/// Segments meter data into days and attaches consumer, weather and
/// calendar attributes in that schema order. Rows come out sorted by
/// (consumer_id, date).
IngestResult assemble_dataset(const MeterTable& meter, const EncodedAttributes& consumers,
                              const WeatherTable& weather, const HolidaySet& holidays,
                              const IngestOptions& options);

struct SynthArchetype {
  std::string name;
  std::vector<double> shape;
};

/// Parameters of the synthetic load generator. Each consumer gets one
/// archetype, selected by the integer value of the driver attribute.
/// Daily series are
///   scale_c * (shape_a * (1 + weekend_coupling * is_weekend)
///              + weather_coupling * max(0, heating_reference_c - tempC_avg))
///   + noise * N(0, 1)
struct SynthSpec {
  std::size_t n_consumers = 200;
  int first_year = 2013;
  int years = 1;
  std::size_t series_length = 48;
  std::uint64_t seed = 1;
  std::string driver_attribute = "pv_flag";
  /// Empty means two built-in archetypes.
  std::vector<SynthArchetype> archetypes;
  double weather_coupling = 0.0;
  double heating_reference_c = 15.0;
  double weekend_coupling = 0.0;
  double noise = 0.0;
  /// Standard deviation of the log of the per-consumer scale factor.
  double consumer_scale_spread = 0.0;
  std::size_t n_distractors = 2;
  double weather_mean_c = 10.0;
  double weather_amplitude_c = 8.0;
  double weather_noise_c = 3.0;
  std::vector<Date> holidays;
};

SynthSpec parse_synth_spec(std::string_view json_text);
SynthSpec read_synth_spec(const std::string& path);
std::string synth_spec_to_json(const SynthSpec& spec);

/// Built-in archetype shapes of length `series_length`: an evening-peak
/// household and a household whose PV drives midday consumption negative.
std::vector<SynthArchetype> default_archetypes(std::size_t series_length);

struct SynthTruth {
  std::string driver_attribute;
  std::map<std::string, std::size_t> archetype_of;
  bool weather_coupled = false;
  bool calendar_coupled = false;
};

struct SynthResult {
  Dataset dataset;
  WeatherTable weather;
  HolidaySet holidays;
  SynthTruth truth;
  /// Comment lines naming the generator algorithm and seed.
  std::vector<std::string> header_comments;
};

/// Deterministic given the spec (including its seed).
SynthResult synth_dataset(const SynthSpec& spec);

std::string synth_truth_to_json(const SynthTruth& truth);

}  // namespace loadpct
