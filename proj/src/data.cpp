#include "loadpct/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "loadpct/csv.hpp"
#include "loadpct/rng.hpp"

namespace loadpct {

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kWeatherStream = 0x77656174ULL;
constexpr std::uint64_t kConsumerStream = 0x636f6e73ULL;

std::ifstream open_input(const std::string& path, std::string_view what) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + std::string(what) + " " + path);
  return in;
}

std::string read_text(const std::string& path, std::string_view what) {
  auto in = open_input(path, what);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join_dates(const std::vector<Date>& dates) {
  std::string out;
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (i) out += ", ";
    out += format_date(dates[i]);
  }
  return out;
}

unsigned days_in_year(std::chrono::year y) { return y.is_leap() ? 366U : 365U; }

bool is_reserved_name(std::string_view name) {
  return infer_attribute_kind(name) != AttributeKind::consumer;
}

}  // namespace

// ---------------------------------------------------------------------------
// Weather

std::array<double, 8> WeatherDay::values() const {
  return {tempC_min, tempC_max, tempC_avg, feels_like_avg, sun_hour, uv_index, humidity, wind_kmph};
}

void WeatherTable::add(const WeatherDay& day) {
  if (!rows_.emplace(day.date, day).second) {
    throw Error("weather table has two rows for " + format_date(day.date));
  }
}

const WeatherDay* WeatherTable::find(Date date) const {
  const auto it = rows_.find(date);
  return it == rows_.end() ? nullptr : &it->second;
}

std::vector<WeatherDay> WeatherTable::rows() const {
  std::vector<WeatherDay> out;
  out.reserve(rows_.size());
  for (const auto& [date, day] : rows_) out.push_back(day);
  return out;
}

WeatherTable read_weather_csv(std::istream& in) {
  std::string line;
  if (!csv::next_line(in, line)) throw ParseError("weather file is empty");
  const auto header = csv::split_line(line);
  if (header.size() != 9 || header[0] != "date") {
    throw ParseError("weather header must be date followed by the 8 weather columns");
  }
  for (std::size_t i = 0; i < 8; ++i) {
    if (header[i + 1] != kWeatherAttributeNames[i]) {
      throw ParseError("weather column " + std::to_string(i + 1) + " must be '" +
                       std::string(kWeatherAttributeNames[i]) + "', found '" + header[i + 1] + "'");
    }
  }
  WeatherTable table;
  std::size_t line_no = 1;
  while (csv::next_line(in, line)) {
    ++line_no;
    const auto f = csv::split_line(line);
    const std::string where = "weather line " + std::to_string(line_no);
    if (f.size() != 9) throw ParseError(where + ": expected 9 fields");
    WeatherDay d;
    d.date = parse_date(f[0]);
    double* slots[8] = {&d.tempC_min, &d.tempC_max, &d.tempC_avg, &d.feels_like_avg,
                        &d.sun_hour,  &d.uv_index,  &d.humidity,  &d.wind_kmph};
    for (std::size_t i = 0; i < 8; ++i) *slots[i] = csv::parse_number(f[i + 1], where);
    table.add(d);
  }
  return table;
}

WeatherTable read_weather_csv(const std::string& path) {
  auto in = open_input(path, "weather file");
  return read_weather_csv(in);
}

void write_weather_csv(std::ostream& out, const WeatherTable& table) {
  std::string line = "date";
  for (auto name : kWeatherAttributeNames) (line += ',') += name;
  out << line << '\n';
  for (const auto& day : table.rows()) {
    line = format_date(day.date);
    for (double v : day.values()) {
      line += ',';
      csv::append_number(line, v);
    }
    out << line << '\n';
  }
}

HolidaySet read_holidays(std::istream& in) {
  HolidaySet set;
  std::string line;
  while (csv::next_line(in, line)) {
    const auto text = csv::trim(line);
    if (text.front() == '#') continue;
    set.insert(parse_date(text));
  }
  return set;
}

HolidaySet read_holidays(const std::string& path) {
  auto in = open_input(path, "holiday file");
  return read_holidays(in);
}

// ---------------------------------------------------------------------------
// Calendar and weather enrichment

std::array<double, 7> enrich_calendar(Date date, const HolidaySet& holidays) {
  using namespace std::chrono;
  const sys_days day{date};
  const unsigned dow = weekday{day}.iso_encoding() - 1;  // Monday = 0
  const auto doy = (day - sys_days{date.year() / January / 1}).count() + 1;
  const unsigned month = static_cast<unsigned>(date.month());
  const unsigned season = (month % 12) / 3;  // Dec-Feb 0, Mar-May 1, Jun-Aug 2, Sep-Nov 3
  return {static_cast<double>(dow),
          static_cast<double>(static_cast<unsigned>(date.day())),
          static_cast<double>(doy),
          static_cast<double>(month),
          static_cast<double>(season),
          dow >= 5 ? 1.0 : 0.0,
          holidays.count(date) ? 1.0 : 0.0};
}

std::vector<std::array<double, 8>> join_weather(std::span<const DayRecord> records,
                                                const WeatherTable& weather) {
  std::vector<std::array<double, 8>> out;
  out.reserve(records.size());
  std::set<Date> missing;
  for (const auto& r : records) {
    const WeatherDay* day = weather.find(r.date);
    if (!day) {
      missing.insert(r.date);
      out.push_back({});
      continue;
    }
    out.push_back(day->values());
  }
  if (!missing.empty()) {
    throw Error("weather table lacks " + std::to_string(missing.size()) +
                " date(s): " + join_dates({missing.begin(), missing.end()}));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Survey encoding

std::vector<std::string> EncodingSchema::column_names() const {
  std::vector<std::string> names;
  for (const auto& a : attributes) {
    if (a.encoding == Encoding::onehot) {
      for (const auto& level : a.levels) names.push_back(a.name + "=" + level);
    } else {
      names.push_back(a.name);
    }
  }
  return names;
}

EncodingSchema parse_encoding_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("encoding schema: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("attributes") || !doc["attributes"].is_array()) {
    throw ParseError("encoding schema must be an object with an 'attributes' array");
  }
  EncodingSchema schema;
  std::set<std::string> names;
  for (const auto& item : doc["attributes"]) {
    AttributeEncoding a;
    try {
      a.name = item.at("name").get<std::string>();
      const auto enc = item.value("encoding", std::string("numeric"));
      if (enc == "numeric") {
        a.encoding = Encoding::numeric;
      } else if (enc == "ordinal") {
        a.encoding = Encoding::ordinal;
      } else if (enc == "onehot") {
        a.encoding = Encoding::onehot;
      } else {
        throw ParseError("attribute '" + a.name + "': unknown encoding '" + enc + "'");
      }
      if (item.contains("levels")) a.levels = item.at("levels").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("encoding schema: ") + e.what());
    }
    if (a.encoding != Encoding::numeric && a.levels.empty()) {
      throw ParseError("attribute '" + a.name + "' needs a nonempty 'levels' list");
    }
    if (std::set<std::string>(a.levels.begin(), a.levels.end()).size() != a.levels.size()) {
      throw ParseError("attribute '" + a.name + "' repeats a level");
    }
    if (!names.insert(a.name).second) throw ParseError("attribute '" + a.name + "' declared twice");
    schema.attributes.push_back(std::move(a));
  }
  return schema;
}

EncodingSchema read_encoding_json(const std::string& path) {
  return parse_encoding_json(read_text(path, "encoding schema"));
}

SurveyTable read_survey_csv(std::istream& in) {
  std::string line;
  if (!csv::next_line(in, line)) throw ParseError("survey file is empty");
  auto header = csv::split_line(line);
  if (header.empty() || header[0] != "consumer_id") {
    throw ParseError("survey header must start with consumer_id");
  }
  SurveyTable table;
  table.columns.assign(header.begin() + 1, header.end());
  std::size_t line_no = 1;
  while (csv::next_line(in, line)) {
    ++line_no;
    auto f = csv::split_line(line);
    if (f.size() != header.size()) {
      throw ParseError("survey line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields");
    }
    table.consumer_ids.push_back(f[0]);
    table.rows.emplace_back(f.begin() + 1, f.end());
  }
  return table;
}

SurveyTable read_survey_csv(const std::string& path) {
  auto in = open_input(path, "survey file");
  return read_survey_csv(in);
}

EncodedAttributes encode_attributes(const SurveyTable& survey, const EncodingSchema& schema) {
  EncodedAttributes out;
  out.names = schema.column_names();
  std::vector<std::size_t> column(schema.attributes.size());
  for (std::size_t a = 0; a < schema.attributes.size(); ++a) {
    const auto& name = schema.attributes[a].name;
    const auto it = std::find(survey.columns.begin(), survey.columns.end(), name);
    if (it == survey.columns.end()) throw Error("survey has no column '" + name + "'");
    column[a] = static_cast<std::size_t>(it - survey.columns.begin());
  }
  for (std::size_t r = 0; r < survey.rows.size(); ++r) {
    const auto& id = survey.consumer_ids[r];
    std::vector<double> values;
    values.reserve(out.names.size());
    for (std::size_t a = 0; a < schema.attributes.size(); ++a) {
      const auto& enc = schema.attributes[a];
      const std::string raw(csv::trim(survey.rows[r][column[a]]));
      if (enc.encoding == Encoding::numeric) {
        try {
          values.push_back(csv::parse_number(raw, "attribute '" + enc.name + "'"));
        } catch (const ParseError&) {
          throw Error("consumer '" + id + "', attribute '" + enc.name + "': value '" + raw +
                      "' is not numeric and no level is declared for it");
        }
        continue;
      }
      const auto level = std::find(enc.levels.begin(), enc.levels.end(), raw);
      if (level == enc.levels.end()) {
        throw Error("consumer '" + id + "', attribute '" + enc.name + "': unknown level '" + raw +
                    "'");
      }
      const auto index = static_cast<std::size_t>(level - enc.levels.begin());
      if (enc.encoding == Encoding::ordinal) {
        values.push_back(static_cast<double>(index));
      } else {
        for (std::size_t l = 0; l < enc.levels.size(); ++l) values.push_back(l == index ? 1.0 : 0.0);
      }
    }
    if (!out.by_consumer.emplace(id, std::move(values)).second) {
      throw Error("survey lists consumer '" + id + "' twice");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Meter data and assembly

MeterTable read_meter_csv(std::istream& in) {
  std::string line;
  if (!csv::next_line(in, line)) throw ParseError("meter file is empty");
  const auto header = csv::split_line(line);
  if (header.size() != 3 || header[0] != "consumer_id" || header[1] != "timestamp" ||
      header[2] != "kwh") {
    throw ParseError("meter header must be consumer_id,timestamp,kwh");
  }
  MeterTable table;
  std::size_t line_no = 1;
  while (csv::next_line(in, line)) {
    ++line_no;
    const auto f = csv::split_line(line);
    const std::string where = "meter line " + std::to_string(line_no);
    if (f.size() != 3) throw ParseError(where + ": expected 3 fields");
    MeterReading r = parse_timestamp(f[1]);
    r.kwh = csv::parse_number(f[2], where);
    table[f[0]].push_back(r);
  }
  for (auto& [id, readings] : table) {
    std::stable_sort(readings.begin(), readings.end(),
                     [](const MeterReading& a, const MeterReading& b) {
                       return a.instant() < b.instant();
                     });
  }
  return table;
}

MeterTable read_meter_csv(const std::string& path) {
  auto in = open_input(path, "meter file");
  return read_meter_csv(in);
}

IngestResult assemble_dataset(const MeterTable& meter, const EncodedAttributes& consumers,
                              const WeatherTable& weather, const HolidaySet& holidays,
                              const IngestOptions& options) {
  using namespace std::chrono;
  const auto period = options.sampling_period;
  if (period != minutes{15} && period != minutes{30}) {
    throw Error("sampling period must be 15 or 30 minutes");
  }
  const auto T = static_cast<std::size_t>(minutes{24 * 60} / period);

  std::vector<AttributeSpec> specs;
  for (const auto& name : consumers.names) {
    if (is_reserved_name(name)) {
      throw SchemaError("consumer attribute '" + name + "' collides with an enrichment column");
    }
    specs.push_back({name, AttributeKind::consumer});
  }
  const bool derive_yearly =
      options.derive_yearly_consumption &&
      std::find(consumers.names.begin(), consumers.names.end(), kYearlyConsumptionName) ==
          consumers.names.end();
  if (derive_yearly) specs.push_back({std::string(kYearlyConsumptionName), AttributeKind::consumer});
  for (auto name : kWeatherAttributeNames) specs.push_back({std::string(name), AttributeKind::weather});
  for (auto name : kCalendarAttributeNames) specs.push_back({std::string(name), AttributeKind::calendar});

  IngestResult result{Dataset(Schema(specs), T), {}};
  const bool need_survey = !consumers.names.empty();
  std::vector<std::string> missing_survey;
  for (const auto& [id, readings] : meter) {
    if (need_survey && !consumers.by_consumer.count(id)) missing_survey.push_back(id);
  }
  if (!missing_survey.empty()) {
    std::string list;
    for (const auto& id : missing_survey) list += (list.empty() ? "" : ", ") + id;
    throw Error("consumers without survey attributes: " + list);
  }

  std::vector<double> attrs(specs.size());
  for (const auto& [id, readings] : meter) {
    const Segmentation seg = segment_year_to_days(id, readings, period);
    result.dropped_days[id] = seg.dropped_count();
    const auto weather_rows = join_weather(seg.days, weather);

    std::map<int, std::pair<double, unsigned>> yearly;  // year -> (kWh, kept days)
    for (const auto& day : seg.days) {
      auto& acc = yearly[static_cast<int>(day.date.year())];
      for (double v : day.values) acc.first += v;
      acc.second += 1;
    }
    const auto* survey = need_survey ? &consumers.by_consumer.at(id) : nullptr;
    for (std::size_t d = 0; d < seg.days.size(); ++d) {
      const auto& day = seg.days[d];
      std::size_t k = 0;
      if (survey)
        for (double v : *survey) attrs[k++] = v;
      if (derive_yearly) {
        const auto& [kwh, kept] = yearly[static_cast<int>(day.date.year())];
        attrs[k++] = kwh * days_in_year(day.date.year()) / kept;
      }
      for (double v : weather_rows[d]) attrs[k++] = v;
      for (double v : enrich_calendar(day.date, holidays)) attrs[k++] = v;
      result.dataset.add(id, day.date, attrs, day.values);
    }
  }
  result.dataset.sort_canonical();
  return result;
}

// ---------------------------------------------------------------------------
// Synthetic data

std::vector<SynthArchetype> default_archetypes(std::size_t series_length) {
  const double T = static_cast<double>(series_length);
  const double per_interval = 48.0 / T;
  auto bump = [](double h, double centre, double width) {
    const double z = (h - centre) / width;
    return std::exp(-z * z);
  };
  SynthArchetype evening{"evening_peak", std::vector<double>(series_length)};
  SynthArchetype pv{"pv_midday", std::vector<double>(series_length)};
  for (std::size_t t = 0; t < series_length; ++t) {
    const double h = (static_cast<double>(t) + 0.5) * 24.0 / T;
    evening.shape[t] =
        per_interval * (0.15 + 0.25 * bump(h, 8.0, 1.5) + 0.6 * bump(h, 19.0, 2.0));
    pv.shape[t] = per_interval * (0.2 + 0.3 * bump(h, 7.5, 1.5) + 0.5 * bump(h, 20.0, 2.0) -
                                  0.5 * bump(h, 13.0, 3.0));
  }
  return {evening, pv};
}

SynthSpec parse_synth_spec(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("synthetic spec: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("synthetic spec must be a JSON object");
  static const std::set<std::string> known = {
      "n_consumers",    "first_year",        "years",         "T",
      "seed",           "driver_attribute",  "archetypes",    "weather_coupling",
      "heating_reference_c", "weekend_coupling", "noise",     "consumer_scale_spread",
      "n_distractors",  "weather_mean_c",    "weather_amplitude_c", "weather_noise_c",
      "holidays"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ParseError("synthetic spec: unknown key '" + key + "'");
  }
  SynthSpec s;
  try {
    s.n_consumers = doc.value("n_consumers", s.n_consumers);
    s.first_year = doc.value("first_year", s.first_year);
    s.years = doc.value("years", s.years);
    s.series_length = doc.value("T", s.series_length);
    s.seed = doc.value("seed", s.seed);
    s.driver_attribute = doc.value("driver_attribute", s.driver_attribute);
    s.weather_coupling = doc.value("weather_coupling", s.weather_coupling);
    s.heating_reference_c = doc.value("heating_reference_c", s.heating_reference_c);
    s.weekend_coupling = doc.value("weekend_coupling", s.weekend_coupling);
    s.noise = doc.value("noise", s.noise);
    s.consumer_scale_spread = doc.value("consumer_scale_spread", s.consumer_scale_spread);
    s.n_distractors = doc.value("n_distractors", s.n_distractors);
    s.weather_mean_c = doc.value("weather_mean_c", s.weather_mean_c);
    s.weather_amplitude_c = doc.value("weather_amplitude_c", s.weather_amplitude_c);
    s.weather_noise_c = doc.value("weather_noise_c", s.weather_noise_c);
    if (doc.contains("archetypes")) {
      for (const auto& a : doc["archetypes"]) {
        s.archetypes.push_back(
            {a.value("name", std::string("archetype_") + std::to_string(s.archetypes.size())),
             a.at("shape").get<std::vector<double>>()});
      }
    }
    if (doc.contains("holidays")) {
      for (const auto& h : doc["holidays"]) s.holidays.push_back(parse_date(h.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("synthetic spec: ") + e.what());
  }
  return s;
}

SynthSpec read_synth_spec(const std::string& path) {
  return parse_synth_spec(read_text(path, "synthetic spec"));
}

std::string synth_spec_to_json(const SynthSpec& s) {
  json doc;
  doc["n_consumers"] = s.n_consumers;
  doc["first_year"] = s.first_year;
  doc["years"] = s.years;
  doc["T"] = s.series_length;
  doc["seed"] = s.seed;
  doc["driver_attribute"] = s.driver_attribute;
  doc["archetypes"] = json::array();
  for (const auto& a : s.archetypes) doc["archetypes"].push_back({{"name", a.name}, {"shape", a.shape}});
  doc["weather_coupling"] = s.weather_coupling;
  doc["heating_reference_c"] = s.heating_reference_c;
  doc["weekend_coupling"] = s.weekend_coupling;
  doc["noise"] = s.noise;
  doc["consumer_scale_spread"] = s.consumer_scale_spread;
  doc["n_distractors"] = s.n_distractors;
  doc["weather_mean_c"] = s.weather_mean_c;
  doc["weather_amplitude_c"] = s.weather_amplitude_c;
  doc["weather_noise_c"] = s.weather_noise_c;
  doc["holidays"] = json::array();
  for (auto d : s.holidays) doc["holidays"].push_back(format_date(d));
  return doc.dump(2) + "\n";
}

SynthResult synth_dataset(const SynthSpec& spec) {
  using namespace std::chrono;
  if (spec.n_consumers == 0) throw Error("synthetic spec needs at least one consumer");
  if (spec.years < 1) throw Error("synthetic spec needs at least one year");
  if (spec.series_length == 0) throw Error("synthetic spec needs T >= 1");
  if (spec.driver_attribute.empty() || is_reserved_name(spec.driver_attribute)) {
    throw Error("invalid driver attribute name '" + spec.driver_attribute + "'");
  }
  const auto archetypes =
      spec.archetypes.empty() ? default_archetypes(spec.series_length) : spec.archetypes;
  for (const auto& a : archetypes) {
    if (a.shape.size() != spec.series_length) {
      throw Error("archetype '" + a.name + "' has " + std::to_string(a.shape.size()) +
                  " values, expected T=" + std::to_string(spec.series_length));
    }
  }

  SynthResult out;
  out.holidays = HolidaySet(spec.holidays.begin(), spec.holidays.end());
  out.truth.driver_attribute = spec.driver_attribute;
  out.truth.weather_coupled = spec.weather_coupling != 0.0;
  out.truth.calendar_coupled = spec.weekend_coupling != 0.0;
  out.header_comments = {
      "generator=loadpct-synth/1 rng=" + std::string(Rng::kAlgorithm) +
      " seed=" + std::to_string(spec.seed)};

  // Region-level weather for every date of the simulated years.
  const sys_days first{year{spec.first_year} / January / 1};
  const sys_days last{year{spec.first_year + spec.years} / January / 1};
  {
    Rng rng(mix_seed(spec.seed, kWeatherStream));
    for (sys_days d = first; d < last; d += days{1}) {
      const Date date{d};
      const double doy =
          static_cast<double>((d - sys_days{date.year() / January / 1}).count() + 1);
      const double season = std::cos(2.0 * std::numbers::pi * (doy - 200.0) / 365.25);
      WeatherDay w;
      w.date = date;
      w.tempC_avg = spec.weather_mean_c + spec.weather_amplitude_c * season +
                    spec.weather_noise_c * rng.normal();
      w.tempC_min = w.tempC_avg - (2.0 + 3.0 * rng.uniform01());
      w.tempC_max = w.tempC_avg + (2.0 + 3.0 * rng.uniform01());
      w.wind_kmph = 5.0 + 20.0 * rng.uniform01();
      w.feels_like_avg = w.tempC_avg - 0.15 * w.wind_kmph + 0.5 * rng.normal();
      w.sun_hour = std::clamp(5.0 + 3.5 * season + 2.0 * rng.normal(), 0.0, 15.0);
      w.uv_index = std::round(std::clamp(1.0 + 0.5 * w.sun_hour, 1.0, 8.0));
      w.humidity = std::clamp(80.0 - 1.5 * (w.tempC_avg - 10.0) + 6.0 * rng.normal(), 20.0, 100.0);
      out.weather.add(w);
    }
  }

  std::vector<AttributeSpec> specs{{spec.driver_attribute, AttributeKind::consumer}};
  for (std::size_t k = 0; k < spec.n_distractors; ++k) {
    specs.push_back({"distractor_" + std::to_string(k), AttributeKind::consumer});
  }
  for (auto name : kWeatherAttributeNames) specs.push_back({std::string(name), AttributeKind::weather});
  for (auto name : kCalendarAttributeNames) specs.push_back({std::string(name), AttributeKind::calendar});
  out.dataset = Dataset(Schema(specs), spec.series_length);

  const std::size_t width = std::to_string(spec.n_consumers - 1).size();
  std::vector<double> attrs(specs.size());
  std::vector<double> series(spec.series_length);
  for (std::size_t c = 0; c < spec.n_consumers; ++c) {
    std::string id = std::to_string(c);
    id = "C" + std::string(width - id.size(), '0') + id;
    Rng rng(mix_seed(mix_seed(spec.seed, kConsumerStream), c));
    const std::size_t archetype = rng.uniform_index(archetypes.size());
    const double scale = std::exp(spec.consumer_scale_spread * rng.normal());
    std::vector<double> distractors(spec.n_distractors);
    for (double& v : distractors) v = std::round(100.0 * rng.uniform01()) / 10.0;
    out.truth.archetype_of[id] = archetype;

    const auto& shape = archetypes[archetype].shape;
    for (sys_days d = first; d < last; d += days{1}) {
      const Date date{d};
      const WeatherDay& w = *out.weather.find(date);
      const auto calendar = enrich_calendar(date, out.holidays);
      const double weekend = calendar[5];
      const double heating = std::max(0.0, spec.heating_reference_c - w.tempC_avg) *
                             (48.0 / static_cast<double>(spec.series_length));
      for (std::size_t t = 0; t < spec.series_length; ++t) {
        series[t] = scale * (shape[t] * (1.0 + spec.weekend_coupling * weekend) +
                             spec.weather_coupling * heating) +
                    spec.noise * rng.normal();
      }
      std::size_t k = 0;
      attrs[k++] = static_cast<double>(archetype);
      for (double v : distractors) attrs[k++] = v;
      for (double v : w.values()) attrs[k++] = v;
      for (double v : calendar) attrs[k++] = v;
      out.dataset.add(id, date, attrs, series);
    }
  }
  return out;
}

std::string synth_truth_to_json(const SynthTruth& truth) {
  json doc;
  doc["driver_attribute"] = truth.driver_attribute;
  doc["weather_coupled"] = truth.weather_coupled;
  doc["calendar_coupled"] = truth.calendar_coupled;
  doc["archetype_of"] = json::object();
  for (const auto& [id, a] : truth.archetype_of) doc["archetype_of"][id] = a;
  return doc.dump(2) + "\n";
}

}  // namespace loadpct
