#include "loadpct/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "loadpct/csv.hpp"
#include "loadpct/rng.hpp"

namespace loadpct {

namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count, std::string_view what) {
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (i >= text.size() || text[i] < '0' || text[i] > '9') {
      throw ParseError("invalid " + std::string(what) + " '" + std::string(text) + "'");
    }
    value = value * 10 + (text[i] - '0');
  }
  return value;
}

std::string format_local_timestamp(const MeterReading& r) {
  using namespace std::chrono;
  const auto day = floor<days>(r.local_time);
  const hh_mm_ss tod{r.local_time - day};
  const auto offset = r.utc_offset.count();
  char buf[48];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d%c%02d:%02d",
                format_date(year_month_day{day}).c_str(), static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()),
                offset < 0 ? '-' : '+', static_cast<int>(std::abs(offset) / 60),
                static_cast<int>(std::abs(offset) % 60));
  return buf;
}

}  // namespace

Date parse_date(std::string_view text) {
  text = csv::trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw ParseError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  const int y = parse_digits(text, 0, 4, "date");
  const int m = parse_digits(text, 5, 2, "date");
  const int d = parse_digits(text, 8, 2, "date");
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
  return date;
}

std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::string_view to_string(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::consumer: return "consumer";
    case AttributeKind::weather: return "weather";
    case AttributeKind::calendar: return "calendar";
  }
  return "consumer";
}

AttributeKind attribute_kind_from_string(std::string_view text) {
  if (text == "consumer") return AttributeKind::consumer;
  if (text == "weather") return AttributeKind::weather;
  if (text == "calendar") return AttributeKind::calendar;
  throw ParseError("unknown attribute kind '" + std::string(text) + "'");
}

AttributeKind infer_attribute_kind(std::string_view name) {
  for (auto w : kWeatherAttributeNames)
    if (w == name) return AttributeKind::weather;
  for (auto c : kCalendarAttributeNames)
    if (c == name) return AttributeKind::calendar;
  return AttributeKind::consumer;
}

// ---------------------------------------------------------------------------
// Schema

Schema::Schema(std::vector<AttributeSpec> entries) : entries_(std::move(entries)) {
  std::set<std::string_view> seen;
  for (const auto& e : entries_) {
    if (e.name.empty()) throw SchemaError("attribute with empty name");
    if (!seen.insert(e.name).second) throw SchemaError("duplicate attribute name '" + e.name + "'");
  }
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  return std::nullopt;
}

std::uint64_t Schema::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : entries_) {
    h = csv::fnv1a(e.name, h);
    h = csv::fnv1a("\x1f", h);
    h = csv::fnv1a(to_string(e.kind), h);
    h = csv::fnv1a("\x1e", h);
  }
  return h;
}

std::string Schema::hash_hex() const { return csv::hex64(hash()); }

// ---------------------------------------------------------------------------
// SeriesMatrix

void SeriesMatrix::push_back(std::span<const double> values) {
  if (values.size() != width_) {
    throw SchemaError("row of length " + std::to_string(values.size()) + " does not match width " +
                      std::to_string(width_));
  }
  if (width_ == 0) {
    ++rows_zero_width_;
    return;
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

std::uint64_t SeriesMatrix::fingerprint() const {
  const double shape[2] = {static_cast<double>(rows()), static_cast<double>(width_)};
  return mix_seed(hash_values(shape), hash_values(data_));
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(Schema schema, std::size_t series_length)
    : schema_(std::move(schema)), attributes_(schema_.size()), series_(series_length) {}

void Dataset::add(std::string consumer_id, Date date, std::span<const double> attributes,
                  std::span<const double> series) {
  if (attributes.size() != schema_.size()) {
    throw SchemaError("instance of consumer '" + consumer_id + "' has " +
                      std::to_string(attributes.size()) + " attributes, schema declares " +
                      std::to_string(schema_.size()));
  }
  if (series.size() != series_.width()) {
    throw SchemaError("instance of consumer '" + consumer_id + "' has series length " +
                      std::to_string(series.size()) + ", dataset declares " +
                      std::to_string(series_.width()));
  }
  attributes_.push_back(attributes);
  series_.push_back(series);
  consumer_ids_.push_back(std::move(consumer_id));
  dates_.push_back(date);
}

DayInstance Dataset::instance(std::size_t i) const {
  const auto a = attributes(i);
  const auto s = series(i);
  return {consumer_ids_[i], dates_[i], {a.begin(), a.end()}, {s.begin(), s.end()}};
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out(schema_, series_length());
  out.attributes_.reserve(rows.size());
  out.series_.reserve(rows.size());
  for (std::size_t r : rows) out.add(consumer_ids_[r], dates_[r], attributes(r), series(r));
  return out;
}

std::vector<std::string> Dataset::consumers() const {
  std::vector<std::string> ids(consumer_ids_.begin(), consumer_ids_.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<std::size_t> Dataset::rows_of(std::span<const std::string> ids) const {
  const std::set<std::string_view> wanted(ids.begin(), ids.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < size(); ++i)
    if (wanted.count(consumer_ids_[i])) rows.push_back(i);
  return rows;
}

void Dataset::sort_canonical() {
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(consumer_ids_[a], dates_[a]) < std::tie(consumer_ids_[b], dates_[b]);
  });
  *this = subset(order);
}

// ---------------------------------------------------------------------------
// Validation

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) {
    if (v.instance) os << "instance " << *v.instance << ": ";
    os << v.message << '\n';
  }
  return os.str();
}

ValidationReport validate_dataset(const Dataset& dataset) {
  ValidationReport report;
  auto add = [&](std::optional<std::size_t> i, std::string msg) {
    report.violations.push_back({i, std::move(msg)});
  };
  if (dataset.empty()) add(std::nullopt, "dataset has no instances");
  if (dataset.series_length() == 0) add(std::nullopt, "series length T is zero");

  std::set<std::pair<std::string_view, Date>> keys;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const std::string label =
        "(" + dataset.consumer_id(i) + ", " + format_date(dataset.date(i)) + ")";
    const auto attrs = dataset.attributes(i);
    for (std::size_t a = 0; a < attrs.size(); ++a) {
      if (!std::isfinite(attrs[a])) {
        add(i, label + " attribute '" + dataset.schema()[a].name + "' (index " +
                   std::to_string(a) + ") is not finite");
      }
    }
    const auto series = dataset.series(i);
    for (std::size_t t = 0; t < series.size(); ++t) {
      if (!std::isfinite(series[t])) {
        add(i, label + " series value at index " + std::to_string(t) + " is not finite");
      }
    }
    if (!keys.emplace(dataset.consumer_id(i), dataset.date(i)).second) {
      add(i, label + " duplicates an earlier (consumer_id, date)");
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Day-instance CSV

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv::trim(line).empty() || line.front() == '#') continue;
    have_header = true;
    break;
  }
  if (!have_header) throw ParseError("day-instance file has no header");

  const auto header = csv::split_line(line);
  if (header.size() < 2 || header[0] != "consumer_id" || header[1] != "date") {
    throw ParseError("day-instance header must start with consumer_id,date");
  }
  std::size_t first_value = header.size();
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c] == "v_0") {
      first_value = c;
      break;
    }
  }
  std::vector<AttributeSpec> specs;
  for (std::size_t c = 2; c < first_value; ++c) {
    specs.push_back({header[c], infer_attribute_kind(header[c])});
  }
  const std::size_t T = header.size() - first_value;
  if (T == 0) throw ParseError("day-instance header has no series columns (v_0, v_1, ...)");
  for (std::size_t t = 0; t < T; ++t) {
    if (header[first_value + t] != "v_" + std::to_string(t)) {
      throw ParseError("expected column v_" + std::to_string(t) + ", found '" +
                       header[first_value + t] + "'");
    }
  }
  Dataset dataset(Schema(std::move(specs)), T);
  const std::size_t A = dataset.schema().size();
  std::vector<double> attrs(A), series(T);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split_line(line);
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    for (std::size_t a = 0; a < A; ++a) attrs[a] = csv::parse_number(fields[2 + a], where);
    for (std::size_t t = 0; t < T; ++t) series[t] = csv::parse_number(fields[first_value + t], where);
    dataset.add(fields[0], parse_date(fields[1]), attrs, series);
  }
  return dataset;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open day-instance file " + path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset,
                       std::span<const std::string> comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  std::string row = "consumer_id,date";
  for (const auto& e : dataset.schema()) (row += ',') += e.name;
  for (std::size_t t = 0; t < dataset.series_length(); ++t) (row += ",v_") += std::to_string(t);
  out << row << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const std::string id[1] = {dataset.consumer_id(i)};
    row = csv::join_line(id);
    (row += ',') += format_date(dataset.date(i));
    for (double v : dataset.attributes(i)) {
      row += ',';
      csv::append_number(row, v);
    }
    for (double v : dataset.series(i)) {
      row += ',';
      csv::append_number(row, v);
    }
    out << row << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Dataset& dataset,
                       std::span<const std::string> comments) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_dataset_csv(out, dataset, comments);
}

// ---------------------------------------------------------------------------
// Meter readings and day segmentation

MeterReading parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  text = csv::trim(text);
  if (text.size() < 16 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
    throw ParseError("invalid timestamp '" + std::string(text) + "'");
  }
  const Date date = parse_date(text.substr(0, 10));
  const int hh = parse_digits(text, 11, 2, "timestamp");
  const int mm = parse_digits(text, 14, 2, "timestamp");
  int ss = 0;
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    ss = parse_digits(text, pos + 1, 2, "timestamp");
    pos += 3;
  }
  if (hh > 23 || mm > 59 || ss > 59) throw ParseError("invalid time in '" + std::string(text) + "'");
  int offset_minutes = 0;
  if (pos < text.size()) {
    const char sign = text[pos];
    if (sign == 'Z' && pos + 1 == text.size()) {
      offset_minutes = 0;
    } else if (sign == '+' || sign == '-') {
      const auto rest = text.substr(pos + 1);
      int oh = 0, om = 0;
      if (rest.size() == 5 && rest[2] == ':') {
        oh = parse_digits(rest, 0, 2, "offset");
        om = parse_digits(rest, 3, 2, "offset");
      } else if (rest.size() == 4) {
        oh = parse_digits(rest, 0, 2, "offset");
        om = parse_digits(rest, 2, 2, "offset");
      } else if (rest.size() == 2) {
        oh = parse_digits(rest, 0, 2, "offset");
      } else {
        throw ParseError("invalid UTC offset in '" + std::string(text) + "'");
      }
      offset_minutes = (sign == '-' ? -1 : 1) * (oh * 60 + om);
    } else {
      throw ParseError("invalid timestamp suffix in '" + std::string(text) + "'");
    }
  }
  MeterReading r;
  r.local_time = sys_days{date} + hours{hh} + minutes{mm} + seconds{ss};
  r.utc_offset = minutes{offset_minutes};
  return r;
}

Segmentation segment_year_to_days(const std::string& consumer_id,
                                  std::span<const MeterReading> readings,
                                  std::chrono::minutes sampling_period) {
  using namespace std::chrono;
  if (sampling_period != minutes{15} && sampling_period != minutes{30}) {
    throw Error("sampling period must be 15 or 30 minutes, got " +
                std::to_string(sampling_period.count()));
  }
  const auto T = static_cast<std::size_t>(minutes{24 * 60} / sampling_period);

  for (std::size_t i = 1; i < readings.size(); ++i) {
    if (readings[i].instant() == readings[i - 1].instant()) {
      throw Error("consumer '" + consumer_id + "': duplicate timestamp " +
                  format_local_timestamp(readings[i]));
    }
    if (readings[i].instant() < readings[i - 1].instant()) {
      throw Error("consumer '" + consumer_id + "': readings not sorted at " +
                  format_local_timestamp(readings[i]));
    }
  }

  Segmentation out;
  std::size_t begin = 0;
  while (begin < readings.size()) {
    const auto day = floor<days>(readings[begin].local_time);
    std::size_t end = begin;
    while (end < readings.size() && floor<days>(readings[end].local_time) == day) ++end;

    const Date date{day};
    if (end - begin != T) {
      out.dropped_dates.push_back(date);
    } else {
      DayRecord record{consumer_id, date, std::vector<double>(T)};
      for (std::size_t k = 0; k < T; ++k) {
        const MeterReading& r = readings[begin + k];
        const bool on_grid = r.local_time == day + sampling_period * static_cast<int>(k);
        const bool regular =
            k == 0 || r.instant() - readings[begin + k - 1].instant() == sampling_period;
        if (!on_grid || !regular) {
          throw Error("consumer '" + consumer_id + "': non-uniform spacing on " +
                      format_date(date) + " at " + format_local_timestamp(r));
        }
        record.values[k] = r.kwh;
      }
      out.days.push_back(std::move(record));
    }
    begin = end;
  }
  return out;
}

}  // namespace loadpct
