#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "loadpct/core.hpp"
#include "loadpct/csv.hpp"
#include "test_util.hpp"

using namespace loadpct;
using namespace std::chrono;

namespace {

std::vector<MeterReading> year_of_readings(int y, minutes period) {
  std::vector<MeterReading> readings;
  const sys_days first{year{y} / January / 1};
  const sys_days last{year{y + 1} / January / 1};
  for (sys_seconds t = first; t < sys_seconds(last); t += period) {
    readings.push_back({t, minutes{0}, 0.25});
  }
  return readings;
}

Dataset small_dataset() {
  Dataset d(testutil::consumer_schema(2), 3);
  for (int i = 0; i < 10; ++i) {
    const double attrs[] = {static_cast<double>(i), 0.5 * i};
    const double series[] = {1.0 * i, -0.1 * i, 1e-300};
    d.add("c" + std::to_string(i % 3), Date{sys_days{year{2013} / March / 1} + days{i}}, attrs,
          series);
  }
  return d;
}

}  // namespace

TEST_CASE("dates parse strictly and print ISO") {
  CHECK(format_date(parse_date("2012-02-29")) == "2012-02-29");
  CHECK_THROWS_AS(parse_date("2013-02-29"), ParseError);
  CHECK_THROWS_AS(parse_date("2013-1-01"), ParseError);
  CHECK_THROWS_AS(parse_date("20130101"), ParseError);
}

TEST_CASE("timestamps carry their offset") {
  const auto r = parse_timestamp("2013-03-31T02:30:00+02:00");
  CHECK(format_date(Date{floor<days>(r.local_time)}) == "2013-03-31");
  CHECK(r.utc_offset == minutes{120});
  CHECK(r.instant() == r.local_time - hours{2});
  CHECK(parse_timestamp("2013-01-01 00:30Z").local_time ==
        sys_days{year{2013} / January / 1} + minutes{30});
  CHECK_THROWS_AS(parse_timestamp("2013-01-01T25:00Z"), ParseError);
}

TEST_CASE("schema names are unique and hashed stably") {
  CHECK_THROWS_AS(Schema({{"a", AttributeKind::consumer}, {"a", AttributeKind::weather}}), Error);
  const Schema s({{"a", AttributeKind::consumer}, {"tempC_avg", AttributeKind::weather}});
  const Schema t({{"a", AttributeKind::consumer}, {"tempC_avg", AttributeKind::calendar}});
  CHECK(s.hash() != t.hash());
  CHECK(s.index_of("tempC_avg") == 1);
  CHECK_FALSE(s.index_of("b").has_value());
  CHECK(infer_attribute_kind("season") == AttributeKind::calendar);
  CHECK(infer_attribute_kind("humidity") == AttributeKind::weather);
  CHECK(infer_attribute_kind("n_residents") == AttributeKind::consumer);
}

TEST_CASE("dataset shape is enforced on insertion") {
  Dataset d(testutil::consumer_schema(2), 3);
  const double attrs[] = {1.0, 2.0};
  const double bad_attrs[] = {1.0};
  const double series[] = {1.0, 2.0, 3.0};
  const double bad_series[] = {1.0, 2.0};
  CHECK_THROWS_AS(d.add("x", parse_date("2013-01-01"), bad_attrs, series), SchemaError);
  CHECK_THROWS_AS(d.add("x", parse_date("2013-01-01"), attrs, bad_series), SchemaError);
  d.add("x", parse_date("2013-01-01"), attrs, series);
  CHECK(d.size() == 1);
}

TEST_CASE("validation") {
  SUBCASE("valid dataset gives an empty report") {
    CHECK(validate_dataset(small_dataset()).ok());
  }
  SUBCASE("NaN reading is reported with instance and index") {
    Dataset d(testutil::consumer_schema(1), 2);
    const double a[] = {0.0};
    const double ok[] = {1.0, 2.0};
    const double nan[] = {1.0, std::numeric_limits<double>::quiet_NaN()};
    d.add("x", parse_date("2013-01-01"), a, ok);
    d.add("x", parse_date("2013-01-02"), a, nan);
    const auto report = validate_dataset(d);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].instance == 1);
    CHECK(report.violations[0].message.find("index 1") != std::string::npos);
  }
  SUBCASE("duplicate consumer and date") {
    Dataset d(testutil::consumer_schema(1), 1);
    const double a[] = {0.0};
    const double v[] = {1.0};
    d.add("x", parse_date("2013-01-01"), a, v);
    d.add("x", parse_date("2013-01-01"), a, v);
    const auto report = validate_dataset(d);
    REQUIRE_FALSE(report.ok());
    CHECK(report.to_string().find("duplicate") != std::string::npos);
  }
  SUBCASE("empty dataset") {
    CHECK_FALSE(validate_dataset(Dataset(testutil::consumer_schema(1), 4)).ok());
  }
}

TEST_CASE("dataset CSV round trip is exact") {
  const Dataset d = small_dataset();
  std::stringstream ss;
  const std::string comments[] = {"generated for a test"};
  write_dataset_csv(ss, d, comments);
  const std::string first = ss.str();
  CHECK(first.rfind("# generated for a test\n", 0) == 0);
  const Dataset back = read_dataset_csv(ss);
  CHECK(back == d);
  std::stringstream again;
  write_dataset_csv(again, back, comments);
  CHECK(again.str() == first);
}

TEST_CASE("dataset CSV errors name the problem") {
  std::istringstream missing_v("consumer_id,date,a\nx,2013-01-01,1\n");
  CHECK_THROWS_AS(read_dataset_csv(missing_v), ParseError);
  std::istringstream bad_number("consumer_id,date,a,v_0\nx,2013-01-01,1,abc\n");
  CHECK_THROWS_AS(read_dataset_csv(bad_number), ParseError);
  std::istringstream ragged("consumer_id,date,a,v_0\nx,2013-01-01,1\n");
  CHECK_THROWS_AS(read_dataset_csv(ragged), ParseError);
}

TEST_CASE("subset, consumers and canonical order") {
  Dataset d = small_dataset();
  CHECK(d.consumers() == std::vector<std::string>{"c0", "c1", "c2"});
  const std::string ids[] = {"c1"};
  const auto rows = d.rows_of(ids);
  CHECK(rows == std::vector<std::size_t>{1, 4, 7});
  const Dataset sub = d.subset(rows);
  CHECK(sub.size() == 3);
  CHECK(sub.consumer_id(2) == "c1");
  d.sort_canonical();
  for (std::size_t i = 1; i < d.size(); ++i) {
    const bool ordered = d.consumer_id(i - 1) < d.consumer_id(i) ||
                         (d.consumer_id(i - 1) == d.consumer_id(i) && d.date(i - 1) < d.date(i));
    CHECK(ordered);
  }
}

TEST_CASE("segmentation of complete years") {
  SUBCASE("365 days at 30 minutes") {
    const auto readings = year_of_readings(2013, minutes{30});
    const auto seg = segment_year_to_days("x", readings, minutes{30});
    CHECK(seg.days.size() == 365);
    CHECK(seg.dropped_count() == 0);
    CHECK(seg.days.front().values.size() == 48);
  }
  SUBCASE("leap year at 15 minutes") {
    const auto readings = year_of_readings(2012, minutes{15});
    const auto seg = segment_year_to_days("x", readings, minutes{15});
    // Enumerate the calendar independently.
    std::size_t expected = 0;
    for (sys_days d{year{2012} / January / 1}; d < sys_days{year{2013} / January / 1}; d += days{1})
      ++expected;
    CHECK(expected == 366);
    CHECK(seg.days.size() == expected);
    CHECK(seg.days.front().values.size() == 96);
  }
}

TEST_CASE("segmentation drops incomplete days and rejects bad input") {
  auto readings = year_of_readings(2013, minutes{30});
  const sys_seconds gap = sys_days{year{2013} / March / 2} + hours{13};
  std::erase_if(readings, [&](const MeterReading& r) { return r.local_time == gap; });
  const auto seg = segment_year_to_days("x", readings, minutes{30});
  CHECK(seg.days.size() == 364);
  REQUIRE(seg.dropped_count() == 1);
  CHECK(format_date(seg.dropped_dates[0]) == "2013-03-02");
  CHECK(seg.days.size() + seg.dropped_count() == 365);

  auto dup = year_of_readings(2013, minutes{30});
  dup.insert(dup.begin() + 100, dup[100]);
  CHECK_THROWS_AS(segment_year_to_days("x", dup, minutes{30}), Error);

  // 48 readings on one day but off the half-hour grid.
  std::vector<MeterReading> skewed;
  const sys_days day{year{2013} / May / 5};
  for (int i = 0; i < 48; ++i) {
    skewed.push_back({day + minutes{30 * i + (i == 20 ? 7 : 0)}, minutes{0}, 1.0});
  }
  CHECK_THROWS_AS(segment_year_to_days("x", skewed, minutes{30}), Error);
  CHECK_THROWS_AS(segment_year_to_days("x", skewed, minutes{20}), Error);
}

TEST_CASE("daylight-saving days are dropped as incomplete") {
  // Local time with a spring-forward gap on 2013-03-31: 02:00-03:00 missing.
  std::vector<MeterReading> readings;
  for (sys_seconds t = sys_days{year{2013} / March / 30};
       t < sys_seconds(sys_days{year{2013} / April / 2}); t += minutes{30}) {
    const auto local_day = floor<days>(t);
    const auto tod = t - local_day;
    const bool after_switch = t >= sys_days{year{2013} / March / 31} + hours{3};
    if (local_day == sys_days{year{2013} / March / 31} && tod >= hours{2} && tod < hours{3}) continue;
    readings.push_back({t, after_switch ? minutes{120} : minutes{60}, 1.0});
  }
  const auto seg = segment_year_to_days("x", readings, minutes{30});
  CHECK(seg.days.size() == 2);
  REQUIRE(seg.dropped_count() == 1);
  CHECK(format_date(seg.dropped_dates[0]) == "2013-03-31");
}

TEST_CASE("csv helpers") {
  CHECK(csv::split_line("a,\"b,c\",\"d\"\"e\"") == std::vector<std::string>{"a", "b,c", "d\"e"});
  const std::string fields[] = {"x,y", "plain"};
  CHECK(csv::join_line(fields) == "\"x,y\",plain");
  CHECK(csv::format_number(-0.0) == "0");
  CHECK(csv::format_number(0.1) == "0.1");
  for (double v : {1.0 / 3.0, -2.5e-300, 123456789.125, 1e22}) {
    CHECK(csv::parse_number(csv::format_number(v), "test") == v);
  }
  CHECK_THROWS_AS(csv::parse_number("1.5x", "field"), ParseError);
  CHECK_THROWS_AS(csv::parse_number("", "field"), ParseError);
}

TEST_CASE("rng draws are reproducible and bounded") {
  Rng a(5), b(5);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.uniform_index(7);
    CHECK(x == b.uniform_index(7));
    CHECK(x < 7);
  }
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  const double v[] = {0.0, 1.5};
  const double w[] = {-0.0, 1.5};
  CHECK(hash_values(v) == hash_values(w));
}
