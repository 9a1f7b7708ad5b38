#pragma once

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "loadpct/core.hpp"
#include "loadpct/rng.hpp"

namespace testutil {

inline loadpct::SeriesMatrix random_matrix(loadpct::Rng& rng, std::size_t rows, std::size_t width,
                                           double lo = -10.0, double hi = 10.0) {
  loadpct::SeriesMatrix m(width);
  std::vector<double> row(width);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto& v : row) v = rng.uniform(lo, hi);
    m.push_back(row);
  }
  return m;
}

inline loadpct::Schema consumer_schema(std::size_t n_attributes) {
  std::vector<loadpct::AttributeSpec> specs;
  for (std::size_t a = 0; a < n_attributes; ++a) {
    specs.push_back({"a" + std::to_string(a), loadpct::AttributeKind::consumer});
  }
  return loadpct::Schema(std::move(specs));
}

/// `n_consumers` consumers with `n_days` days each; attributes are coarse
/// random integers so ties and repeated values occur.
inline loadpct::Dataset random_dataset(loadpct::Rng& rng, std::size_t n_consumers, std::size_t n_days,
                                       std::size_t n_attributes, std::size_t T) {
  using namespace std::chrono;
  loadpct::Dataset data(consumer_schema(n_attributes), T);
  std::vector<double> attrs(n_attributes), series(T);
  for (std::size_t c = 0; c < n_consumers; ++c) {
    const std::string id = "c" + std::to_string(c);
    for (std::size_t d = 0; d < n_days; ++d) {
      const loadpct::Date date{sys_days{year{2013} / January / 1} + days{static_cast<int>(d)}};
      for (auto& a : attrs) a = static_cast<double>(rng.uniform_index(7));
      for (auto& v : series) v = rng.uniform(-2.0, 5.0);
      data.add(id, date, attrs, series);
    }
  }
  return data;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("loadpct_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testutil
