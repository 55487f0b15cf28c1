#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "floral/data/dataset.hpp"

using namespace floral;
using namespace floral::data;

namespace {

std::string write_temp_csv(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream file(path);
  file << content;
  return path.string();
}

std::string univariate_csv(const std::string& name, int rows) {
  std::string text = "volume\n";
  for (int i = 0; i < rows; ++i) text += std::to_string(i % 7) + "." + std::to_string(i % 10) + "\n";
  return write_temp_csv(name, text);
}

double window_distance(const Window& a, const Window& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.input.values().size(); ++i) {
    const double d = a.input.values()[i] - b.input.values()[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

// Mean pairwise distance between the first window of every client pair.
double heterogeneity_metric(const GeneratedData& data) {
  double total = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < data.clients.size(); ++i)
    for (std::size_t j = i + 1; j < data.clients.size(); ++j) {
      total += window_distance(data.clients[i].windows.front(), data.clients[j].windows.front());
      ++pairs;
    }
  return total / pairs;
}

}  // namespace

TEST_CASE("window counts follow length - L - tau + 1") {
  auto path34 = univariate_csv("floral_t34.csv", 34);
  auto path35 = univariate_csv("floral_t35.csv", 35);

  CsvSource source{.paths = {path34}, .lookback = 10, .horizon = 24, .validation_fraction = 0.05};
  // 34 rows, L=10, tau=24 -> exactly 1 window, which leaves nothing to carve
  // for validation.
  CHECK_THROWS_AS(ingest_csv(source), InputError);

  Trace series(34, 1);
  CHECK(make_windows(series, 10, 24).size() == 1);
  Trace series35(35, 1);
  CHECK(make_windows(series35, 10, 24).size() == 2);

  CsvSource source35{.paths = {path35}, .lookback = 10, .horizon = 24, .validation_fraction = 0.5};
  auto data = ingest_csv(source35);
  CHECK(data.clients.at(0).windows.size() == 1);
  CHECK(data.validation.windows.size() == 1);
}

TEST_CASE("csv errors name the offending cell") {
  auto bad = write_temp_csv("floral_bad.csv", "a,b\n1,2\n3,oops\n");
  CsvSource source{.paths = {bad}, .lookback = 1, .horizon = 1};
  try {
    ingest_csv(source);
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(std::string(err.what()).find("row 2") != std::string::npos);
    CHECK(std::string(err.what()).find("column 2") != std::string::npos);
  }

  auto with_nan = write_temp_csv("floral_nan.csv", "a\n1\nNaN\n2\n");
  CsvSource nan_source{.paths = {with_nan}, .lookback = 1, .horizon = 1};
  CHECK_THROWS_AS(ingest_csv(nan_source), ParseError);
}

TEST_CASE("client_id column splits one file into clients") {
  auto path = write_temp_csv("floral_multi.csv",
                             "client_id,load\n"
                             "a,1\na,2\na,3\na,4\na,5\na,6\na,7\na,8\n"
                             "b,2\nb,3\nb,4\nb,5\nb,6\nb,7\nb,8\nb,9\nb,10\nb,11\n");
  CsvSource source{.paths = {path}, .lookback = 2, .horizon = 2, .validation_fraction = 0.2};
  auto data = ingest_csv(source);
  REQUIRE(data.clients.size() == 2);
  CHECK(data.channel_names == std::vector<std::string>{"load"});
  // 8-row client: 5 windows; 10-row client: 7 windows minus validation carve.
  CHECK(data.clients[0].windows.size() == 5);
  CHECK(data.clients[1].windows.size() + data.validation.windows.size() == 7);
}

TEST_CASE("normalization round-trips within 1e-12") {
  NormStats stats{.minimum = {-3.0, 10.0}, .maximum = {5.0, 11.0}};
  Trace trace = Trace::from_rows({{-3.0, 10.5}, {4.0, 11.0}, {0.0, 10.0}});
  Trace copy = trace;
  stats.apply(copy);
  for (std::size_t t = 0; t < copy.steps(); ++t)
    for (std::size_t c = 0; c < copy.channels(); ++c) {
      CHECK(copy.at(t, c) >= 0.0);
      CHECK(copy.at(t, c) <= 1.0);
    }
  stats.invert(copy);
  for (std::size_t t = 0; t < copy.steps(); ++t)
    for (std::size_t c = 0; c < copy.channels(); ++c)
      CHECK(copy.at(t, c) == doctest::Approx(trace.at(t, c)).epsilon(1e-12));
}

TEST_CASE("zero heterogeneity and zero noise make clients identical") {
  GeneratorConfig cfg;
  cfg.clients = 4;
  cfg.series_length = 40;
  cfg.noise_sigma = 0.0;
  cfg.amplitude_spread = 0.0;
  cfg.phase_spread = 0.0;
  cfg.offset_spread = 0.0;
  auto data = generate(cfg);
  for (std::size_t i = 1; i < data.clients.size(); ++i) {
    REQUIRE(data.clients[i].windows.size() == data.clients[0].windows.size());
    for (std::size_t w = 0; w < data.clients[i].windows.size(); ++w) {
      CHECK(data.clients[i].windows[w].input.values() ==
            data.clients[0].windows[w].input.values());
      CHECK(data.clients[i].windows[w].target.values() ==
            data.clients[0].windows[w].target.values());
    }
  }
}

TEST_CASE("generation is bit-identical for a fixed seed") {
  GeneratorConfig cfg;
  cfg.clients = 5;
  cfg.series_length = 60;
  cfg.seed = 42;
  auto a = generate(cfg);
  auto b = generate(cfg);
  REQUIRE(a.clients.size() == b.clients.size());
  for (std::size_t i = 0; i < a.clients.size(); ++i)
    for (std::size_t w = 0; w < a.clients[i].windows.size(); ++w) {
      CHECK(a.clients[i].windows[w].input.values() == b.clients[i].windows[w].input.values());
      CHECK(a.clients[i].windows[w].target.values() == b.clients[i].windows[w].target.values());
    }
  for (std::size_t w = 0; w < a.validation.windows.size(); ++w)
    CHECK(a.validation.windows[w].input.values() == b.validation.windows[w].input.values());
}

TEST_CASE("heterogeneity knobs increase inter-client distance") {
  GeneratorConfig homogeneous;
  homogeneous.clients = 8;
  homogeneous.series_length = 60;
  homogeneous.noise_sigma = 0.0;
  homogeneous.amplitude_spread = 0.0;
  homogeneous.phase_spread = 0.0;
  homogeneous.offset_spread = 0.0;

  GeneratorConfig heterogeneous = homogeneous;
  heterogeneous.amplitude_spread = 0.5;
  heterogeneous.phase_spread = 0.5;
  heterogeneous.offset_spread = 0.5;

  CHECK(heterogeneity_metric(generate(heterogeneous)) >
        heterogeneity_metric(generate(homogeneous)));
}

TEST_CASE("targets are normalized into the unit interval") {
  GeneratorConfig cfg;
  cfg.clients = 3;
  cfg.series_length = 50;
  cfg.seed = 7;
  auto data = generate(cfg);
  for (const auto& client : data.clients)
    for (const auto& window : client.windows)
      for (double v : window.target.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
}

TEST_CASE("validation windows are disjoint from client windows") {
  GeneratorConfig cfg;
  cfg.clients = 6;
  cfg.series_length = 50;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 99ULL}) {
    cfg.seed = seed;
    auto data = generate(cfg);
    REQUIRE(!data.validation.windows.empty());
    for (const auto& vw : data.validation.windows)
      for (const auto& client : data.clients)
        for (const auto& cw : client.windows)
          CHECK(vw.input.values() != cw.input.values());
  }
}

TEST_CASE("client sampling") {
  auto rng = util::Rng::stream(7, {1});
  auto picked = sample_clients(30, 0.5, rng);
  CHECK(picked.size() == 15);
  for (std::size_t i = 1; i < picked.size(); ++i) CHECK(picked[i - 1] < picked[i]);
  CHECK(picked.front() >= 0);
  CHECK(picked.back() < 30);

  auto rng_all = util::Rng::stream(7, {1});
  auto all = sample_clients(4, 1.0, rng_all);
  CHECK(all == std::vector<int>{0, 1, 2, 3});

  auto rng_a = util::Rng::stream(123, {5});
  auto rng_b = util::Rng::stream(123, {5});
  CHECK(sample_clients(30, 0.5, rng_a) == sample_clients(30, 0.5, rng_b));

  CHECK_THROWS_AS(sample_clients(10, 0.0, rng), ConfigError);
  CHECK_THROWS_AS(sample_clients(10, 1.5, rng), ConfigError);
}

TEST_CASE("degenerate series length is a config error") {
  GeneratorConfig cfg;
  cfg.series_length = 10;
  cfg.lookback = 8;
  cfg.horizon = 6;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
}
