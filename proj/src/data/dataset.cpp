#include "floral/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "floral/errors.hpp"

namespace floral::data {

void NormStats::apply(Trace& trace) const {
  for (std::size_t t = 0; t < trace.steps(); ++t)
    for (std::size_t c = 0; c < trace.channels(); ++c)
      trace.at(t, c) = normalize(trace.at(t, c), c);
}

void NormStats::invert(Trace& trace) const {
  for (std::size_t t = 0; t < trace.steps(); ++t)
    for (std::size_t c = 0; c < trace.channels(); ++c)
      trace.at(t, c) = denormalize(trace.at(t, c), c);
}

void GeneratorConfig::validate() const {
  if (clients < 1) throw ConfigError("generator: clients must be positive");
  if (lookback < 1 || horizon < 1) throw ConfigError("generator: lookback and horizon must be positive");
  if (channels < 1) throw ConfigError("generator: channels must be positive");
  if (noise_sigma < 0) throw ConfigError("generator: noise sigma must be nonnegative");
  if (period <= 0) throw ConfigError("generator: period must be positive");
  if (validation_fraction <= 0 || validation_fraction > 1)
    throw ConfigError("generator: validation fraction must be in (0, 1]");
  if (series_length < lookback + horizon)
    throw ConfigError("generator: series length shorter than lookback + horizon");
}

std::vector<Window> make_windows(const Trace& series, int lookback, int horizon) {
  const int total = static_cast<int>(series.steps());
  const int count = total - lookback - horizon + 1;
  if (count < 1) throw InputError("series too short for one lookback + horizon window");

  std::vector<Window> windows;
  windows.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    Window w;
    w.input = Trace(static_cast<std::size_t>(lookback), series.channels());
    w.target = Trace(static_cast<std::size_t>(horizon), series.channels());
    for (int t = 0; t < lookback; ++t)
      for (std::size_t c = 0; c < series.channels(); ++c)
        w.input.at(t, c) = series.at(s + t, c);
    for (int t = 0; t < horizon; ++t)
      for (std::size_t c = 0; c < series.channels(); ++c)
        w.target.at(t, c) = series.at(s + lookback + t, c);
    w.input.start_time = s;
    w.target.start_time = s + lookback;
    windows.push_back(std::move(w));
  }
  return windows;
}

namespace {

struct RegimeParams {
  std::vector<double> amplitude;  // per channel
  std::vector<double> phase;
  std::vector<double> offset;
};

RegimeParams draw_regime(const GeneratorConfig& cfg, util::Rng& rng) {
  RegimeParams params;
  for (int c = 0; c < cfg.channels; ++c) {
    params.amplitude.push_back(1.0 + cfg.amplitude_spread * rng.uniform(-1.0, 1.0));
    params.phase.push_back(cfg.phase_spread * rng.uniform(0.0, 1.0) * 2.0 * M_PI);
    params.offset.push_back(cfg.offset_spread * rng.uniform(-1.0, 1.0));
  }
  return params;
}

Trace synthesize(const GeneratorConfig& cfg, const RegimeParams& params, int length,
                 util::Rng& noise_rng) {
  Trace series(static_cast<std::size_t>(length), static_cast<std::size_t>(cfg.channels));
  for (int t = 0; t < length; ++t) {
    for (int c = 0; c < cfg.channels; ++c) {
      // Each channel runs at a harmonic of the base period so multivariate
      // series are not mutually redundant.
      const double omega = 2.0 * M_PI * (1.0 + c) / cfg.period;
      double v = params.offset[c] + params.amplitude[c] * std::sin(omega * t + params.phase[c]);
      if (cfg.noise_sigma > 0) v += cfg.noise_sigma * noise_rng.normal();
      series.at(t, c) = v;
    }
  }
  return series;
}

}  // namespace

std::vector<Trace> generate_raw_series(const GeneratorConfig& cfg) {
  cfg.validate();
  std::vector<Trace> raw_series;
  raw_series.reserve(static_cast<std::size_t>(cfg.clients));
  for (int i = 0; i < cfg.clients; ++i) {
    auto params_rng = util::Rng::stream(cfg.seed, {0x11, static_cast<std::uint64_t>(i)});
    auto noise_rng = util::Rng::stream(cfg.seed, {0x12, static_cast<std::uint64_t>(i)});
    raw_series.push_back(synthesize(cfg, draw_regime(cfg, params_rng), cfg.series_length, noise_rng));
  }
  return raw_series;
}

GeneratedData generate(const GeneratorConfig& cfg) {
  cfg.validate();

  std::vector<Trace> raw_series = generate_raw_series(cfg);

  // Validation series drawn from the same regime mixture, on its own stream.
  const int client_window_count = cfg.series_length - cfg.lookback - cfg.horizon + 1;
  const int val_count = std::max(1, static_cast<int>(std::lround(
                                        cfg.validation_fraction * client_window_count)));
  const int val_length = cfg.lookback + cfg.horizon + val_count - 1;
  auto val_params_rng = util::Rng::stream(cfg.seed, {0x21});
  auto val_noise_rng = util::Rng::stream(cfg.seed, {0x22});
  Trace val_series = synthesize(cfg, draw_regime(cfg, val_params_rng), val_length, val_noise_rng);

  // Shared per-channel min-max stats over everything we generated.
  NormStats stats;
  stats.minimum.assign(static_cast<std::size_t>(cfg.channels),
                       std::numeric_limits<double>::infinity());
  stats.maximum.assign(static_cast<std::size_t>(cfg.channels),
                       -std::numeric_limits<double>::infinity());
  auto fold = [&](const Trace& series) {
    for (std::size_t t = 0; t < series.steps(); ++t)
      for (std::size_t c = 0; c < series.channels(); ++c) {
        stats.minimum[c] = std::min(stats.minimum[c], series.at(t, c));
        stats.maximum[c] = std::max(stats.maximum[c], series.at(t, c));
      }
  };
  for (const auto& series : raw_series) fold(series);
  fold(val_series);

  GeneratedData out;
  out.stats = stats;
  for (int i = 0; i < cfg.clients; ++i) {
    Trace series = raw_series[static_cast<std::size_t>(i)];
    stats.apply(series);
    series.require_finite();
    ClientDataset dataset;
    dataset.client_id = i;
    dataset.windows = make_windows(series, cfg.lookback, cfg.horizon);
    out.clients.push_back(std::move(dataset));
  }
  stats.apply(val_series);
  out.validation.windows = make_windows(val_series, cfg.lookback, cfg.horizon);
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream stream(line);
  while (std::getline(stream, cell, ',')) {
    // trim spaces
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos ? "" : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

// row/col are 1-based display numbers (row counts data rows, not the header).
double parse_cell(const std::string& cell, const std::string& path, std::size_t row,
                  std::size_t col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw ParseError(path + ": non-numeric cell at row " + std::to_string(row) + ", column " +
                     std::to_string(col));
  return value;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;           // numeric columns only
  std::vector<std::optional<std::string>> ids;     // client_id column when present
};

CsvTable read_csv(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw InputError("cannot open CSV file: " + path);

  CsvTable table;
  std::string line;
  if (!std::getline(file, line)) throw InputError(path + ": empty file");
  table.header = split_line(line);
  if (table.header.empty()) throw ParseError(path + ": missing header row");

  std::size_t id_col = table.header.size();
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (table.header[c] == "client_id") id_col = c;

  std::size_t row = 0;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size())
      throw ParseError(path + ": row " + std::to_string(row + 2) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(table.header.size()));
    std::vector<double> values;
    std::optional<std::string> id;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == id_col) {
        id = cells[c];
        continue;
      }
      values.push_back(parse_cell(cells[c], path, row + 1, c + 1));
    }
    table.rows.push_back(std::move(values));
    table.ids.push_back(std::move(id));
    ++row;
  }
  if (id_col < table.header.size()) table.header.erase(table.header.begin() + id_col);
  if (table.rows.empty()) throw InputError(path + ": no data rows");
  return table;
}

}  // namespace

IngestedData ingest_csv(const CsvSource& source) {
  if (source.paths.empty()) throw ConfigError("csv: no input files");
  if (source.lookback < 1 || source.horizon < 1)
    throw ConfigError("csv: lookback and horizon must be positive");

  // Collect one raw series per client, preserving file/appearance order.
  std::vector<std::pair<std::string, std::vector<std::vector<double>>>> clients;
  std::vector<std::string> channel_names;

  for (const auto& path : source.paths) {
    CsvTable table = read_csv(path);
    if (channel_names.empty())
      channel_names = table.header;
    else if (channel_names != table.header)
      throw SchemaError(path + ": channel header differs from the first file");

    if (table.ids.front().has_value()) {
      std::map<std::string, std::vector<std::vector<double>>> grouped;
      std::vector<std::string> order;
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& id = table.ids[r];
        if (!id.has_value()) throw ParseError(path + ": missing client_id value");
        if (grouped.find(*id) == grouped.end()) order.push_back(*id);
        grouped[*id].push_back(table.rows[r]);
      }
      for (const auto& id : order) clients.emplace_back(id, std::move(grouped[id]));
    } else {
      clients.emplace_back(path, std::move(table.rows));
    }
  }

  // Global per-channel stats across all clients.
  const std::size_t channels = channel_names.size();
  NormStats stats;
  stats.minimum.assign(channels, std::numeric_limits<double>::infinity());
  stats.maximum.assign(channels, -std::numeric_limits<double>::infinity());
  for (const auto& [id, rows] : clients)
    for (const auto& r : rows)
      for (std::size_t c = 0; c < channels; ++c) {
        stats.minimum[c] = std::min(stats.minimum[c], r[c]);
        stats.maximum[c] = std::max(stats.maximum[c], r[c]);
      }

  IngestedData out;
  out.stats = stats;
  out.channel_names = channel_names;
  int next_id = 0;
  for (auto& [id, rows] : clients) {
    Trace series = Trace::from_rows(rows);
    stats.apply(series);
    ClientDataset dataset;
    dataset.client_id = next_id++;
    dataset.windows = make_windows(series, source.lookback, source.horizon);
    out.clients.push_back(std::move(dataset));
  }

  // Server validation: the tail windows of the longest client series are
  // removed from that client and held centrally.
  std::size_t longest = 0;
  for (std::size_t i = 1; i < out.clients.size(); ++i)
    if (out.clients[i].windows.size() > out.clients[longest].windows.size()) longest = i;
  auto& donor = out.clients[longest].windows;
  const int want = std::max(1, static_cast<int>(std::lround(
                                   source.validation_fraction * donor.size())));
  if (static_cast<std::size_t>(want) >= donor.size())
    throw InputError("csv: donor client too small to carve a validation set");
  out.validation.windows.assign(donor.end() - want, donor.end());
  donor.erase(donor.end() - want, donor.end());
  return out;
}

std::vector<int> sample_clients(int pool, double fraction, util::Rng& rng) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw ConfigError("sample fraction must be in (0, 1]");
  if (pool < 1) throw ConfigError("client pool must be nonempty");
  const int m = std::max(1, static_cast<int>(std::lround(fraction * pool)));
  return rng.sample_without_replacement(pool, std::min(m, pool));
}

}  // namespace floral::data
