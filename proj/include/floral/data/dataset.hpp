#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "floral/data/trace.hpp"
#include "floral/util/rng.hpp"

namespace floral::data {

// One training sample: lookback input and forecast target.
struct Window {
  Trace input;   // L x M
  Trace target;  // tau x M
};

struct ClientDataset {
  int client_id = 0;
  std::vector<Window> windows;
  std::size_t size() const { return windows.size(); }
};

// Small held-out sample owned by the server; disjoint from client data.
struct ServerValidationSet {
  std::vector<Window> windows;
};

// Per-channel min-max statistics, kept so metrics can be reported on the
// original scale.
struct NormStats {
  std::vector<double> minimum;
  std::vector<double> maximum;

  double range(std::size_t c) const {
    const double r = maximum[c] - minimum[c];
    return r > 0.0 ? r : 1.0;
  }
  double normalize(double v, std::size_t c) const { return (v - minimum[c]) / range(c); }
  double denormalize(double v, std::size_t c) const { return minimum[c] + v * range(c); }
  void apply(Trace& trace) const;
  void invert(Trace& trace) const;
};

// Synthetic federated series: a shared seasonal base plus per-client
// amplitude/phase/offset perturbations and Gaussian noise. The spread knobs
// control how non-IID the clients are.
struct GeneratorConfig {
  int clients = 30;
  int series_length = 160;
  int lookback = 8;    // L
  int horizon = 6;     // tau
  int channels = 1;    // M
  double noise_sigma = 0.02;
  double amplitude_spread = 0.2;
  double phase_spread = 0.2;
  double offset_spread = 0.2;
  double period = 24.0;
  double validation_fraction = 0.05;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GeneratedData {
  std::vector<ClientDataset> clients;
  ServerValidationSet validation;
  NormStats stats;
};

// Deterministic for a fixed seed. Targets are min-max normalized to [0, 1]
// per channel with shared statistics, so the flip attack's feasibility
// domain is exactly {0, 1}.
GeneratedData generate(const GeneratorConfig& cfg);

// The raw (pre-normalization) per-client series behind generate(); used by
// the data-generation CLI to emit CSV files that ingest_csv can reload.
std::vector<Trace> generate_raw_series(const GeneratorConfig& cfg);

// CSV ingestion: header row of channel names, one file per client, or a
// single file with a `client_id` column. Rows are time-ordered.
struct CsvSource {
  std::vector<std::string> paths;
  int lookback = 8;
  int horizon = 6;
  double validation_fraction = 0.05;
};

struct IngestedData {
  std::vector<ClientDataset> clients;
  ServerValidationSet validation;
  NormStats stats;
  std::vector<std::string> channel_names;
};

IngestedData ingest_csv(const CsvSource& source);

// Sliding windows of stride 1 over one normalized series.
std::vector<Window> make_windows(const Trace& series, int lookback, int horizon);

// m = round(fraction * pool) distinct ids, uniform without replacement.
std::vector<int> sample_clients(int pool, double fraction, util::Rng& rng);

}  // namespace floral::data
