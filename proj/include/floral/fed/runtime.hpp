#pragma once

#include <span>
#include <utility>

#include "floral/fed/config.hpp"
#include "floral/fed/records.hpp"

namespace floral::fed {

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  double mse_denorm = 0.0;
  double mae_denorm = 0.0;
};

// Pooled forecast error over all horizon steps and channels, on the
// normalized scale and (when stats are given) the original scale.
Metrics evaluate(const model::ModelSpec& spec, const model::ParamVector& params,
                 std::span<const data::Window> test_windows, const data::NormStats* stats);

// Runs the full training loop of `cfg`: per-round client sampling, local
// training with the configured attacker behaviors, defense, aggregation and
// metric evaluation. Deterministic given cfg (including with parallel=true).
RunResult run_experiment(const ExperimentConfig& cfg);

}  // namespace floral::fed
