// Compares the serial reference path against the OpenMP path for the two
// data-parallel kernels: client local-training fan-out inside a federated
// round, and the per-client prediction + property-inference stage of the
// defense. Both paths produce bit-identical results; this only measures time.

#include <chrono>
#include <cstdio>
#include <vector>

#include "floral/defense/floral_defense.hpp"
#include "floral/fed/runtime.hpp"
#include "floral/stl/eval.hpp"
#include "floral/util/parallel.hpp"

using namespace floral;
using Clock = std::chrono::steady_clock;

namespace {

double time_once(bool parallel, const fed::ExperimentConfig& base) {
  fed::ExperimentConfig cfg = base;
  cfg.parallel = parallel;
  const auto start = Clock::now();
  auto result = fed::run_experiment(cfg);
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("  final mse %.6g in %.3fs\n", result.final_mse, elapsed);
  return elapsed;
}

double time_defense(bool parallel, int repeats) {
  model::ModelSpec spec{.arch = model::Arch::Mlp, .lookback = 24, .horizon = 12, .channels = 2,
                        .hidden = {32, 32}};
  auto rng = util::Rng::stream(77, {1});

  data::ServerValidationSet validation;
  for (int v = 0; v < 24; ++v) {
    data::Window w;
    w.input = data::Trace(spec.lookback, spec.channels);
    w.target = data::Trace(spec.horizon, spec.channels);
    for (double& x : w.input.values()) x = rng.uniform(0, 1);
    for (double& x : w.target.values()) x = rng.uniform(0, 1);
    validation.windows.push_back(std::move(w));
  }

  const int m = 32;
  std::vector<model::ParamVector> updates;
  std::vector<int> ids;
  std::vector<double> weights(m, 1.0);
  std::vector<int> steps(m, 3);
  for (int i = 0; i < m; ++i) {
    auto init_rng = util::Rng::stream(77, {2, static_cast<std::uint64_t>(i)});
    updates.push_back(model::init_params(spec, init_rng));
    ids.push_back(i);
  }
  auto global = updates.front();

  const auto start = Clock::now();
  for (int r = 0; r < repeats; ++r) {
    defense::TrustState trust(m);
    auto result = defense::floral_round(spec, global, updates, ids, weights, steps, validation,
                                        trust, {.gamma = 0.5, .window = 2, .parallel = parallel});
    if (result.round_scores.empty()) std::printf("unexpected empty result\n");
  }
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", util::max_threads());

  fed::ExperimentConfig cfg;
  cfg.seed = 5;
  cfg.rounds = 10;
  cfg.clients = 30;
  cfg.sample_fraction = 1.0;
  cfg.model = {.arch = model::Arch::Mlp, .lookback = 16, .horizon = 8, .channels = 1,
               .hidden = {32}};
  cfg.generator.clients = cfg.clients;
  cfg.generator.series_length = 400;
  cfg.generator.lookback = 16;
  cfg.generator.horizon = 8;
  cfg.generator.channels = 1;
  cfg.generator.seed = cfg.seed;
  cfg.eta = 0.05;
  cfg.epochs = 3;
  cfg.batch_size = 32;
  cfg.defense.kind = defense::DefenseKind::Floral;

  std::printf("federated round fan-out (30 clients, MLP, 10 rounds)\n");
  std::printf("serial:\n");
  const double run_serial = time_once(false, cfg);
  std::printf("openmp:\n");
  const double run_parallel = time_once(true, cfg);
  std::printf("speedup: %.2fx\n\n", run_serial / run_parallel);

  std::printf("defense stage (32 clients, 24 validation windows, 20 repeats)\n");
  const double defense_serial = time_defense(false, 20);
  std::printf("serial: %.3fs\n", defense_serial);
  const double defense_parallel = time_defense(true, 20);
  std::printf("openmp: %.3fs\n", defense_parallel);
  std::printf("speedup: %.2fx\n", defense_serial / defense_parallel);
  return 0;
}
