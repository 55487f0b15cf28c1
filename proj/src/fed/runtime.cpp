#include "floral/fed/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "floral/util/parallel.hpp"
#include "floral/util/rng.hpp"

namespace floral::fed {

namespace {

// Stream tags for deriving independent per-(round, client) substreams.
constexpr std::uint64_t kTagInit = 0x01;
constexpr std::uint64_t kTagAttackers = 0xA7;
constexpr std::uint64_t kTagSample = 0x54;
constexpr std::uint64_t kTagTrain = 0x7A;
constexpr std::uint64_t kTagAttack = 0xBF;

struct ClientState {
  std::vector<data::Window> train;
  std::vector<data::Window> flipped;  // poisoned copy, attackers only
  int steps_per_round = 1;
};

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

Metrics evaluate(const model::ModelSpec& spec, const model::ParamVector& params,
                 std::span<const data::Window> test_windows, const data::NormStats* stats) {
  if (test_windows.empty()) throw InputError("evaluation needs at least one window");
  Metrics metrics;
  double count = 0.0;
  for (const auto& window : test_windows) {
    const auto prediction = model::forward(spec, params, window.input);
    for (std::size_t t = 0; t < prediction.steps(); ++t)
      for (std::size_t c = 0; c < prediction.channels(); ++c) {
        const double diff = prediction.at(t, c) - window.target.at(t, c);
        metrics.mse += diff * diff;
        metrics.mae += std::abs(diff);
        if (stats) {
          const double scaled = diff * stats->range(c);
          metrics.mse_denorm += scaled * scaled;
          metrics.mae_denorm += std::abs(scaled);
        }
        count += 1.0;
      }
  }
  metrics.mse /= count;
  metrics.mae /= count;
  metrics.mse_denorm /= count;
  metrics.mae_denorm /= count;
  return metrics;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  // Data: synthetic generator or CSV ingestion, already normalized.
  std::vector<data::ClientDataset> clients;
  data::ServerValidationSet validation;
  data::NormStats stats;
  if (cfg.use_csv) {
    auto ingested = data::ingest_csv(cfg.csv);
    clients = std::move(ingested.clients);
    validation = std::move(ingested.validation);
    stats = std::move(ingested.stats);
    if (static_cast<int>(clients.size()) != cfg.clients)
      throw ConfigError("clients.count = " + std::to_string(cfg.clients) + " but the CSV source yields " +
                        std::to_string(clients.size()) + " clients");
  } else {
    auto generated = data::generate(cfg.generator);
    clients = std::move(generated.clients);
    validation = std::move(generated.validation);
    stats = std::move(generated.stats);
  }

  // Train/test split: the windows tail of each client is held out globally.
  const int n_clients = static_cast<int>(clients.size());
  std::vector<ClientState> state(static_cast<std::size_t>(n_clients));
  std::vector<data::Window> test_windows;
  for (int i = 0; i < n_clients; ++i) {
    auto& windows = clients[static_cast<std::size_t>(i)].windows;
    const std::size_t held =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                     cfg.test_fraction * static_cast<double>(windows.size()))));
    if (held >= windows.size())
      throw ConfigError("test fraction leaves no training windows for client " +
                        std::to_string(i));
    auto& cs = state[static_cast<std::size_t>(i)];
    cs.train.assign(windows.begin(), windows.end() - static_cast<std::ptrdiff_t>(held));
    test_windows.insert(test_windows.end(), windows.end() - static_cast<std::ptrdiff_t>(held),
                        windows.end());
    const auto batches = (cs.train.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                         static_cast<std::size_t>(cfg.batch_size);
    cs.steps_per_round = cfg.epochs * static_cast<int>(batches);
  }

  // Fixed attacker pool for the whole run.
  const int n_attackers =
      static_cast<int>(std::floor(cfg.attack.epsilon * static_cast<double>(n_clients) + 0.5));
  std::set<int> attacker_pool;
  if (cfg.attack.kind != attack::AttackKind::None && n_attackers > 0) {
    auto rng = util::Rng::stream(cfg.seed, {kTagAttackers});
    for (int id : rng.sample_without_replacement(n_clients, n_attackers)) attacker_pool.insert(id);
  }

  // Flip-family attackers poison their training targets once, up front.
  const bool flip_family = cfg.attack.kind == attack::AttackKind::FlipData ||
                           cfg.attack.kind == attack::AttackKind::Pgd ||
                           cfg.attack.kind == attack::AttackKind::ConstrainAndScale ||
                           cfg.attack.kind == attack::AttackKind::ModelReplacement;
  if (flip_family) {
    for (int id : attacker_pool) {
      auto& cs = state[static_cast<std::size_t>(id)];
      data::ClientDataset holder;
      holder.client_id = id;
      holder.windows = cs.train;
      cs.flipped = attack::flip_targets(holder, cfg.attack.flip_budget).windows;
    }
  }

  auto init_rng = util::Rng::stream(cfg.seed, {kTagInit});
  model::ParamVector global = model::init_params(cfg.model, init_rng);

  auto defense = defense::make_defense(cfg.defense, n_clients);

  RunResult result;
  result.stats = stats;
  std::vector<double> previous_benign_norms;

  for (int round = 1; round <= cfg.rounds; ++round) {
    const auto t_round = std::chrono::steady_clock::now();
    auto sample_rng = util::Rng::stream(cfg.seed, {kTagSample, static_cast<std::uint64_t>(round)});
    const std::vector<int> sampled =
        data::sample_clients(n_clients, cfg.sample_fraction, sample_rng);
    const std::size_t m = sampled.size();

    // Stealth radius for PGD: explicit config value, or half the median
    // benign delta norm from the previous round (free pass on round one).
    double pgd_delta = cfg.attack.pgd_delta;
    if (cfg.attack.kind == attack::AttackKind::Pgd && pgd_delta <= 0.0) {
      pgd_delta = previous_benign_norms.empty()
                      ? std::numeric_limits<double>::infinity()
                      : 0.5 * median_of(previous_benign_norms);
    }
    const double boost =
        cfg.attack.scale > 0.0 ? cfg.attack.scale : static_cast<double>(m);

    // Local training fan-out. Every client derives its own rng stream, so
    // the result is independent of the execution order.
    std::vector<model::ParamVector> updates(m);
    util::parallel_for(m, cfg.parallel, [&](std::size_t i) {
      const int id = sampled[i];
      const auto& cs = state[static_cast<std::size_t>(id)];
      const bool is_attacker = attacker_pool.count(id) > 0;

      model::SgdOptions options;
      options.eta = cfg.eta;
      options.epochs = cfg.epochs;
      options.batch_size = cfg.batch_size;
      if (cfg.aggregator == AggregatorKind::FedProx && cfg.fedprox_mu > 0.0) {
        options.prox_mu = cfg.fedprox_mu;
        options.prox_ref = &global;
      }

      auto train_rng = util::Rng::stream(
          cfg.seed, {kTagTrain, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(id)});
      // Colluding attackers share one per-round stream and therefore one
      // noise draw; independent ones get per-client streams.
      auto attack_rng =
          cfg.attack.colluding
              ? util::Rng::stream(cfg.seed, {kTagAttack, static_cast<std::uint64_t>(round)})
              : util::Rng::stream(cfg.seed, {kTagAttack, static_cast<std::uint64_t>(round),
                                             static_cast<std::uint64_t>(id)});

      if (!is_attacker || cfg.attack.kind == attack::AttackKind::None) {
        updates[i] = model::local_sgd(cfg.model, global, cs.train, options, train_rng);
        return;
      }
      switch (cfg.attack.kind) {
        case attack::AttackKind::GaussianByzantine:
          updates[i] = attack::byzantine_update(global.tag, global.size(), cfg.attack.sigma,
                                                attack_rng);
          break;
        case attack::AttackKind::FlipData:
          updates[i] = model::local_sgd(cfg.model, global, cs.flipped, options, train_rng);
          break;
        case attack::AttackKind::Pgd: {
          auto poisoned = model::local_sgd(cfg.model, global, cs.flipped, options, train_rng);
          updates[i] = attack::pgd_project(poisoned, global, pgd_delta);
          break;
        }
        case attack::AttackKind::ConstrainAndScale:
          updates[i] = attack::constrain_and_scale_train(cfg.model, global, cs.flipped,
                                                         cfg.attack.alpha, boost, options,
                                                         train_rng);
          break;
        case attack::AttackKind::ModelReplacement: {
          auto poisoned = model::local_sgd(cfg.model, global, cs.flipped, options, train_rng);
          updates[i] = attack::model_replacement(poisoned, global, boost);
          break;
        }
        case attack::AttackKind::None:
          break;
      }
    });

    std::vector<double> weights(m), benign_norms;
    std::vector<int> local_steps(m);
    std::vector<int> attackers_present;
    for (std::size_t i = 0; i < m; ++i) {
      const int id = sampled[i];
      weights[i] = static_cast<double>(state[static_cast<std::size_t>(id)].train.size());
      local_steps[i] = state[static_cast<std::size_t>(id)].steps_per_round;
      if (attacker_pool.count(id)) {
        attackers_present.push_back(id);
      } else {
        benign_norms.push_back(model::l2_distance(updates[i], global));
      }
    }
    previous_benign_norms = benign_norms;

    defense::DefenseContext ctx;
    ctx.spec = &cfg.model;
    ctx.global = &global;
    ctx.updates = updates;
    ctx.client_ids = sampled;
    ctx.weights = weights;
    ctx.local_steps = local_steps;
    ctx.validation = &validation;
    ctx.aggregator = cfg.aggregator;
    ctx.round = round;
    ctx.parallel = cfg.parallel;

    defense::DefenseOutcome outcome;
    try {
      outcome = defense->apply(ctx);
    } catch (const Error& err) {
      throw Error("round " + std::to_string(round) + ": " + err.what());
    }
    global = outcome.new_global;

    const Metrics metrics = evaluate(cfg.model, global, test_windows,
                                     cfg.denormalize_metrics ? &stats : nullptr);

    RoundRecord record;
    record.round = round;
    record.sampled = sampled;
    record.attackers_present = attackers_present;
    record.round_scores =
        outcome.round_scores.empty() ? outcome.scores : outcome.round_scores;
    record.trust_scores = outcome.scores;
    record.cluster_ids = outcome.cluster_ids;
    record.mask = outcome.mask;
    record.mse = metrics.mse;
    record.mae = metrics.mae;
    record.mse_denorm = metrics.mse_denorm;
    record.mae_denorm = metrics.mae_denorm;
    record.fallback = outcome.fallback;
    record.no_signal = outcome.no_signal;
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_round).count();
    result.records.push_back(std::move(record));
  }

  result.final_global = global;
  if (!result.records.empty()) {
    result.final_mse = result.records.back().mse;
    result.final_mae = result.records.back().mae;
    result.final_mse_denorm = result.records.back().mse_denorm;
    result.final_mae_denorm = result.records.back().mae_denorm;
  }
  return result;
}

}  // namespace floral::fed
