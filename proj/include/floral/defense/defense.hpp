#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floral/data/dataset.hpp"
#include "floral/defense/floral_defense.hpp"
#include "floral/fed/aggregate.hpp"
#include "floral/model/forecaster.hpp"

namespace floral::defense {

enum class DefenseKind {
  None,
  Floral,
  Krum,
  MultiKrum,
  Rfa,           // geometric median
  CoordMedian,
  TrimmedMean,
  FoolsGold,
  Rlr
};

const char* defense_name(DefenseKind kind);
DefenseKind defense_from_name(const std::string& name);

struct DefenseSettings {
  DefenseKind kind = DefenseKind::None;
  double gamma = 0.5;          // floral mask threshold
  int window = 2;              // floral property window (steps)
  int krum_f = -1;             // -1: derive as max(floor(eps * m), 1)
  int multi_select = -1;       // -1: m - f - 2
  double trim_beta = 0.1;
  double rlr_threshold = 1.0;
  double rlr_eta = 1.0;
  double foolsgold_kappa = 10.0;
  double assumed_epsilon = 0.2;  // feeds the krum_f default

  void validate() const;
};

// Everything a defense may consult for one round. Updates are the submitted
// client models, ordered by position in `client_ids`.
struct DefenseContext {
  const model::ModelSpec* spec = nullptr;
  const model::ParamVector* global = nullptr;
  std::span<const model::ParamVector> updates;
  std::span<const int> client_ids;
  std::span<const double> weights;
  std::span<const int> local_steps;
  const data::ServerValidationSet* validation = nullptr;
  fed::AggregatorKind aggregator = fed::AggregatorKind::FedAvg;
  int round = 0;
  bool parallel = false;
};

struct DefenseOutcome {
  std::vector<std::uint8_t> mask;     // clients whose updates reached the aggregate
  model::ParamVector new_global;
  std::vector<double> scores;         // per-client diagnostic (meaning per defense)
  std::vector<double> round_scores;   // floral: this round's theta^t; else = scores
  std::vector<int> cluster_ids;       // floral only; -1 elsewhere
  bool fallback = false;
  bool no_signal = false;
};

// Stateful per-run defense: floral keeps trust, foolsgold keeps histories.
class Defense {
 public:
  virtual ~Defense() = default;
  virtual DefenseOutcome apply(const DefenseContext& ctx) = 0;
};

std::unique_ptr<Defense> make_defense(const DefenseSettings& settings, int total_clients);

}  // namespace floral::defense
