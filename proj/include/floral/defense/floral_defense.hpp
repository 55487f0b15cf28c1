#pragma once

#include <span>
#include <vector>

#include "floral/data/dataset.hpp"
#include "floral/defense/finch.hpp"
#include "floral/fed/aggregate.hpp"
#include "floral/model/forecaster.hpp"
#include "floral/stl/infer.hpp"

namespace floral::defense {

// Cumulative per-client robustness scores: score[i] is the running average
// of client i's round scores over its rounds[i] participations.
struct TrustState {
  std::vector<double> score;
  std::vector<int> rounds;

  explicit TrustState(int clients = 0) : score(clients, 0.0), rounds(clients, 0) {}

  // f <- f + 1; theta <- ((f-1)/f) theta + (1/f) theta_t
  void update(int client, double round_score);
};

// Fraction of horizon steps whose covering constraints hold. Anchored
// box-range properties (conjunctions of G-windows over predicate formulas)
// are checked point-wise: step t must satisfy every window that contains t.
// Other formula shapes fall back to suffix evaluation at each step.
double robustness_score(const stl::FormulaPtr& property, const data::Trace& prediction);
std::vector<bool> per_step_satisfaction(const stl::FormulaPtr& property,
                                        const data::Trace& prediction);

// Parameter-wise mean of same-template properties.
stl::InferredProperty cluster_property(std::span<const stl::InferredProperty> members);

// Coordinate-wise median over cluster properties. Even counts break the tie
// toward the larger cluster's value (benign majority assumption), then
// toward the smaller value; odd counts are the exact median.
stl::InferredProperty global_property(std::span<const stl::InferredProperty> clusters,
                                      std::span<const int> sizes = {});

// Max-normalizes the scores and keeps clients at or above gamma times the
// maximum. All-zero scores carry no signal: everyone is kept.
std::vector<std::uint8_t> malicious_mask(std::span<const double> scores, double gamma);

struct FloralSettings {
  double gamma = 0.5;
  int window = 2;  // property window size in steps
  fed::AggregatorKind aggregator = fed::AggregatorKind::FedAvg;
  bool parallel = false;
};

struct FloralRoundResult {
  std::vector<std::uint8_t> mask;
  model::ParamVector new_global;
  std::vector<double> round_scores;   // theta^t per participant
  std::vector<double> trust_scores;   // cumulative theta after the update
  std::vector<int> cluster_ids;
  stl::InferredProperty global_prop;
  bool fallback = false;              // every client masked; kept the old global
  bool no_signal = false;             // all trust scores zero; mask carries no information
};

// One defense round: per-client prediction on the validation set, property
// inference, FINCH clustering of property parameters, cluster mean and
// global median properties, per-client satisfaction scoring, cumulative
// trust update, threshold mask, and aggregation of the surviving updates.
FloralRoundResult floral_round(const model::ModelSpec& spec, const model::ParamVector& global,
                               std::span<const model::ParamVector> updates,
                               std::span<const int> client_ids,
                               std::span<const double> weights, std::span<const int> local_steps,
                               const data::ServerValidationSet& validation,
                               TrustState& trust, const FloralSettings& settings);

}  // namespace floral::defense
