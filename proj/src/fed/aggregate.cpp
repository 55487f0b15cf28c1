#include "floral/fed/aggregate.hpp"

#include <numeric>

namespace floral::fed {

const char* aggregator_name(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::FedAvg: return "fedavg";
    case AggregatorKind::FedProx: return "fedprox";
    case AggregatorKind::FedNova: return "fednova";
  }
  return "?";
}

AggregatorKind aggregator_from_name(const std::string& name) {
  if (name == "fedavg") return AggregatorKind::FedAvg;
  if (name == "fedprox") return AggregatorKind::FedProx;
  if (name == "fednova") return AggregatorKind::FedNova;
  throw ConfigError("unknown aggregator: " + name);
}

model::ParamVector aggregate(AggregatorKind kind, const model::ParamVector& global,
                             std::span<const model::ParamVector> updates,
                             std::span<const double> weights, std::span<const int> local_steps) {
  if (updates.empty()) throw InputError("aggregation needs at least one update");
  if (weights.size() != updates.size())
    throw ContractError("aggregation weights must match the update count");
  for (const auto& u : updates) model::ParamVector::check_compatible(global, u);

  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total <= 0.0) throw ConfigError("aggregation weights must sum to a positive value");

  if (updates.size() == 1) return updates[0];

  switch (kind) {
    case AggregatorKind::FedAvg:
    case AggregatorKind::FedProx: {
      model::ParamVector mean;
      mean.tag = global.tag;
      mean.values.assign(global.values.size(), 0.0);
      for (std::size_t i = 0; i < updates.size(); ++i)
        mean.axpy(weights[i] / total, updates[i]);
      return mean;
    }
    case AggregatorKind::FedNova: {
      if (local_steps.size() != updates.size())
        throw ContractError("fednova needs one local step count per update");
      double effective_steps = 0.0;
      model::ParamVector direction;
      direction.tag = global.tag;
      direction.values.assign(global.values.size(), 0.0);
      for (std::size_t i = 0; i < updates.size(); ++i) {
        if (local_steps[i] < 1) throw ContractError("fednova local step counts must be positive");
        const double p = weights[i] / total;
        effective_steps += p * local_steps[i];
        direction.axpy(p / local_steps[i], updates[i] - global);
      }
      model::ParamVector out = global;
      out.axpy(effective_steps, direction);
      return out;
    }
  }
  throw ConfigError("unknown aggregator");
}

}  // namespace floral::fed
