#pragma once

#include <span>
#include <string>

#include "floral/model/param_vector.hpp"

namespace floral::fed {

enum class AggregatorKind { FedAvg, FedProx, FedNova };

const char* aggregator_name(AggregatorKind kind);
AggregatorKind aggregator_from_name(const std::string& name);

// FedAvg / FedProx: size-weighted mean of the updates (FedProx differs only
// client-side, through the proximal term in local training).
// FedNova: global + (sum_i p_i tau_i) * sum_i p_i (theta_i - global) / tau_i
// with p_i = n_i / sum n; equal step counts reduce it to FedAvg.
model::ParamVector aggregate(AggregatorKind kind, const model::ParamVector& global,
                             std::span<const model::ParamVector> updates,
                             std::span<const double> weights, std::span<const int> local_steps);

}  // namespace floral::fed
