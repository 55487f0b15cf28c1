#pragma once

#include <span>
#include <vector>

#include "floral/model/param_vector.hpp"

namespace floral::defense {

// Krum: each update scores the sum of squared L2 distances to its n - f - 2
// nearest peers; the argmin wins. Requires n >= f + 3. Ties pick the lowest
// index.
std::size_t krum_select(std::span<const model::ParamVector> updates, int f);

// Mean of the m_select lowest-scored updates.
model::ParamVector multi_krum(std::span<const model::ParamVector> updates, int f, int m_select);

struct GeometricMedianResult {
  model::ParamVector point;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
};

// Smoothed Weiszfeld iteration for the weighted geometric median. The
// objective sum w_i ||z - u_i|| decreases monotonically; iteration stops when
// the iterate moves less than tol. Non-convergence returns the best iterate
// with converged = false.
GeometricMedianResult geometric_median(std::span<const model::ParamVector> updates,
                                       std::span<const double> weights, double tol = 1e-9,
                                       int max_iter = 200);

// Per-coordinate median (midpoint rule for even counts).
model::ParamVector coordinate_median(std::span<const model::ParamVector> updates);

// Per-coordinate mean after dropping floor(beta * n) extremes on each side.
model::ParamVector trimmed_mean(std::span<const model::ParamVector> updates, double beta);

// FoolsGold learning-rate weights from per-client cumulative update
// histories: pairwise cosine similarity, pardoning rescale, 1 - max
// similarity, then logit sharpening with slope kappa. Zero-norm histories
// carry no evidence and get weight 1.
std::vector<double> foolsgold_weights(std::span<const std::vector<double>> histories,
                                      double kappa = 10.0);

// Robust learning rate: per dimension, the aggregation direction flips to
// -server_eta when the number of agreeing update signs stays below the
// threshold; the update applied is the plain mean of the deltas.
model::ParamVector rlr_aggregate(const model::ParamVector& global,
                                 std::span<const model::ParamVector> updates, double threshold,
                                 double server_eta = 1.0);

}  // namespace floral::defense
