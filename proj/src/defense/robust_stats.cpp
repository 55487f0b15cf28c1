#include "floral/defense/robust_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace floral::defense {

namespace {

void check_nonempty(std::span<const model::ParamVector> updates) {
  if (updates.empty()) throw InputError("aggregation needs at least one update");
  for (std::size_t i = 1; i < updates.size(); ++i)
    model::ParamVector::check_compatible(updates[0], updates[i]);
}

std::vector<double> krum_scores(std::span<const model::ParamVector> updates, int f) {
  const int n = static_cast<int>(updates.size());
  if (n < f + 3)
    throw ConfigError("krum needs at least f + 3 updates (got " + std::to_string(n) + ")");
  const int keep = n - f - 2;

  std::vector<std::vector<double>> dist2(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = model::l2_distance(updates[i], updates[j]);
      dist2[i][j] = dist2[j][i] = d * d;
    }

  std::vector<double> scores(n, 0.0);
  std::vector<double> row;
  for (int i = 0; i < n; ++i) {
    row.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) row.push_back(dist2[i][j]);
    std::sort(row.begin(), row.end());
    scores[i] = std::accumulate(row.begin(), row.begin() + keep, 0.0);
  }
  return scores;
}

}  // namespace

std::size_t krum_select(std::span<const model::ParamVector> updates, int f) {
  check_nonempty(updates);
  auto scores = krum_scores(updates, f);
  return static_cast<std::size_t>(
      std::min_element(scores.begin(), scores.end()) - scores.begin());
}

model::ParamVector multi_krum(std::span<const model::ParamVector> updates, int f, int m_select) {
  check_nonempty(updates);
  if (m_select < 1 || m_select > static_cast<int>(updates.size()))
    throw ConfigError("multi-krum selection size out of range");
  auto scores = krum_scores(updates, f);

  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  model::ParamVector mean;
  mean.tag = updates[0].tag;
  mean.values.assign(updates[0].values.size(), 0.0);
  for (int k = 0; k < m_select; ++k) mean += updates[order[static_cast<std::size_t>(k)]];
  mean *= 1.0 / m_select;
  return mean;
}

GeometricMedianResult geometric_median(std::span<const model::ParamVector> updates,
                                       std::span<const double> weights, double tol,
                                       int max_iter) {
  check_nonempty(updates);
  std::vector<double> w(updates.size(), 1.0);
  if (!weights.empty()) {
    if (weights.size() != updates.size())
      throw ContractError("weights must match the update count");
    w.assign(weights.begin(), weights.end());
  }
  const double total_weight = std::accumulate(w.begin(), w.end(), 0.0);
  if (total_weight <= 0.0) throw ConfigError("geometric median needs positive total weight");

  const std::size_t dim = updates[0].values.size();
  GeometricMedianResult result;
  result.point.tag = updates[0].tag;
  result.point.values.assign(dim, 0.0);

  // Weighted mean as the starting iterate.
  for (std::size_t i = 0; i < updates.size(); ++i)
    result.point.axpy(w[i] / total_weight, updates[i]);

  auto objective = [&](const model::ParamVector& z) {
    double sum = 0.0;
    for (std::size_t i = 0; i < updates.size(); ++i)
      sum += w[i] * model::l2_distance(z, updates[i]);
    return sum;
  };

  // Smoothing floor keeps the iteration defined when z lands on a point.
  double scale = 0.0;
  for (const auto& u : updates) scale = std::max(scale, u.l2_norm());
  const double eps = std::max(1e-12 * std::max(scale, 1.0), 1e-300);

  result.objective = objective(result.point);
  model::ParamVector next;
  next.tag = result.point.tag;
  for (int iter = 0; iter < max_iter; ++iter) {
    next.values.assign(dim, 0.0);
    double denom = 0.0;
    for (std::size_t i = 0; i < updates.size(); ++i) {
      const double d = std::max(model::l2_distance(result.point, updates[i]), eps);
      const double coeff = w[i] / d;
      next.axpy(coeff, updates[i]);
      denom += coeff;
    }
    next *= 1.0 / denom;

    const double moved = model::l2_distance(next, result.point);
    const double value = objective(next);
    // The smoothed iteration cannot increase the objective; keep the better
    // iterate regardless.
    if (value <= result.objective) {
      result.point = next;
      result.objective = value;
    }
    result.iterations = iter + 1;
    if (moved < tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

model::ParamVector coordinate_median(std::span<const model::ParamVector> updates) {
  check_nonempty(updates);
  const std::size_t n = updates.size();
  const std::size_t dim = updates[0].values.size();

  model::ParamVector median;
  median.tag = updates[0].tag;
  median.values.resize(dim);
  std::vector<double> column(n);
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t i = 0; i < n; ++i) column[i] = updates[i].values[d];
    std::sort(column.begin(), column.end());
    median.values[d] = (n % 2 == 1) ? column[n / 2]
                                    : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return median;
}

model::ParamVector trimmed_mean(std::span<const model::ParamVector> updates, double beta) {
  check_nonempty(updates);
  if (beta < 0.0 || beta >= 0.5) throw ConfigError("trim fraction must be in [0, 0.5)");
  const std::size_t n = updates.size();
  const std::size_t drop = static_cast<std::size_t>(std::floor(beta * static_cast<double>(n)));
  if (2 * drop >= n) throw ConfigError("trim fraction removes every update");

  const std::size_t dim = updates[0].values.size();
  model::ParamVector mean;
  mean.tag = updates[0].tag;
  mean.values.resize(dim);
  std::vector<double> column(n);
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t i = 0; i < n; ++i) column[i] = updates[i].values[d];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (std::size_t i = drop; i < n - drop; ++i) sum += column[i];
    mean.values[d] = sum / static_cast<double>(n - 2 * drop);
  }
  return mean;
}

std::vector<double> foolsgold_weights(std::span<const std::vector<double>> histories,
                                      double kappa) {
  const std::size_t n = histories.size();
  if (n == 0) throw InputError("foolsgold needs at least one history");
  const std::size_t dim = histories[0].size();
  for (const auto& h : histories)
    if (h.size() != dim) throw ContractError("foolsgold histories differ in dimension");

  std::vector<double> norms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (double v : histories[i]) sum += v * v;
    norms[i] = std::sqrt(sum);
  }

  // Pairwise cosine similarity; zero-norm histories stay at similarity 0.
  std::vector<std::vector<double>> cs(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (norms[i] == 0.0 || norms[j] == 0.0) continue;
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += histories[i][d] * histories[j][d];
      cs[i][j] = cs[j][i] = dot / (norms[i] * norms[j]);
    }

  std::vector<double> v(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) v[i] = std::max(v[i], cs[i][j]);

  // Pardoning: scale down similarity toward clients with a larger maximum.
  std::vector<double> weights(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double max_cs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double adjusted = cs[i][j];
      if (v[i] > 0.0 && v[j] < v[i]) adjusted *= std::min(1.0, v[j] / v[i]);
      max_cs = std::max(max_cs, adjusted);
    }
    weights[i] = std::clamp(1.0 - max_cs, 0.0, 1.0);
  }

  // Logit sharpening; the clamp absorbs the infinities at 0 and 1.
  for (double& w : weights) {
    if (w >= 1.0) continue;           // log(inf) -> stays 1
    if (w <= 0.0) { w = 0.0; continue; }
    w = std::clamp(kappa * (std::log(w / (1.0 - w)) + 0.5), 0.0, 1.0);
  }
  return weights;
}

model::ParamVector rlr_aggregate(const model::ParamVector& global,
                                 std::span<const model::ParamVector> updates, double threshold,
                                 double server_eta) {
  check_nonempty(updates);
  model::ParamVector::check_compatible(global, updates[0]);
  if (threshold < 0.0) throw ConfigError("rlr threshold must be nonnegative");

  const std::size_t n = updates.size();
  const std::size_t dim = global.values.size();
  model::ParamVector out = global;
  for (std::size_t d = 0; d < dim; ++d) {
    double sign_sum = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = updates[i].values[d] - global.values[d];
      sign_sum += (delta > 0.0) - (delta < 0.0);
      mean += delta;
    }
    mean /= static_cast<double>(n);
    const double rate = std::abs(sign_sum) >= threshold ? server_eta : -server_eta;
    out.values[d] += rate * mean;
  }
  return out;
}

}  // namespace floral::defense
