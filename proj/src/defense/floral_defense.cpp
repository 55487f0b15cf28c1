#include "floral/defense/floral_defense.hpp"

#include <algorithm>
#include <cmath>

#include "floral/stl/eval.hpp"
#include "floral/util/parallel.hpp"

namespace floral::defense {

void TrustState::update(int client, double round_score) {
  if (client < 0 || client >= static_cast<int>(score.size()))
    throw ContractError("trust update for an unknown client id");
  if (round_score < 0.0 || round_score > 1.0)
    throw ContractError("round score must lie in [0, 1]");
  auto& f = rounds[static_cast<std::size_t>(client)];
  auto& theta = score[static_cast<std::size_t>(client)];
  f += 1;
  theta = (static_cast<double>(f - 1) / f) * theta + round_score / f;
}

namespace {

// One windowed bound group: within [window.lo, window.hi] the predicate
// conjunction `body` must hold; bare predicates cover every step.
struct AnchoredGroup {
  stl::Interval window;
  std::vector<stl::FormulaPtr> predicates;
};

bool collect_predicates(const stl::FormulaPtr& f, std::vector<stl::FormulaPtr>& out) {
  switch (f->kind()) {
    case stl::NodeKind::Predicate:
      out.push_back(f);
      return true;
    case stl::NodeKind::Not:
      if (f->left()->kind() != stl::NodeKind::Predicate) return false;
      out.push_back(f);
      return true;
    case stl::NodeKind::And:
      return collect_predicates(f->left(), out) && collect_predicates(f->right(), out);
    default:
      return false;
  }
}

// Splits a conjunction of G-windows over predicate bodies (plus bare
// predicates). Returns false for any other shape.
bool decompose_anchored(const stl::FormulaPtr& f, std::vector<AnchoredGroup>& groups,
                        int horizon) {
  switch (f->kind()) {
    case stl::NodeKind::And:
      return decompose_anchored(f->left(), groups, horizon) &&
             decompose_anchored(f->right(), groups, horizon);
    case stl::NodeKind::Always: {
      AnchoredGroup group;
      group.window = f->interval();
      if (!collect_predicates(f->left(), group.predicates)) return false;
      groups.push_back(std::move(group));
      return true;
    }
    case stl::NodeKind::Predicate:
    case stl::NodeKind::Not: {
      AnchoredGroup group;
      group.window = {0, horizon - 1};
      if (!collect_predicates(f, group.predicates)) return false;
      groups.push_back(std::move(group));
      return true;
    }
    default:
      return false;
  }
}

bool predicate_at(const stl::FormulaPtr& f, const data::Trace& trace, int t) {
  // Predicates and negated predicates only; evaluated through the core
  // evaluator to share the comparator and channel checks.
  return stl::eval_qualitative(f, trace, t);
}

}  // namespace

std::vector<bool> per_step_satisfaction(const stl::FormulaPtr& property,
                                        const data::Trace& prediction) {
  if (!property) throw SchemaError("null property formula");
  prediction.require_finite();
  const int steps = static_cast<int>(prediction.steps());
  if (stl::formula_horizon(property) >= steps + 0)
    throw InputError("prediction horizon shorter than the property horizon");

  std::vector<AnchoredGroup> groups;
  if (decompose_anchored(property, groups, steps)) {
    std::vector<bool> ok(static_cast<std::size_t>(steps), true);
    for (int t = 0; t < steps; ++t) {
      for (const auto& group : groups) {
        if (t < group.window.lo || t > group.window.hi) continue;
        for (const auto& predicate : group.predicates) {
          if (!predicate_at(predicate, prediction, t)) {
            ok[static_cast<std::size_t>(t)] = false;
            break;
          }
        }
        if (!ok[static_cast<std::size_t>(t)]) break;
      }
    }
    return ok;
  }
  // General formulas: suffix evaluation at each step, with the usual window
  // clipping rules.
  return stl::satisfaction_vector(property, prediction);
}

double robustness_score(const stl::FormulaPtr& property, const data::Trace& prediction) {
  const auto ok = per_step_satisfaction(property, prediction);
  std::size_t holds = 0;
  for (bool v : ok) holds += v ? 1 : 0;
  return static_cast<double>(holds) / static_cast<double>(ok.size());
}

stl::InferredProperty cluster_property(std::span<const stl::InferredProperty> members) {
  if (members.empty()) throw InputError("cluster property needs at least one member");
  const auto& tpl = members.front().tpl;
  for (const auto& m : members) {
    if (m.tpl.horizon != tpl.horizon || m.tpl.window != tpl.window ||
        m.tpl.channels != tpl.channels)
      throw ContractError("cluster members use different templates");
    if (m.upper.size() != members.front().upper.size())
      throw ContractError("cluster members differ in parameter count");
  }

  stl::InferredProperty mean;
  mean.tpl = tpl;
  mean.upper.assign(members.front().upper.size(), 0.0);
  mean.lower.assign(members.front().lower.size(), 0.0);
  for (const auto& m : members) {
    for (std::size_t i = 0; i < mean.upper.size(); ++i) {
      mean.upper[i] += m.upper[i];
      mean.lower[i] += m.lower[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (std::size_t i = 0; i < mean.upper.size(); ++i) {
    mean.upper[i] *= inv;
    mean.lower[i] *= inv;
  }
  return mean;
}

namespace {

// Coordinate-wise median over cluster values. Odd counts take the exact
// median. Even counts have two middle values; the tie goes to the value from
// the larger cluster (poisoned clusters are assumed the minority), then to
// the smaller value. sizes empty = all clusters weighted equally.
double cluster_median(std::vector<std::pair<double, int>>& column) {
  std::sort(column.begin(), column.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t k = column.size();
  if (k % 2 == 1) return column[k / 2].first;
  const auto& lo = column[k / 2 - 1];
  const auto& hi = column[k / 2];
  return (hi.second > lo.second) ? hi.first : lo.first;
}

}  // namespace

stl::InferredProperty global_property(std::span<const stl::InferredProperty> clusters,
                                      std::span<const int> sizes) {
  if (clusters.empty()) throw InputError("global property needs at least one cluster");
  if (!sizes.empty() && sizes.size() != clusters.size())
    throw ContractError("cluster sizes must match the cluster count");
  if (clusters.size() == 1) return clusters.front();

  stl::InferredProperty median;
  median.tpl = clusters.front().tpl;
  median.upper.resize(clusters.front().upper.size());
  median.lower.resize(clusters.front().lower.size());

  std::vector<std::pair<double, int>> column(clusters.size());
  for (std::size_t i = 0; i < median.upper.size(); ++i) {
    for (std::size_t k = 0; k < clusters.size(); ++k)
      column[k] = {clusters[k].upper[i], sizes.empty() ? 1 : sizes[k]};
    median.upper[i] = cluster_median(column);
    for (std::size_t k = 0; k < clusters.size(); ++k)
      column[k] = {clusters[k].lower[i], sizes.empty() ? 1 : sizes[k]};
    median.lower[i] = cluster_median(column);
    // Per-coordinate medians of disjoint ranges can cross; collapse the
    // empty band to its midpoint.
    if (median.upper[i] < median.lower[i]) {
      const double mid = 0.5 * (median.upper[i] + median.lower[i]);
      median.upper[i] = mid;
      median.lower[i] = mid;
    }
  }
  return median;
}

std::vector<std::uint8_t> malicious_mask(std::span<const double> scores, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must be in [0, 1]");
  if (scores.empty()) throw InputError("mask needs at least one score");

  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<std::uint8_t> mask(scores.size(), 1);
  if (top <= 0.0) return mask;  // no signal; keep everyone

  for (std::size_t i = 0; i < scores.size(); ++i)
    mask[i] = (scores[i] / top >= gamma) ? 1 : 0;
  return mask;
}

FloralRoundResult floral_round(const model::ModelSpec& spec, const model::ParamVector& global,
                               std::span<const model::ParamVector> updates,
                               std::span<const int> client_ids,
                               std::span<const double> weights, std::span<const int> local_steps,
                               const data::ServerValidationSet& validation,
                               TrustState& trust, const FloralSettings& settings) {
  const std::size_t m = updates.size();
  if (m < 1) throw InputError("defense round needs at least one update");
  if (client_ids.size() != m || weights.size() != m || local_steps.size() != m)
    throw ContractError("per-client spans must share one length");
  if (validation.windows.empty()) throw InputError("defense round needs a validation set");

  stl::PropertyTemplate tpl;
  tpl.horizon = spec.horizon;
  tpl.window = std::min(settings.window, spec.horizon);
  tpl.channels.clear();
  for (int c = 0; c < spec.channels; ++c) tpl.channels.push_back(c);
  tpl.validate();

  // Per-client predictions on the validation windows and the inferred local
  // property. Clients are independent; the loop can fan out.
  std::vector<std::vector<data::Trace>> predictions(m);
  std::vector<stl::InferredProperty> properties(m);
  util::parallel_for(m, settings.parallel, [&](std::size_t i) {
    auto& mine = predictions[i];
    mine.reserve(validation.windows.size());
    for (const auto& window : validation.windows)
      mine.push_back(model::forward(spec, updates[i], window.input));
    properties[i] = stl::infer_property(tpl, mine);
  });

  // Cluster clients by their property parameter vectors.
  std::vector<std::vector<double>> features(m);
  for (std::size_t i = 0; i < m; ++i) features[i] = properties[i].param_vector();
  const ClusterPartition partition = finch_first_partition(features);

  std::vector<stl::InferredProperty> cluster_props;
  std::vector<int> cluster_sizes;
  cluster_props.reserve(static_cast<std::size_t>(partition.clusters));
  for (int k = 0; k < partition.clusters; ++k) {
    std::vector<stl::InferredProperty> members;
    for (std::size_t i = 0; i < m; ++i)
      if (partition.assignment[i] == k) members.push_back(properties[i]);
    cluster_props.push_back(cluster_property(members));
    cluster_sizes.push_back(static_cast<int>(members.size()));
  }

  FloralRoundResult result;
  result.global_prop = global_property(cluster_props, cluster_sizes);
  const stl::FormulaPtr property = stl::instantiate(result.global_prop);

  // Fraction of satisfied steps pooled over all validation predictions.
  result.round_scores.assign(m, 0.0);
  util::parallel_for(m, settings.parallel, [&](std::size_t i) {
    std::size_t holds = 0, total = 0;
    for (const auto& prediction : predictions[i]) {
      const auto ok = per_step_satisfaction(property, prediction);
      for (bool v : ok) holds += v ? 1 : 0;
      total += ok.size();
    }
    result.round_scores[i] = static_cast<double>(holds) / static_cast<double>(total);
  });

  // Cumulative trust, then the mask over the participants' trust scores.
  result.trust_scores.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    trust.update(client_ids[i], result.round_scores[i]);
    result.trust_scores[i] = trust.score[static_cast<std::size_t>(client_ids[i])];
  }
  result.mask = malicious_mask(result.trust_scores, settings.gamma);
  result.no_signal =
      *std::max_element(result.trust_scores.begin(), result.trust_scores.end()) <= 0.0;
  result.cluster_ids = partition.assignment;

  std::vector<model::ParamVector> kept;
  std::vector<double> kept_weights;
  std::vector<int> kept_steps;
  for (std::size_t i = 0; i < m; ++i) {
    if (!result.mask[i]) continue;
    kept.push_back(updates[i]);
    kept_weights.push_back(weights[i]);
    kept_steps.push_back(local_steps[i]);
  }
  if (kept.empty()) {
    // Degenerate round: nothing survived the mask. Keep the previous global
    // and flag it.
    result.new_global = global;
    result.fallback = true;
    return result;
  }
  result.new_global =
      fed::aggregate(settings.aggregator, global, kept, kept_weights, kept_steps);
  return result;
}

}  // namespace floral::defense
