#include "floral/defense/defense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "floral/defense/robust_stats.hpp"

namespace floral::defense {

const char* defense_name(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::None: return "none";
    case DefenseKind::Floral: return "floral";
    case DefenseKind::Krum: return "krum";
    case DefenseKind::MultiKrum: return "multi_krum";
    case DefenseKind::Rfa: return "rfa";
    case DefenseKind::CoordMedian: return "coord_median";
    case DefenseKind::TrimmedMean: return "trimmed_mean";
    case DefenseKind::FoolsGold: return "foolsgold";
    case DefenseKind::Rlr: return "rlr";
  }
  return "?";
}

DefenseKind defense_from_name(const std::string& name) {
  if (name == "none") return DefenseKind::None;
  if (name == "floral") return DefenseKind::Floral;
  if (name == "krum") return DefenseKind::Krum;
  if (name == "multi_krum" || name == "multikrum") return DefenseKind::MultiKrum;
  if (name == "rfa" || name == "geometric_median") return DefenseKind::Rfa;
  if (name == "coord_median" || name == "median") return DefenseKind::CoordMedian;
  if (name == "trimmed_mean") return DefenseKind::TrimmedMean;
  if (name == "foolsgold") return DefenseKind::FoolsGold;
  if (name == "rlr") return DefenseKind::Rlr;
  throw ConfigError("unknown defense: " + name);
}

void DefenseSettings::validate() const {
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("defense gamma must be in [0, 1]");
  if (window < 1) throw ConfigError("defense window must be at least one step");
  if (trim_beta < 0.0 || trim_beta >= 0.5) throw ConfigError("trim beta must be in [0, 0.5)");
  if (rlr_threshold < 0.0) throw ConfigError("rlr threshold must be nonnegative");
  if (foolsgold_kappa <= 0.0) throw ConfigError("foolsgold kappa must be positive");
  if (assumed_epsilon < 0.0 || assumed_epsilon > 1.0)
    throw ConfigError("assumed epsilon must be in [0, 1]");
}

namespace {

std::vector<std::uint8_t> ones(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

int default_krum_f(const DefenseSettings& settings, std::size_t m) {
  if (settings.krum_f >= 0) return settings.krum_f;
  return std::max(static_cast<int>(std::floor(settings.assumed_epsilon * static_cast<double>(m))),
                  1);
}

class NoDefense final : public Defense {
 public:
  DefenseOutcome apply(const DefenseContext& ctx) override {
    DefenseOutcome out;
    out.mask = ones(ctx.updates.size());
    out.new_global =
        fed::aggregate(ctx.aggregator, *ctx.global, ctx.updates, ctx.weights, ctx.local_steps);
    out.scores.assign(ctx.updates.size(), 1.0);
    out.cluster_ids.assign(ctx.updates.size(), -1);
    return out;
  }
};

class FloralDefense final : public Defense {
 public:
  FloralDefense(const DefenseSettings& settings, int total_clients)
      : settings_(settings), trust_(total_clients) {}

  DefenseOutcome apply(const DefenseContext& ctx) override {
    FloralSettings fs;
    fs.gamma = settings_.gamma;
    fs.window = settings_.window;
    fs.aggregator = ctx.aggregator;
    fs.parallel = ctx.parallel;
    auto round = floral_round(*ctx.spec, *ctx.global, ctx.updates, ctx.client_ids, ctx.weights,
                              ctx.local_steps, *ctx.validation, trust_, fs);
    DefenseOutcome out;
    out.mask = std::move(round.mask);
    out.new_global = std::move(round.new_global);
    out.scores = std::move(round.trust_scores);
    out.round_scores = std::move(round.round_scores);
    out.cluster_ids = std::move(round.cluster_ids);
    out.fallback = round.fallback;
    out.no_signal = round.no_signal;
    return out;
  }

  const TrustState& trust() const { return trust_; }

 private:
  DefenseSettings settings_;
  TrustState trust_;
};

// Selection defenses expose which updates made it into the aggregate via the
// mask; scores carry the per-client statistic where one exists.
class KrumDefense final : public Defense {
 public:
  KrumDefense(const DefenseSettings& settings, bool multi) : settings_(settings), multi_(multi) {}

  DefenseOutcome apply(const DefenseContext& ctx) override {
    const std::size_t m = ctx.updates.size();
    const int f = default_krum_f(settings_, m);
    DefenseOutcome out;
    out.mask.assign(m, 0);
    out.scores.assign(m, 0.0);
    out.cluster_ids.assign(m, -1);
    if (multi_) {
      int select = settings_.multi_select;
      if (select < 0) select = std::max(1, static_cast<int>(m) - f - 2);
      select = std::min<int>(select, static_cast<int>(m));
      out.new_global = multi_krum(ctx.updates, f, select);
      // Mark the selected set by re-deriving the score order.
      auto chosen = selected_indices(ctx.updates, f, select);
      for (auto i : chosen) out.mask[i] = 1;
    } else {
      const std::size_t winner = krum_select(ctx.updates, f);
      out.new_global = ctx.updates[winner];
      out.mask[winner] = 1;
    }
    return out;
  }

 private:
  static std::vector<std::size_t> selected_indices(std::span<const model::ParamVector> updates,
                                                   int f, int select);

  DefenseSettings settings_;
  bool multi_;
};

std::vector<std::size_t> KrumDefense::selected_indices(
    std::span<const model::ParamVector> updates, int f, int select) {
  // Same ordering rule as multi_krum.
  const std::size_t n = updates.size();
  std::vector<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) {
        const double d = model::l2_distance(updates[i], updates[j]);
        row.push_back(d * d);
      }
    std::sort(row.begin(), row.end());
    for (std::size_t k = 0; k < n - static_cast<std::size_t>(f) - 2; ++k) scores[i] += row[k];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  order.resize(static_cast<std::size_t>(select));
  return order;
}

class RfaDefense final : public Defense {
 public:
  DefenseOutcome apply(const DefenseContext& ctx) override {
    auto result = geometric_median(ctx.updates, ctx.weights);
    DefenseOutcome out;
    out.mask = ones(ctx.updates.size());
    out.new_global = std::move(result.point);
    out.scores.assign(ctx.updates.size(), 1.0);
    out.cluster_ids.assign(ctx.updates.size(), -1);
    out.fallback = !result.converged;
    return out;
  }
};

class MedianDefense final : public Defense {
 public:
  MedianDefense(const DefenseSettings& settings, bool trimmed)
      : settings_(settings), trimmed_(trimmed) {}

  DefenseOutcome apply(const DefenseContext& ctx) override {
    DefenseOutcome out;
    out.mask = ones(ctx.updates.size());
    out.new_global = trimmed_ ? trimmed_mean(ctx.updates, settings_.trim_beta)
                              : coordinate_median(ctx.updates);
    out.scores.assign(ctx.updates.size(), 1.0);
    out.cluster_ids.assign(ctx.updates.size(), -1);
    return out;
  }

 private:
  DefenseSettings settings_;
  bool trimmed_;
};

class FoolsGoldDefense final : public Defense {
 public:
  FoolsGoldDefense(const DefenseSettings& settings, int total_clients)
      : settings_(settings), histories_(static_cast<std::size_t>(total_clients)) {}

  DefenseOutcome apply(const DefenseContext& ctx) override {
    const std::size_t m = ctx.updates.size();
    const std::size_t dim = ctx.global->values.size();

    // Accumulate this round's deltas into the per-client histories.
    for (std::size_t i = 0; i < m; ++i) {
      auto& h = histories_[static_cast<std::size_t>(ctx.client_ids[i])];
      if (h.empty()) h.assign(dim, 0.0);
      for (std::size_t d = 0; d < dim; ++d)
        h[d] += ctx.updates[i].values[d] - ctx.global->values[d];
    }

    std::vector<std::vector<double>> active;
    active.reserve(m);
    for (std::size_t i = 0; i < m; ++i)
      active.push_back(histories_[static_cast<std::size_t>(ctx.client_ids[i])]);
    auto weights = foolsgold_weights(active, settings_.foolsgold_kappa);

    // Learning-rate weighted delta average; weight zero removes a client.
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += ctx.weights[i];
    model::ParamVector out_global = *ctx.global;
    for (std::size_t i = 0; i < m; ++i)
      out_global.axpy(weights[i] * ctx.weights[i] / total, ctx.updates[i] - *ctx.global);

    DefenseOutcome out;
    out.new_global = std::move(out_global);
    out.scores = weights;
    out.mask.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) out.mask[i] = weights[i] > 0.0 ? 1 : 0;
    out.cluster_ids.assign(m, -1);
    return out;
  }

 private:
  DefenseSettings settings_;
  std::vector<std::vector<double>> histories_;
};

class RlrDefense final : public Defense {
 public:
  explicit RlrDefense(const DefenseSettings& settings) : settings_(settings) {}

  DefenseOutcome apply(const DefenseContext& ctx) override {
    DefenseOutcome out;
    out.mask = ones(ctx.updates.size());
    out.new_global =
        rlr_aggregate(*ctx.global, ctx.updates, settings_.rlr_threshold, settings_.rlr_eta);
    out.scores.assign(ctx.updates.size(), 1.0);
    out.cluster_ids.assign(ctx.updates.size(), -1);
    return out;
  }

 private:
  DefenseSettings settings_;
};

}  // namespace

std::unique_ptr<Defense> make_defense(const DefenseSettings& settings, int total_clients) {
  settings.validate();
  switch (settings.kind) {
    case DefenseKind::None: return std::make_unique<NoDefense>();
    case DefenseKind::Floral: return std::make_unique<FloralDefense>(settings, total_clients);
    case DefenseKind::Krum: return std::make_unique<KrumDefense>(settings, false);
    case DefenseKind::MultiKrum: return std::make_unique<KrumDefense>(settings, true);
    case DefenseKind::Rfa: return std::make_unique<RfaDefense>();
    case DefenseKind::CoordMedian: return std::make_unique<MedianDefense>(settings, false);
    case DefenseKind::TrimmedMean: return std::make_unique<MedianDefense>(settings, true);
    case DefenseKind::FoolsGold:
      return std::make_unique<FoolsGoldDefense>(settings, total_clients);
    case DefenseKind::Rlr: return std::make_unique<RlrDefense>(settings);
  }
  throw ConfigError("unknown defense");
}

}  // namespace floral::defense
