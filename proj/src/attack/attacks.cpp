#include "floral/attack/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace floral::attack {

const char* attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::GaussianByzantine: return "byzantine";
    case AttackKind::FlipData: return "flip";
    case AttackKind::Pgd: return "pgd";
    case AttackKind::ConstrainAndScale: return "constrain_scale";
    case AttackKind::ModelReplacement: return "model_replacement";
  }
  return "?";
}

AttackKind attack_from_name(const std::string& name) {
  if (name == "none") return AttackKind::None;
  if (name == "byzantine" || name == "gaussian") return AttackKind::GaussianByzantine;
  if (name == "flip" || name == "targeted") return AttackKind::FlipData;
  if (name == "pgd") return AttackKind::Pgd;
  if (name == "constrain_scale" || name == "constrain-and-scale")
    return AttackKind::ConstrainAndScale;
  if (name == "model_replacement" || name == "replacement") return AttackKind::ModelReplacement;
  throw ConfigError("unknown attack kind: " + name);
}

void AttackConfig::validate() const {
  if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("attack ratio must be in [0, 1]");
  if (kind == AttackKind::None) return;
  if (kind == AttackKind::GaussianByzantine && sigma <= 0.0)
    throw ConfigError("byzantine sigma must be positive");
  if (kind != AttackKind::GaussianByzantine && (flip_budget <= 0.0 || flip_budget > 1.0))
    throw ConfigError("flip budget must be in (0, 1]");
  if (kind == AttackKind::Pgd && pgd_delta < 0.0)
    throw ConfigError("pgd delta must be nonnegative");
  if (kind == AttackKind::ConstrainAndScale && (alpha <= 0.0 || alpha >= 1.0))
    throw ConfigError("constrain-and-scale alpha must be in (0, 1)");
  if (scale < 0.0) throw ConfigError("attack scale must be nonnegative");
}

model::ParamVector byzantine_update(const std::string& tag, std::size_t dim, double sigma,
                                    util::Rng& rng) {
  if (dim < 1) throw ConfigError("byzantine update needs a positive dimension");
  model::ParamVector noise;
  noise.tag = tag;
  noise.values.resize(dim);
  for (double& v : noise.values) v = sigma == 0.0 ? 0.0 : sigma * rng.normal();
  return noise;
}

data::ClientDataset flip_targets(const data::ClientDataset& dataset, double budget) {
  if (budget <= 0.0 || budget > 1.0) throw ConfigError("flip budget must be in (0, 1]");

  // Rank every target value by its distance to the nearest boundary of the
  // [0, 1] feasibility domain.
  struct Entry {
    double distance;
    std::size_t window;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  for (std::size_t w = 0; w < dataset.windows.size(); ++w) {
    const auto& values = dataset.windows[w].target.values();
    for (std::size_t o = 0; o < values.size(); ++o) {
      const double y = values[o];
      entries.push_back({std::min(y - 0.0, 1.0 - y), w, o});
    }
  }
  if (entries.empty()) throw InputError("flip attack over an empty dataset");

  const std::size_t flips = std::min(
      entries.size(),
      static_cast<std::size_t>(std::ceil(budget * static_cast<double>(entries.size()))));
  // Largest distance first; ties resolved by flattened index order.
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.distance > b.distance;
  });

  data::ClientDataset poisoned = dataset;
  for (std::size_t i = 0; i < flips; ++i) {
    double& y = poisoned.windows[entries[i].window].target.values()[entries[i].offset];
    // Equidistant values flip toward the upper extreme.
    y = (y < 0.5) ? 1.0 : (y > 0.5) ? 0.0 : 1.0;
  }
  return poisoned;
}

model::ParamVector pgd_project(const model::ParamVector& update,
                               const model::ParamVector& global, double delta) {
  model::ParamVector::check_compatible(update, global);
  if (std::isinf(delta)) return update;
  const double distance = model::l2_distance(update, global);
  if (distance <= delta) return update;
  model::ParamVector projected = global;
  projected.axpy(delta / distance, update - global);
  return projected;
}

model::ParamVector constrain_and_scale_train(const model::ModelSpec& spec,
                                             const model::ParamVector& global,
                                             std::span<const data::Window> poisoned,
                                             double alpha, double scale,
                                             const model::SgdOptions& base, util::Rng& rng) {
  if (alpha <= 0.0 || alpha > 1.0) throw ConfigError("alpha must be in (0, 1]");
  model::SgdOptions options = base;
  options.task_weight = alpha;
  // d/dtheta of (1 - alpha) * ||theta - global||^2.
  options.prox_mu = 2.0 * (1.0 - alpha);
  options.prox_ref = &global;
  auto trained = model::local_sgd(spec, global, poisoned, options, rng);
  return model_replacement(trained, global, scale);
}

model::ParamVector model_replacement(const model::ParamVector& update,
                                     const model::ParamVector& global, double scale) {
  model::ParamVector::check_compatible(update, global);
  if (scale == 1.0) return update;
  model::ParamVector boosted = global;
  boosted.axpy(scale, update - global);
  return boosted;
}

}  // namespace floral::attack
