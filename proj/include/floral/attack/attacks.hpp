#pragma once

#include <string>

#include "floral/data/dataset.hpp"
#include "floral/model/forecaster.hpp"
#include "floral/model/param_vector.hpp"
#include "floral/util/rng.hpp"

namespace floral::attack {

enum class AttackKind {
  None,
  GaussianByzantine,   // submit N(0, sigma^2 I) in place of the honest update
  FlipData,            // targeted data poisoning, honest training
  Pgd,                 // flip + projection onto a delta-ball around the global
  ConstrainAndScale,   // flip + blended proximal objective, scaled delta
  ModelReplacement     // flip + boosted delta canceling the 1/m average
};

const char* attack_name(AttackKind kind);
AttackKind attack_from_name(const std::string& name);

struct AttackConfig {
  AttackKind kind = AttackKind::None;
  double epsilon = 0.0;     // attack ratio |C_p| / N
  bool colluding = true;
  double sigma = 1.0;       // Gaussian Byzantine scale
  double flip_budget = 0.5; // fraction of target values flipped
  double pgd_delta = 0.0;   // 0 = estimate as 0.5 * median benign delta norm
  double alpha = 0.5;       // constrain-and-scale task/stealth blend
  double scale = 0.0;       // 0 = default boost (m participants)

  void validate() const;
};

// Pure-noise Byzantine update.
model::ParamVector byzantine_update(const std::string& tag, std::size_t dim, double sigma,
                                    util::Rng& rng);

// Flips the `budget` fraction of target values with the largest distance to
// their nearest feasibility boundary ({0, 1} after normalization) to the
// opposite extreme. Inputs and dataset size are untouched.
data::ClientDataset flip_targets(const data::ClientDataset& dataset, double budget);

// Projection onto the closed L2 ball of radius delta around the global.
model::ParamVector pgd_project(const model::ParamVector& update,
                               const model::ParamVector& global, double delta);

// Trains on `poisoned` minimizing alpha * task + (1 - alpha) * ||theta -
// global||^2 and returns global + scale * (theta - global).
model::ParamVector constrain_and_scale_train(const model::ModelSpec& spec,
                                             const model::ParamVector& global,
                                             std::span<const data::Window> poisoned,
                                             double alpha, double scale,
                                             const model::SgdOptions& base, util::Rng& rng);

// global + scale * (update - global); with scale = m this makes the FedAvg
// of one attacker among m-1 exact-global peers equal `update`.
model::ParamVector model_replacement(const model::ParamVector& update,
                                     const model::ParamVector& global, double scale);

}  // namespace floral::attack
