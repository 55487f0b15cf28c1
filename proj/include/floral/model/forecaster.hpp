#pragma once

#include <span>
#include <string>
#include <vector>

#include "floral/data/dataset.hpp"
#include "floral/data/trace.hpp"
#include "floral/model/param_vector.hpp"
#include "floral/util/rng.hpp"

namespace floral::model {

enum class Arch { LinearAr, Mlp, VanillaRnn };

const char* arch_name(Arch arch);
Arch arch_from_name(const std::string& name);

// Small forecasting models mapping an L x M history to a tau x M prediction,
// trained with mean-squared-error loss.
//   LinearAr:   dense linear map from the flattened history plus bias.
//   Mlp:        tanh hidden layers, linear output.
//   VanillaRnn: tanh recurrence over the history, linear readout from the
//               final hidden state; hidden size = hidden[0].
struct ModelSpec {
  Arch arch = Arch::LinearAr;
  int lookback = 8;
  int horizon = 6;
  int channels = 1;
  std::vector<int> hidden = {16};

  std::string tag() const;
  std::size_t param_count() const;
  void validate() const;
};

// Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization.
ParamVector init_params(const ModelSpec& spec, util::Rng& rng);

// Deterministic prediction for one history window.
data::Trace forward(const ModelSpec& spec, const ParamVector& params, const data::Trace& input);

// Gradient of the mean MSE loss over the batch (mean over batch elements,
// horizon steps, and channels).
ParamVector grad(const ModelSpec& spec, const ParamVector& params,
                 std::span<const data::Window> batch);

double mse_loss(const ModelSpec& spec, const ParamVector& params,
                std::span<const data::Window> batch);

struct SgdOptions {
  double eta = 1e-3;
  int epochs = 3;
  int batch_size = 128;
  // Scales the task gradient; attacks blend it against the proximal pull.
  double task_weight = 1.0;
  // Adds prox_mu * (theta - *prox_ref) to the gradient when prox_ref is set.
  double prox_mu = 0.0;
  const ParamVector* prox_ref = nullptr;
  // L2 gradient clipping; 0 disables. Vanilla RNNs clip at 5 by default.
  double clip_norm = 0.0;
};

// Mini-batch SGD from `start`; batch order is drawn from `rng`, so a fixed
// seed reproduces the result bit for bit.
ParamVector local_sgd(const ModelSpec& spec, const ParamVector& start,
                      std::span<const data::Window> windows, const SgdOptions& options,
                      util::Rng& rng);

}  // namespace floral::model
