#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "floral/data/trace.hpp"
#include "floral/stl/formula.hpp"

namespace floral::stl {

// Operational Range template: the prediction horizon is tiled by consecutive
// windows of `window` steps, and each window w on each listed channel carries
// an upper bound a_w and a lower bound b_w:
//
//   AND_w  G[w*window, min((w+1)*window, horizon)-1] (x <= a_w and x >= b_w)
struct PropertyTemplate {
  int horizon = 1;
  int window = 1;
  std::vector<int> channels = {0};

  int window_count() const { return (horizon + window - 1) / window; }

  Interval window_interval(int w) const {
    const int lo = w * window;
    const int hi = std::min((w + 1) * window, horizon) - 1;
    return {lo, hi};
  }

  std::size_t param_count() const { return 2 * channels.size() * window_count(); }

  void validate() const;
};

// Fitted template parameters. Bounds are stored channel-major:
// index(c, w) = c * window_count + w.
struct InferredProperty {
  PropertyTemplate tpl;
  std::vector<double> upper;
  std::vector<double> lower;
  double tightness = 0.0;

  double upper_at(std::size_t c, std::size_t w) const { return upper[c * wc() + w]; }
  double lower_at(std::size_t c, std::size_t w) const { return lower[c * wc() + w]; }

  // Concatenated (a, b) pairs in channel-id order; the clustering feature.
  std::vector<double> param_vector() const;

  void validate() const;

 private:
  std::size_t wc() const { return static_cast<std::size_t>(tpl.window_count()); }
};

// Tight fit on one prediction: a_w is the window maximum, b_w the window
// minimum, the closed-form minimizer of the bound gap. The returned property
// is satisfied by the prediction and fails if any bound is moved inward.
InferredProperty infer_property(const PropertyTemplate& tpl, const data::Trace& prediction);

// Envelope over several predictions: every trace satisfies the result.
InferredProperty infer_property(const PropertyTemplate& tpl,
                                std::span<const data::Trace> predictions);

// The formula for a fitted property.
FormulaPtr instantiate(const InferredProperty& property);

// Builds a formula from a flat parameter vector; used to probe candidate
// parameter values on a template.
using TemplateInstantiator = std::function<FormulaPtr(std::span<const double>)>;

// |epsilon| = max_i |p_prime[i] - p[i]| for a satisfying p and a violating
// p_prime (ContractError otherwise, including p == p_prime). Certifies how
// close a fit sits to the satisfaction boundary.
double tightness_gap(const TemplateInstantiator& make, std::span<const double> p,
                     std::span<const double> p_prime, const data::Trace& trace, int t = 0);

// Audit-log serialization.
std::string property_to_json(const InferredProperty& property);
InferredProperty property_from_json(const std::string& text);

}  // namespace floral::stl
