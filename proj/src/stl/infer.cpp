#include "floral/stl/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "floral/stl/eval.hpp"

namespace floral::stl {

void PropertyTemplate::validate() const {
  if (window < 1) throw ConfigError("template window must be at least one step");
  if (horizon < window) throw ConfigError("template horizon must cover at least one window");
  if (channels.empty()) throw ConfigError("template needs at least one channel");
  for (int c : channels)
    if (c < 0) throw ConfigError("template channel ids must be nonnegative");
}

std::vector<double> InferredProperty::param_vector() const {
  std::vector<double> flat;
  flat.reserve(upper.size() * 2);
  for (std::size_t i = 0; i < upper.size(); ++i) {
    flat.push_back(upper[i]);
    flat.push_back(lower[i]);
  }
  return flat;
}

void InferredProperty::validate() const {
  tpl.validate();
  const std::size_t expect = tpl.channels.size() * wc();
  if (upper.size() != expect || lower.size() != expect)
    throw SchemaError("property parameter arrays do not match the template");
  for (std::size_t i = 0; i < upper.size(); ++i)
    if (!(upper[i] >= lower[i]))
      throw SchemaError("property upper bound below its lower bound");
}

InferredProperty infer_property(const PropertyTemplate& tpl, const data::Trace& prediction) {
  return infer_property(tpl, std::span<const data::Trace>(&prediction, 1));
}

InferredProperty infer_property(const PropertyTemplate& tpl,
                                std::span<const data::Trace> predictions) {
  tpl.validate();
  if (predictions.empty()) throw InputError("property inference needs at least one prediction");

  const std::size_t wc = static_cast<std::size_t>(tpl.window_count());
  InferredProperty property;
  property.tpl = tpl;
  property.upper.assign(tpl.channels.size() * wc, -std::numeric_limits<double>::infinity());
  property.lower.assign(tpl.channels.size() * wc, std::numeric_limits<double>::infinity());

  for (const data::Trace& prediction : predictions) {
    prediction.require_finite();
    if (static_cast<int>(prediction.steps()) < tpl.horizon)
      throw InputError("prediction shorter than the template horizon");
    for (std::size_t ci = 0; ci < tpl.channels.size(); ++ci) {
      const int channel = tpl.channels[ci];
      if (channel >= static_cast<int>(prediction.channels()))
        throw SchemaError("template channel outside the prediction");
      for (std::size_t w = 0; w < wc; ++w) {
        const Interval range = tpl.window_interval(static_cast<int>(w));
        double& a = property.upper[ci * wc + w];
        double& b = property.lower[ci * wc + w];
        for (int s = range.lo; s <= range.hi; ++s) {
          const double v = prediction.at(static_cast<std::size_t>(s),
                                         static_cast<std::size_t>(channel));
          a = std::max(a, v);
          b = std::min(b, v);
        }
      }
    }
  }
  return property;
}

FormulaPtr instantiate(const InferredProperty& property) {
  property.validate();
  const auto& tpl = property.tpl;
  const std::size_t wc = static_cast<std::size_t>(tpl.window_count());

  std::vector<FormulaPtr> parts;
  parts.reserve(tpl.channels.size() * wc);
  for (std::size_t ci = 0; ci < tpl.channels.size(); ++ci) {
    const int channel = tpl.channels[ci];
    for (std::size_t w = 0; w < wc; ++w) {
      const Interval range = tpl.window_interval(static_cast<int>(w));
      FormulaPtr bounds = Formula::conjunction(pred_le(channel, property.upper_at(ci, w)),
                                               pred_ge(channel, property.lower_at(ci, w)));
      parts.push_back(Formula::always(range, std::move(bounds)));
    }
  }
  return conjoin(parts);
}

double tightness_gap(const TemplateInstantiator& make, std::span<const double> p,
                     std::span<const double> p_prime, const data::Trace& trace, int t) {
  if (p.size() != p_prime.size())
    throw ContractError("parameter vectors differ in length");
  if (std::equal(p.begin(), p.end(), p_prime.begin()))
    throw ContractError("tightness gap needs two distinct parameter vectors");
  if (eval_robustness(make(p), trace, t) < 0.0)
    throw ContractError("p must satisfy the formula");
  if (eval_robustness(make(p_prime), trace, t) >= 0.0)
    throw ContractError("p_prime must violate the formula");

  double gap = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) gap = std::max(gap, std::abs(p_prime[i] - p[i]));
  return gap;
}

std::string property_to_json(const InferredProperty& property) {
  nlohmann::json doc;
  doc["template"] = {{"kind", "operational_range"},
                     {"horizon", property.tpl.horizon},
                     {"window", property.tpl.window},
                     {"channels", property.tpl.channels}};
  doc["upper"] = property.upper;
  doc["lower"] = property.lower;
  doc["tightness"] = property.tightness;
  return doc.dump(2);
}

InferredProperty property_from_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  InferredProperty property;
  const auto& tpl = doc.at("template");
  if (tpl.at("kind").get<std::string>() != "operational_range")
    throw SchemaError("unknown property template kind");
  property.tpl.horizon = tpl.at("horizon").get<int>();
  property.tpl.window = tpl.at("window").get<int>();
  property.tpl.channels = tpl.at("channels").get<std::vector<int>>();
  property.upper = doc.at("upper").get<std::vector<double>>();
  property.lower = doc.at("lower").get<std::vector<double>>();
  property.tightness = doc.value("tightness", 0.0);
  property.validate();
  return property;
}

}  // namespace floral::stl
