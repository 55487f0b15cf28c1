#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "floral/defense/defense.hpp"
#include "floral/defense/floral_defense.hpp"
#include "floral/stl/eval.hpp"
#include "floral/stl/parser.hpp"

using namespace floral;
using namespace floral::defense;
using floral::model::ParamVector;

namespace {

stl::InferredProperty range_property(double upper, double lower) {
  stl::InferredProperty p;
  p.tpl = {.horizon = 2, .window = 2, .channels = {0}};
  p.upper = {upper};
  p.lower = {lower};
  return p;
}

// Bias-only linear model: predicts `level` at every horizon step.
ParamVector constant_predictor(const model::ModelSpec& spec, double level) {
  ParamVector params{.tag = spec.tag(),
                     .values = std::vector<double>(spec.param_count(), 0.0)};
  const std::size_t in = static_cast<std::size_t>(spec.lookback) * spec.channels;
  const std::size_t out = static_cast<std::size_t>(spec.horizon) * spec.channels;
  for (std::size_t o = 0; o < out; ++o) params.values[out * in + o] = level;
  return params;
}

// Scaled last-lag model: predicts scale * (last input value) at every step.
ParamVector lag_predictor(const model::ModelSpec& spec, double scale) {
  ParamVector params{.tag = spec.tag(),
                     .values = std::vector<double>(spec.param_count(), 0.0)};
  const std::size_t in = static_cast<std::size_t>(spec.lookback) * spec.channels;
  const std::size_t out = static_cast<std::size_t>(spec.horizon) * spec.channels;
  for (std::size_t o = 0; o < out; ++o) params.values[o * in + (in - 1)] = scale;
  return params;
}

data::ServerValidationSet sine_validation(const model::ModelSpec& spec, int count) {
  data::ServerValidationSet validation;
  for (int v = 0; v < count; ++v) {
    data::Window w;
    w.input = data::Trace(spec.lookback, spec.channels);
    w.target = data::Trace(spec.horizon, spec.channels);
    for (int t = 0; t < spec.lookback; ++t)
      w.input.at(t, 0) = 0.5 + 0.3 * std::sin(0.7 * (v * spec.lookback + t));
    for (int t = 0; t < spec.horizon; ++t)
      w.target.at(t, 0) = 0.5 + 0.3 * std::sin(0.7 * (v * spec.lookback + spec.lookback + t));
    validation.windows.push_back(std::move(w));
  }
  return validation;
}

}  // namespace

TEST_CASE("robustness score reproduces the worked example") {
  auto formula = stl::parse_formula(
      "G[0,5)(x1 >= 0.2 and x1 <= 2.5 and x2 >= 6 and x2 <= 10)");
  auto prediction = data::Trace::from_rows(
      {{0.4, 4.0}, {0.45, 5.0}, {0.55, 6.0}, {0.75, 7.0}, {1.0, 9.0}});
  auto ok = per_step_satisfaction(formula, prediction);
  CHECK(ok == std::vector<bool>{false, false, true, true, true});
  CHECK(robustness_score(formula, prediction) == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("robustness score extremes") {
  auto formula = stl::parse_formula("G[0,4](x1 <= 1 and x1 >= 0)");
  auto inside = data::Trace::from_column({0.5, 0.5, 0.5, 0.5, 0.5});
  CHECK(robustness_score(formula, inside) == 1.0);
  auto outside = data::Trace::from_column({2.0, 2.0, 2.0, 2.0, 2.0});
  CHECK(robustness_score(formula, outside) == 0.0);
}

TEST_CASE("per-step satisfaction on tiled windows is point-wise") {
  // Two windows: [0,1] bounds [0,1], [2,3] bounds [0,0.5]; a step violating
  // only its own window's bound is the only one that fails.
  auto formula = stl::parse_formula(
      "G[0,1](x1 <= 1 and x1 >= 0) and G[2,3](x1 <= 0.5 and x1 >= 0)");
  auto prediction = data::Trace::from_column({0.9, 0.2, 0.6, 0.3});
  auto ok = per_step_satisfaction(formula, prediction);
  CHECK(ok == std::vector<bool>{true, true, false, true});
  CHECK(robustness_score(formula, prediction) == doctest::Approx(0.75));
}

TEST_CASE("general formulas fall back to suffix evaluation") {
  auto formula = stl::parse_formula("F[0,2](x1 >= 3)");
  auto prediction = data::Trace::from_column({1.0, 4.0, 2.0});
  auto ok = per_step_satisfaction(formula, prediction);
  // t=0: witness at 1; t=1: witness at 1; t=2: clipped window {2}, 2 < 3.
  CHECK(ok == std::vector<bool>{true, true, false});

  // Horizon precondition.
  auto wide = stl::parse_formula("G[0,9](x1 >= 0)");
  CHECK_THROWS_AS(per_step_satisfaction(wide, prediction), InputError);
}

TEST_CASE("cluster property is the parameter mean") {
  std::vector<stl::InferredProperty> members = {range_property(4.0, 2.0),
                                                range_property(6.0, 4.0)};
  auto mean = cluster_property(members);
  CHECK(mean.upper[0] == doctest::Approx(5.0));
  CHECK(mean.lower[0] == doctest::Approx(3.0));
  CHECK(mean.upper[0] >= mean.lower[0]);

  auto identity = cluster_property(std::span<const stl::InferredProperty>(&members[0], 1));
  CHECK(identity.upper == members[0].upper);
  CHECK(identity.lower == members[0].lower);

  auto other = range_property(1.0, 0.0);
  other.tpl.horizon = 4;
  other.tpl.window = 2;
  other.upper = {1.0, 1.0};
  other.lower = {0.0, 0.0};
  std::vector<stl::InferredProperty> mismatched = {members[0], other};
  CHECK_THROWS_AS(cluster_property(mismatched), ContractError);
}

TEST_CASE("global property takes the coordinate-wise lower median") {
  std::vector<stl::InferredProperty> clusters = {range_property(1.0, 0.5),
                                                 range_property(100.0, 50.0),
                                                 range_property(2.0, 1.0)};
  auto median = global_property(clusters);
  CHECK(median.upper[0] == 2.0);  // median of {1, 100, 2}
  CHECK(median.lower[0] == 1.0);

  auto single = global_property(std::span<const stl::InferredProperty>(&clusters[0], 1));
  CHECK(single.upper == clusters[0].upper);

  // Equal-size even tie: the smaller middle value (lower median).
  std::vector<stl::InferredProperty> even = {range_property(3.0, 1.0), range_property(5.0, 2.0)};
  auto tie = global_property(even);
  CHECK(tie.upper[0] == 3.0);
  CHECK(tie.lower[0] == 1.0);

  // Size-aware tie: the bigger cluster's value wins both bounds.
  std::vector<int> sizes = {2, 11};
  auto majority = global_property(even, sizes);
  CHECK(majority.upper[0] == 5.0);
  CHECK(majority.lower[0] == 2.0);

  // Equal-size disjoint clusters: both coordinates come from the lower
  // range, which stays a valid band.
  std::vector<stl::InferredProperty> disjoint = {range_property(10.0, 9.0),
                                                 range_property(2.0, 1.0)};
  auto band = global_property(disjoint);
  CHECK(band.upper[0] == 2.0);
  CHECK(band.lower[0] == 1.0);
  CHECK(band.upper[0] >= band.lower[0]);
}

TEST_CASE("global property median resists a corrupted minority") {
  std::vector<stl::InferredProperty> clusters = {range_property(1.0, 0.4),
                                                 range_property(1.1, 0.5),
                                                 range_property(0.9, 0.45)};
  auto baseline = global_property(clusters);
  // Corrupt one of three arbitrarily; the coordinate medians cannot move
  // past the remaining majority's values.
  auto corrupted = clusters;
  corrupted[1] = range_property(1e9, -1e9);
  auto attacked = global_property(corrupted);
  CHECK(attacked.upper[0] <= 1.0);
  CHECK(attacked.upper[0] >= 0.9);
  CHECK(attacked.lower[0] >= -1e9);
}

TEST_CASE("malicious mask thresholds normalized scores") {
  std::vector<double> scores = {1.0, 0.9, 0.3};
  CHECK(malicious_mask(scores, 0.5) == std::vector<std::uint8_t>{1, 1, 0});

  // gamma = 1 keeps only the argmax (and exact ties).
  CHECK(malicious_mask(scores, 1.0) == std::vector<std::uint8_t>{1, 0, 0});

  std::vector<double> equal = {0.7, 0.7, 0.7};
  CHECK(malicious_mask(equal, 1.0) == std::vector<std::uint8_t>{1, 1, 1});

  std::vector<double> zero = {0.0, 0.0};
  CHECK(malicious_mask(zero, 0.5) == std::vector<std::uint8_t>{1, 1});

  CHECK_THROWS_AS(malicious_mask(scores, 1.5), ConfigError);
}

TEST_CASE("trust updates follow the cumulative average") {
  TrustState trust(3);
  trust.update(1, 0.8);
  CHECK(trust.score[1] == doctest::Approx(0.8));
  CHECK(trust.rounds[1] == 1);

  trust.update(1, 0.4);
  CHECK(trust.score[1] == doctest::Approx(0.6));  // f=2: (0.8 + 0.4) / 2

  // Constant stream is a fixed point.
  TrustState constant(1);
  for (int i = 0; i < 5; ++i) constant.update(0, 0.35);
  CHECK(constant.score[0] == doctest::Approx(0.35));
  for (double s : constant.score) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }

  CHECK_THROWS_AS(trust.update(5, 0.1), ContractError);
  CHECK_THROWS_AS(trust.update(0, 1.5), ContractError);
}

TEST_CASE("floral round with identical updates keeps everyone") {
  model::ModelSpec spec{.arch = model::Arch::LinearAr, .lookback = 4, .horizon = 4,
                        .channels = 1};
  auto validation = sine_validation(spec, 3);
  auto update = lag_predictor(spec, 1.0);
  std::vector<ParamVector> updates(5, update);
  std::vector<int> ids = {0, 1, 2, 3, 4};
  std::vector<double> weights(5, 10.0);
  std::vector<int> steps(5, 3);
  TrustState trust(5);

  auto result = floral_round(spec, constant_predictor(spec, 0.0), updates, ids, weights, steps,
                             validation, trust, {.gamma = 0.5, .window = 2});

  CHECK(result.mask == std::vector<std::uint8_t>(5, 1));
  CHECK(*std::max_element(result.cluster_ids.begin(), result.cluster_ids.end()) == 0);
  for (double s : result.round_scores) CHECK(s == result.round_scores[0]);
  CHECK(result.new_global.values == update.values);
  CHECK_FALSE(result.fallback);
}

TEST_CASE("floral round masks the pinned-prediction attacker") {
  model::ModelSpec spec{.arch = model::Arch::LinearAr, .lookback = 4, .horizon = 4,
                        .channels = 1};
  auto validation = sine_validation(spec, 4);

  // Four benign last-lag predictors with small gain jitter; one attacker
  // whose predictions sit pinned near the upper extreme.
  std::vector<ParamVector> updates = {lag_predictor(spec, 0.98), lag_predictor(spec, 1.0),
                                      lag_predictor(spec, 1.02), lag_predictor(spec, 0.99),
                                      constant_predictor(spec, 0.995)};
  std::vector<int> ids = {0, 1, 2, 3, 4};
  std::vector<double> weights(5, 1.0);
  std::vector<int> steps(5, 3);
  TrustState trust(5);

  auto result = floral_round(spec, constant_predictor(spec, 0.0), updates, ids, weights, steps,
                             validation, trust, {.gamma = 0.5, .window = 2});

  // The attacker's score is strictly the lowest and it is masked out.
  for (int i = 0; i < 4; ++i) CHECK(result.round_scores[4] < result.round_scores[i]);
  CHECK(result.mask[4] == 0);
  for (int i = 0; i < 4; ++i) CHECK(result.mask[i] == 1);

  // Manual recomputation of each pipeline stage from the logged outputs.
  stl::PropertyTemplate tpl{.horizon = 4, .window = 2, .channels = {0}};
  std::vector<stl::InferredProperty> properties;
  for (const auto& update : updates) {
    std::vector<data::Trace> predictions;
    for (const auto& window : validation.windows)
      predictions.push_back(model::forward(spec, update, window.input));
    properties.push_back(stl::infer_property(tpl, predictions));
  }
  std::vector<std::vector<double>> features;
  for (const auto& p : properties) features.push_back(p.param_vector());
  auto partition = finch_first_partition(features);
  CHECK(partition.assignment == result.cluster_ids);

  std::vector<stl::InferredProperty> cluster_props;
  for (int k = 0; k < partition.clusters; ++k) {
    std::vector<stl::InferredProperty> members;
    for (std::size_t i = 0; i < properties.size(); ++i)
      if (partition.assignment[i] == k) members.push_back(properties[i]);
    cluster_props.push_back(cluster_property(members));
  }
  auto reference_global = global_property(cluster_props);
  CHECK(reference_global.upper == result.global_prop.upper);
  CHECK(reference_global.lower == result.global_prop.lower);

  auto formula = stl::instantiate(reference_global);
  for (std::size_t i = 0; i < updates.size(); ++i) {
    std::size_t holds = 0, total = 0;
    for (const auto& window : validation.windows) {
      auto prediction = model::forward(spec, updates[i], window.input);
      auto ok = per_step_satisfaction(formula, prediction);
      for (bool v : ok) holds += v ? 1 : 0;
      total += ok.size();
    }
    CHECK(result.round_scores[i] ==
          doctest::Approx(static_cast<double>(holds) / total).epsilon(1e-15));
  }
}

TEST_CASE("gamma zero reduces to plain aggregation") {
  model::ModelSpec spec{.arch = model::Arch::LinearAr, .lookback = 4, .horizon = 4,
                        .channels = 1};
  auto validation = sine_validation(spec, 3);
  std::vector<ParamVector> updates = {lag_predictor(spec, 1.0), constant_predictor(spec, 0.99),
                                      lag_predictor(spec, 0.9)};
  std::vector<int> ids = {0, 1, 2};
  std::vector<double> weights = {1.0, 2.0, 3.0};
  std::vector<int> steps(3, 1);
  TrustState trust(3);

  auto result = floral_round(spec, constant_predictor(spec, 0.0), updates, ids, weights, steps,
                             validation, trust, {.gamma = 0.0, .window = 2});
  CHECK(result.mask == std::vector<std::uint8_t>(3, 1));

  auto plain = fed::aggregate(fed::AggregatorKind::FedAvg, constant_predictor(spec, 0.0),
                              updates, weights, steps);
  CHECK(result.new_global.values == plain.values);
}

TEST_CASE("masked clients have zero influence on the aggregate") {
  model::ModelSpec spec{.arch = model::Arch::LinearAr, .lookback = 4, .horizon = 4,
                        .channels = 1};
  auto validation = sine_validation(spec, 4);
  // Four benign clients plus a colluding attacker pair whose predictions sit
  // pinned near the upper extreme; the pair is mutually nearest and forms
  // its own cluster, so the global property ignores its parameters.
  std::vector<ParamVector> updates = {lag_predictor(spec, 0.98),  lag_predictor(spec, 1.0),
                                      lag_predictor(spec, 1.02),  lag_predictor(spec, 0.99),
                                      constant_predictor(spec, 0.995),
                                      constant_predictor(spec, 1.0)};
  std::vector<int> ids = {0, 1, 2, 3, 4, 5};
  std::vector<double> weights(6, 1.0);
  std::vector<int> steps(6, 3);

  TrustState trust_a(6);
  auto base = floral_round(spec, constant_predictor(spec, 0.0), updates, ids, weights, steps,
                           validation, trust_a, {.gamma = 0.5, .window = 2});
  REQUIRE(base.mask[4] == 0);
  REQUIRE(base.mask[5] == 0);

  // The aggregate must equal the FedAvg over exactly the unmasked updates.
  std::vector<ParamVector> kept;
  std::vector<double> kept_w;
  std::vector<int> kept_s;
  for (std::size_t i = 0; i < updates.size(); ++i)
    if (base.mask[i]) {
      kept.push_back(updates[i]);
      kept_w.push_back(weights[i]);
      kept_s.push_back(steps[i]);
    }
  auto reference = fed::aggregate(fed::AggregatorKind::FedAvg, constant_predictor(spec, 0.0),
                                  kept, kept_w, kept_s);
  CHECK(base.new_global.values == reference.values);

  // Perturb the masked pair arbitrarily (still mutually nearest, still
  // extreme); every unmasked decision is unchanged and the new global is
  // bit-identical.
  auto perturbed = updates;
  for (double& v : perturbed[4].values) v *= 47.0;
  for (double& v : perturbed[5].values) v *= 47.3;
  TrustState trust_b(6);
  auto again = floral_round(spec, constant_predictor(spec, 0.0), perturbed, ids, weights, steps,
                            validation, trust_b, {.gamma = 0.5, .window = 2});
  REQUIRE(again.mask == base.mask);
  CHECK(again.new_global.values == base.new_global.values);
}

TEST_CASE("serial and parallel floral rounds agree bit for bit") {
  model::ModelSpec spec{.arch = model::Arch::LinearAr, .lookback = 4, .horizon = 4,
                        .channels = 1};
  auto validation = sine_validation(spec, 4);
  std::vector<ParamVector> updates = {lag_predictor(spec, 0.98), lag_predictor(spec, 1.0),
                                      lag_predictor(spec, 1.02), constant_predictor(spec, 0.995)};
  std::vector<int> ids = {0, 1, 2, 3};
  std::vector<double> weights(4, 1.0);
  std::vector<int> steps(4, 3);

  TrustState trust_a(4), trust_b(4);
  auto serial = floral_round(spec, constant_predictor(spec, 0.0), updates, ids, weights, steps,
                             validation, trust_a, {.gamma = 0.5, .window = 2, .parallel = false});
  auto parallel = floral_round(spec, constant_predictor(spec, 0.0), updates, ids, weights, steps,
                               validation, trust_b,
                               {.gamma = 0.5, .window = 2, .parallel = true});
  CHECK(serial.new_global.values == parallel.new_global.values);
  CHECK(serial.round_scores == parallel.round_scores);
  CHECK(serial.mask == parallel.mask);
}

TEST_CASE("defense factory covers the baselines") {
  model::ModelSpec spec{.arch = model::Arch::LinearAr, .lookback = 4, .horizon = 4,
                        .channels = 1};
  auto validation = sine_validation(spec, 3);
  std::vector<ParamVector> updates = {lag_predictor(spec, 1.0),  lag_predictor(spec, 0.95),
                                      lag_predictor(spec, 1.05), lag_predictor(spec, 1.02),
                                      constant_predictor(spec, 50.0),
                                      constant_predictor(spec, 50.5)};
  std::vector<int> ids = {0, 1, 2, 3, 4, 5};
  std::vector<double> weights(6, 1.0);
  std::vector<int> steps(6, 3);
  auto global = constant_predictor(spec, 0.0);

  DefenseContext ctx;
  ctx.spec = &spec;
  ctx.global = &global;
  ctx.updates = updates;
  ctx.client_ids = ids;
  ctx.weights = weights;
  ctx.local_steps = steps;
  ctx.validation = &validation;

  for (DefenseKind kind : {DefenseKind::None, DefenseKind::Floral, DefenseKind::Krum,
                           DefenseKind::MultiKrum, DefenseKind::Rfa, DefenseKind::CoordMedian,
                           DefenseKind::TrimmedMean, DefenseKind::FoolsGold, DefenseKind::Rlr}) {
    DefenseSettings settings;
    settings.kind = kind;
    auto defense = make_defense(settings, 6);
    auto outcome = defense->apply(ctx);
    CHECK(outcome.new_global.values.size() == global.values.size());
    CHECK(outcome.mask.size() == updates.size());

    // The robust selectors must not hand the outlier's model back.
    if (kind == DefenseKind::Krum || kind == DefenseKind::CoordMedian ||
        kind == DefenseKind::Floral)
      CHECK(std::abs(outcome.new_global.values.back()) < 10.0);
  }
}
