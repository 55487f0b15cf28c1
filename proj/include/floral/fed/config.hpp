#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "floral/attack/attacks.hpp"
#include "floral/data/dataset.hpp"
#include "floral/defense/defense.hpp"
#include "floral/fed/aggregate.hpp"
#include "floral/model/forecaster.hpp"

namespace floral::fed {

// One experiment: data source, model, training schedule, attack, defense,
// aggregator. All randomness in a run derives from `seed`.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  int rounds = 20;
  int clients = 30;
  double sample_fraction = 0.5;

  model::ModelSpec model;

  bool use_csv = false;
  data::GeneratorConfig generator;  // clients/lookback/horizon/channels/seed mirrored in
  data::CsvSource csv;

  double eta = 1e-3;
  int epochs = 3;
  int batch_size = 128;
  double test_fraction = 0.2;

  attack::AttackConfig attack;
  defense::DefenseSettings defense;
  AggregatorKind aggregator = AggregatorKind::FedAvg;
  double fedprox_mu = 0.01;

  bool denormalize_metrics = true;
  bool parallel = false;

  void validate() const;

  // Throws ConfigError naming the missing/invalid field.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

ExperimentConfig load_config_file(const std::string& path);

}  // namespace floral::fed
