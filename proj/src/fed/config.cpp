#include "floral/fed/config.hpp"

#include <fstream>

namespace floral::fed {

namespace {

using nlohmann::json;

[[noreturn]] void missing(const std::string& field) {
  throw ConfigError("missing required config field: " + field);
}

const json& need(const json& doc, const char* field) {
  if (!doc.contains(field)) missing(field);
  return doc.at(field);
}

template <class T>
T get_or(const json& doc, const char* field, T fallback) {
  if (!doc.contains(field)) return fallback;
  try {
    return doc.at(field).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field has the wrong type: ") + field);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
  if (clients < 1) throw ConfigError("clients.count must be at least 1");
  if (sample_fraction <= 0.0 || sample_fraction > 1.0)
    throw ConfigError("clients.sample_fraction must be in (0, 1]");
  if (eta < 0.0) throw ConfigError("training.eta must be nonnegative");
  if (epochs < 1) throw ConfigError("training.epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("training.batch_size must be at least 1");
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw ConfigError("training.test_fraction must be in (0, 1)");
  if (fedprox_mu < 0.0) throw ConfigError("aggregator.mu must be nonnegative");
  model.validate();
  attack.validate();
  defense.validate();
  if (!use_csv) generator.validate();
}

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  ExperimentConfig cfg;
  cfg.seed = get_or<std::uint64_t>(doc, "seed", 1);
  cfg.rounds = need(doc, "rounds").get<int>();

  const json& clients = need(doc, "clients");
  cfg.clients = need(clients, "count").get<int>();
  cfg.sample_fraction = get_or(clients, "sample_fraction", 0.5);

  const json& model = need(doc, "model");
  cfg.model.arch = model::arch_from_name(need(model, "arch").get<std::string>());
  cfg.model.lookback = get_or(model, "lookback", 8);
  cfg.model.horizon = get_or(model, "horizon", 6);
  cfg.model.channels = get_or(model, "channels", 1);
  cfg.model.hidden = get_or(model, "hidden", std::vector<int>{16});

  const json& data = need(doc, "data");
  if (data.contains("csv")) {
    cfg.use_csv = true;
    const json& csv = data.at("csv");
    cfg.csv.paths = need(csv, "files").get<std::vector<std::string>>();
    cfg.csv.lookback = cfg.model.lookback;
    cfg.csv.horizon = cfg.model.horizon;
    cfg.csv.validation_fraction = get_or(csv, "validation_fraction", 0.05);
  } else if (data.contains("generator")) {
    const json& gen = data.at("generator");
    cfg.generator.series_length = get_or(gen, "series_length", 160);
    cfg.generator.noise_sigma = get_or(gen, "noise_sigma", 0.02);
    cfg.generator.amplitude_spread = get_or(gen, "amplitude_spread", 0.2);
    cfg.generator.phase_spread = get_or(gen, "phase_spread", 0.2);
    cfg.generator.offset_spread = get_or(gen, "offset_spread", 0.2);
    cfg.generator.period = get_or(gen, "period", 24.0);
    cfg.generator.validation_fraction = get_or(gen, "validation_fraction", 0.05);
  } else {
    missing("data.generator or data.csv");
  }
  cfg.generator.clients = cfg.clients;
  cfg.generator.lookback = cfg.model.lookback;
  cfg.generator.horizon = cfg.model.horizon;
  cfg.generator.channels = cfg.model.channels;
  cfg.generator.seed = cfg.seed;

  if (doc.contains("training")) {
    const json& training = doc.at("training");
    cfg.eta = get_or(training, "eta", 1e-3);
    cfg.epochs = get_or(training, "epochs", 3);
    cfg.batch_size = get_or(training, "batch_size", 128);
    cfg.test_fraction = get_or(training, "test_fraction", 0.2);
  }

  if (doc.contains("attack")) {
    const json& attack = doc.at("attack");
    cfg.attack.kind = attack::attack_from_name(get_or<std::string>(attack, "kind", "none"));
    cfg.attack.epsilon = get_or(attack, "epsilon", 0.0);
    cfg.attack.colluding = get_or(attack, "colluding", true);
    cfg.attack.sigma = get_or(attack, "sigma", 1.0);
    cfg.attack.flip_budget = get_or(attack, "budget", 0.5);
    cfg.attack.pgd_delta = get_or(attack, "delta", 0.0);
    cfg.attack.alpha = get_or(attack, "alpha", 0.5);
    cfg.attack.scale = get_or(attack, "scale", 0.0);
  }

  if (doc.contains("defense")) {
    const json& defense = doc.at("defense");
    cfg.defense.kind = defense::defense_from_name(get_or<std::string>(defense, "kind", "none"));
    cfg.defense.gamma = get_or(defense, "gamma", 0.5);
    cfg.defense.window = get_or(defense, "window", 2);
    cfg.defense.krum_f = get_or(defense, "krum_f", -1);
    cfg.defense.multi_select = get_or(defense, "multi_select", -1);
    cfg.defense.trim_beta = get_or(defense, "trim_beta", 0.1);
    cfg.defense.rlr_threshold = get_or(defense, "rlr_threshold", 1.0);
    cfg.defense.rlr_eta = get_or(defense, "rlr_eta", 1.0);
    cfg.defense.foolsgold_kappa = get_or(defense, "foolsgold_kappa", 10.0);
  }
  cfg.defense.assumed_epsilon = cfg.attack.epsilon > 0.0 ? cfg.attack.epsilon : 0.2;

  if (doc.contains("aggregator")) {
    const json& agg = doc.at("aggregator");
    cfg.aggregator = aggregator_from_name(get_or<std::string>(agg, "kind", "fedavg"));
    cfg.fedprox_mu = get_or(agg, "mu", 0.01);
  }

  if (doc.contains("metrics"))
    cfg.denormalize_metrics = get_or(doc.at("metrics"), "denormalize", true);
  cfg.parallel = get_or(doc, "parallel", false);

  cfg.validate();
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  json doc;
  doc["seed"] = seed;
  doc["rounds"] = rounds;
  doc["clients"] = {{"count", clients}, {"sample_fraction", sample_fraction}};
  doc["model"] = {{"arch", model::arch_name(model.arch)},
                  {"lookback", model.lookback},
                  {"horizon", model.horizon},
                  {"channels", model.channels},
                  {"hidden", model.hidden}};
  if (use_csv) {
    doc["data"]["csv"] = {{"files", csv.paths},
                          {"validation_fraction", csv.validation_fraction}};
  } else {
    doc["data"]["generator"] = {{"series_length", generator.series_length},
                                {"noise_sigma", generator.noise_sigma},
                                {"amplitude_spread", generator.amplitude_spread},
                                {"phase_spread", generator.phase_spread},
                                {"offset_spread", generator.offset_spread},
                                {"period", generator.period},
                                {"validation_fraction", generator.validation_fraction}};
  }
  doc["training"] = {{"eta", eta},
                     {"epochs", epochs},
                     {"batch_size", batch_size},
                     {"test_fraction", test_fraction}};
  doc["attack"] = {{"kind", attack::attack_name(attack.kind)},
                   {"epsilon", attack.epsilon},
                   {"colluding", attack.colluding},
                   {"sigma", attack.sigma},
                   {"budget", attack.flip_budget},
                   {"delta", attack.pgd_delta},
                   {"alpha", attack.alpha},
                   {"scale", attack.scale}};
  doc["defense"] = {{"kind", defense::defense_name(defense.kind)},
                    {"gamma", defense.gamma},
                    {"window", defense.window},
                    {"krum_f", defense.krum_f},
                    {"multi_select", defense.multi_select},
                    {"trim_beta", defense.trim_beta},
                    {"rlr_threshold", defense.rlr_threshold},
                    {"rlr_eta", defense.rlr_eta},
                    {"foolsgold_kappa", defense.foolsgold_kappa}};
  doc["aggregator"] = {{"kind", aggregator_name(aggregator)}, {"mu", fedprox_mu}};
  doc["metrics"] = {{"denormalize", denormalize_metrics}};
  doc["parallel"] = parallel;
  return doc;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(file);
  } catch (const nlohmann::json::parse_error& err) {
    throw ConfigError(path + ": " + err.what());
  }
  return ExperimentConfig::from_json(doc);
}

}  // namespace floral::fed
