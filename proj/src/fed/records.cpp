#include "floral/fed/records.hpp"

#include <cstdio>
#include <fstream>

namespace floral::fed {

nlohmann::json record_to_json(const RoundRecord& record) {
  nlohmann::json doc;
  doc["round"] = record.round;
  doc["sampled"] = record.sampled;
  doc["attackers_present"] = record.attackers_present;
  doc["round_scores"] = record.round_scores;
  doc["trust_scores"] = record.trust_scores;
  doc["cluster_ids"] = record.cluster_ids;
  doc["mask"] = record.mask;
  doc["mse"] = record.mse;
  doc["mae"] = record.mae;
  doc["mse_denorm"] = record.mse_denorm;
  doc["mae_denorm"] = record.mae_denorm;
  doc["fallback"] = record.fallback;
  doc["no_signal"] = record.no_signal;
  return doc;
}

void write_records(const std::string& path, const ExperimentConfig& cfg,
                   const std::vector<RoundRecord>& records) {
  std::ofstream file(path);
  if (!file) throw InputError("cannot write records file: " + path);
  nlohmann::json header;
  header["config"] = cfg.to_json();
  header["schema"] = "floral-records-v1";
  file << header.dump() << "\n";
  for (const auto& record : records) file << record_to_json(record).dump() << "\n";
}

void write_summary_csv(const std::string& path, const ExperimentConfig& cfg,
                       const std::vector<RoundRecord>& records) {
  std::ofstream file(path);
  if (!file) throw InputError("cannot write summary file: " + path);
  file << "#schema floral-summary-v1\n";
  file << "round,defense,attack,epsilon,aggregator,mse,mae,mse_denorm,mae_denorm\n";
  char buffer[64];
  for (const auto& record : records) {
    file << record.round << "," << defense::defense_name(cfg.defense.kind) << ","
         << attack::attack_name(cfg.attack.kind) << ",";
    std::snprintf(buffer, sizeof(buffer), "%g", cfg.attack.epsilon);
    file << buffer << "," << aggregator_name(cfg.aggregator);
    for (double v : {record.mse, record.mae, record.mse_denorm, record.mae_denorm}) {
      std::snprintf(buffer, sizeof(buffer), "%.10g", v);
      file << "," << buffer;
    }
    file << "\n";
  }
}

}  // namespace floral::fed
