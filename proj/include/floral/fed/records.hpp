#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "floral/fed/config.hpp"
#include "floral/model/param_vector.hpp"

namespace floral::fed {

// Per-round ledger entry. wall_seconds is diagnostic only and deliberately
// left out of the serialized record, which must be byte-identical across
// reruns of one config.
struct RoundRecord {
  int round = 0;
  std::vector<int> sampled;
  std::vector<int> attackers_present;
  std::vector<double> round_scores;
  std::vector<double> trust_scores;
  std::vector<int> cluster_ids;
  std::vector<std::uint8_t> mask;
  double mse = 0.0;
  double mae = 0.0;
  double mse_denorm = 0.0;
  double mae_denorm = 0.0;
  bool fallback = false;
  bool no_signal = false;
  double wall_seconds = 0.0;
};

struct RunResult {
  std::vector<RoundRecord> records;
  model::ParamVector final_global;
  data::NormStats stats;
  double final_mse = 0.0;
  double final_mae = 0.0;
  double final_mse_denorm = 0.0;
  double final_mae_denorm = 0.0;
};

nlohmann::json record_to_json(const RoundRecord& record);

// Line-delimited records, one JSON object per round.
void write_records(const std::string& path, const ExperimentConfig& cfg,
                   const std::vector<RoundRecord>& records);

// Plot-ready summary: schema comment, header, one row per round.
void write_summary_csv(const std::string& path, const ExperimentConfig& cfg,
                       const std::vector<RoundRecord>& records);

}  // namespace floral::fed
