// floral: deterministic federated time-series simulator with STL
// property-based update filtering, baseline robust aggregators, and the
// attack suite used to exercise them.
//
// Subcommands: run, sweep, verify, gen-data. Exit codes: 0 success,
// 2 usage/config error, 3 runtime error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "floral/data/dataset.hpp"
#include "floral/fed/records.hpp"
#include "floral/fed/runtime.hpp"
#include "floral/stl/eval.hpp"
#include "floral/stl/parser.hpp"
#include "floral/util/parallel.hpp"
#include "floral/util/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct RunFlags {
  std::string config_path;
  std::string out_dir = "out";
  bool dry_run = false;
  bool parallel = false;
  // Optional overrides; negative/empty means "not set".
  std::int64_t seed = -1;
  int rounds = -1;
  double epsilon = -1.0;
  double gamma = -1.0;
  std::string defense;
  std::string attack;
};

floral::fed::ExperimentConfig resolve_config(const RunFlags& flags) {
  auto cfg = floral::fed::load_config_file(flags.config_path);
  if (flags.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(flags.seed);
    cfg.generator.seed = cfg.seed;
  }
  if (flags.rounds > 0) cfg.rounds = flags.rounds;
  if (flags.epsilon >= 0.0) cfg.attack.epsilon = flags.epsilon;
  if (flags.gamma >= 0.0) cfg.defense.gamma = flags.gamma;
  if (!flags.defense.empty()) cfg.defense.kind = floral::defense::defense_from_name(flags.defense);
  if (!flags.attack.empty()) cfg.attack.kind = floral::attack::attack_from_name(flags.attack);
  if (flags.parallel) cfg.parallel = true;
  cfg.validate();
  return cfg;
}

void write_run_artifacts(const fs::path& dir, const floral::fed::ExperimentConfig& cfg,
                         const floral::fed::RunResult& result) {
  fs::create_directories(dir);
  floral::fed::write_records((dir / "records.jsonl").string(), cfg, result.records);
  floral::fed::write_summary_csv((dir / "summary.csv").string(), cfg, result.records);
  floral::model::save_checkpoint((dir / "global.ckpt").string(), result.final_global);
  std::ofstream cfg_file(dir / "resolved_config.json");
  cfg_file << cfg.to_json().dump(2) << "\n";
}

int cmd_run(const RunFlags& flags) {
  auto cfg = resolve_config(flags);
  if (flags.dry_run) {
    std::cout << cfg.to_json().dump(2) << "\n";
    return kExitOk;
  }
  auto result = floral::fed::run_experiment(cfg);
  write_run_artifacts(flags.out_dir, cfg, result);

  double wall = 0.0;
  for (const auto& record : result.records) {
    wall += record.wall_seconds;
    if (record.no_signal)
      std::fprintf(stderr, "warning: round %d trust scores were all zero (no signal)\n",
                   record.round);
    if (record.fallback)
      std::fprintf(stderr, "warning: round %d masked every client; kept the previous global\n",
                   record.round);
  }
  std::printf("run complete: %d rounds, final mse %.6g mae %.6g (%.2fs)\n", cfg.rounds,
              result.final_mse, result.final_mae, wall);
  std::printf("artifacts in %s\n", flags.out_dir.c_str());
  return kExitOk;
}

// ---- sweep ---------------------------------------------------------------

struct SweepCell {
  floral::fed::ExperimentConfig cfg;
  std::string defense;
  std::string attack;
  std::string aggregator;
  std::string arch;
  double epsilon = 0.0;
  int repetition = 0;
};

struct CellResult {
  SweepCell cell;
  bool ok = false;
  std::string error;
  double mse = 0.0;
  double mae = 0.0;
};

std::string cell_dir_name(const SweepCell& cell) {
  // Stable content hash keeps resumes idempotent across reorderings.
  const std::string key = cell.cfg.to_json().dump();
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (char c : key) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
  return "cell_" + cell.defense + "_eps" + std::to_string(cell.epsilon).substr(0, 5) + "_rep" +
         std::to_string(cell.repetition) + "_" + std::string(buffer, 8);
}

int cmd_sweep(const std::string& sweep_path, const std::string& out_dir, bool parallel,
              bool resume) {
  std::ifstream file(sweep_path);
  if (!file) throw floral::ConfigError("cannot open sweep file: " + sweep_path);
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::parse_error& err) {
    throw floral::ConfigError(sweep_path + ": " + err.what());
  }
  if (!doc.contains("base")) throw floral::ConfigError("missing required sweep field: base");
  const auto base = floral::fed::ExperimentConfig::from_json(doc.at("base"));

  const json axes = doc.value("axes", json::object());
  const auto epsilons = axes.value("epsilon", std::vector<double>{base.attack.epsilon});
  const auto defenses = axes.value(
      "defense", std::vector<std::string>{floral::defense::defense_name(base.defense.kind)});
  const auto aggregators = axes.value(
      "aggregator", std::vector<std::string>{floral::fed::aggregator_name(base.aggregator)});
  const auto archs =
      axes.value("arch", std::vector<std::string>{floral::model::arch_name(base.model.arch)});
  const int repetitions = doc.value("repetitions", 1);
  const std::uint64_t seed_base = doc.value("seed_base", base.seed);
  const std::size_t max_cells = doc.value("max_cells", 512);
  if (epsilons.empty() || defenses.empty() || aggregators.empty() || archs.empty())
    throw floral::ConfigError("sweep axes must be nonempty");
  if (repetitions < 1) throw floral::ConfigError("repetitions must be at least 1");

  std::vector<SweepCell> cells;
  std::uint64_t cell_index = 0;
  for (const auto& defense : defenses)
    for (const auto& aggregator : aggregators)
      for (const auto& arch : archs)
        for (double epsilon : epsilons)
          for (int rep = 0; rep < repetitions; ++rep) {
            SweepCell cell;
            cell.cfg = base;
            cell.cfg.defense.kind = floral::defense::defense_from_name(defense);
            cell.cfg.aggregator = floral::fed::aggregator_from_name(aggregator);
            cell.cfg.model.arch = floral::model::arch_from_name(arch);
            cell.cfg.attack.epsilon = epsilon;
            // Repetitions share a cell position but not a seed.
            cell.cfg.seed = floral::util::Rng::stream(
                                seed_base, {0xCE11, cell_index++,
                                            static_cast<std::uint64_t>(rep)})
                                .next_u64();
            cell.cfg.generator.seed = cell.cfg.seed;
            cell.defense = defense;
            cell.attack = floral::attack::attack_name(cell.cfg.attack.kind);
            cell.aggregator = aggregator;
            cell.arch = arch;
            cell.epsilon = epsilon;
            cell.repetition = rep;
            cells.push_back(std::move(cell));
            if (cells.size() > max_cells)
              throw floral::ConfigError("sweep grid exceeds max_cells = " +
                                        std::to_string(max_cells));
          }

  fs::create_directories(out_dir);
  std::vector<CellResult> results(cells.size());
  floral::util::parallel_for(cells.size(), parallel, [&](std::size_t i) {
    CellResult& slot = results[i];
    slot.cell = cells[i];
    const fs::path dir = fs::path(out_dir) / cell_dir_name(cells[i]);
    const fs::path done = dir / "done";
    try {
      if (resume && fs::exists(done)) {
        // Completed cell: reuse the recorded final metrics.
        std::ifstream marker(done);
        marker >> slot.mse >> slot.mae;
        slot.ok = true;
        return;
      }
      auto run = floral::fed::run_experiment(cells[i].cfg);
      write_run_artifacts(dir, cells[i].cfg, run);
      std::ofstream marker(done);
      char buffer[64];
      std::snprintf(buffer, sizeof(buffer), "%.17g %.17g", run.final_mse, run.final_mae);
      marker << buffer << "\n";
      slot.mse = run.final_mse;
      slot.mae = run.final_mae;
      slot.ok = true;
    } catch (const std::exception& err) {
      slot.ok = false;
      slot.error = err.what();
    }
  });

  // Full grid, one row per cell; failures are marked and do not stop others.
  std::ofstream grid(fs::path(out_dir) / "sweep_results.csv");
  grid << "#schema floral-sweep-v1\n";
  grid << "defense,attack,aggregator,arch,epsilon,repetition,seed,status,mse,mae\n";
  for (const auto& slot : results) {
    grid << slot.cell.defense << "," << slot.cell.attack << "," << slot.cell.aggregator << ","
         << slot.cell.arch << "," << slot.cell.epsilon << "," << slot.cell.repetition << ","
         << slot.cell.cfg.seed << "," << (slot.ok ? "ok" : "failed") << ",";
    if (slot.ok) {
      char buffer[64];
      std::snprintf(buffer, sizeof(buffer), "%.10g,%.10g", slot.mse, slot.mae);
      grid << buffer;
    } else {
      grid << ",";
    }
    grid << "\n";
  }

  // Pivot: rows = defense, cols = attack ratio; mean MSE (+/- sd across
  // repetitions and the remaining axes).
  std::ofstream pivot(fs::path(out_dir) / "pivot_mse.csv");
  pivot << "#schema floral-pivot-v1\n";
  pivot << "defense";
  for (double epsilon : epsilons) pivot << ",eps_" << epsilon;
  pivot << "\n";
  for (const auto& defense : defenses) {
    pivot << defense;
    for (double epsilon : epsilons) {
      std::vector<double> values;
      for (const auto& slot : results)
        if (slot.ok && slot.cell.defense == defense && slot.cell.epsilon == epsilon)
          values.push_back(slot.mse);
      if (values.empty()) {
        pivot << ",";
        continue;
      }
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      char buffer[96];
      if (values.size() > 1) {
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(values.size() - 1);
        std::snprintf(buffer, sizeof(buffer), ",%.6g±%.2g", mean, std::sqrt(var));
      } else {
        std::snprintf(buffer, sizeof(buffer), ",%.6g", mean);
      }
      pivot << buffer;
    }
    pivot << "\n";
  }

  std::size_t failed = 0;
  for (const auto& slot : results)
    if (!slot.ok) {
      ++failed;
      std::fprintf(stderr, "cell failed (%s eps=%g rep=%d): %s\n", slot.cell.defense.c_str(),
                   slot.cell.epsilon, slot.cell.repetition, slot.error.c_str());
    }
  std::printf("sweep complete: %zu cells, %zu failed; results in %s\n", results.size(), failed,
              out_dir.c_str());
  return kExitOk;
}

// ---- verify ---------------------------------------------------------------

floral::data::Trace load_trace_csv(const std::string& path) {
  // Header row of channel names, then numeric rows.
  std::ifstream file(path);
  if (!file) throw floral::InputError("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(file, line)) throw floral::InputError(path + ": empty file");
  std::vector<std::vector<double>> rows;
  std::size_t row_number = 1;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream stream(line);
    std::string cell;
    while (std::getline(stream, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw floral::ParseError(path + ": non-numeric cell at row " +
                                 std::to_string(row_number));
      }
    }
    rows.push_back(std::move(row));
    ++row_number;
  }
  return floral::data::Trace::from_rows(rows);
}

int cmd_verify(const std::string& formula_text, const std::string& trace_path, int at) {
  auto formula = floral::stl::parse_formula(formula_text);
  auto trace = load_trace_csv(trace_path);

  std::printf("formula: %s\n", floral::stl::print_formula(formula).c_str());
  std::printf("trace: %zu steps x %zu channels\n", trace.steps(), trace.channels());

  auto vector = floral::stl::satisfaction_vector(formula, trace);
  std::size_t holds = 0;
  std::string rendered;
  for (bool v : vector) {
    rendered += v ? "T" : "F";
    holds += v ? 1 : 0;
  }
  const double score = static_cast<double>(holds) / static_cast<double>(vector.size());
  std::printf("per-step: [%s]\n", rendered.c_str());
  std::printf("score: %.6g\n", score);
  std::printf("rho at t=%d: %.17g\n", at, floral::stl::eval_robustness(formula, trace, at));
  return kExitOk;
}

// ---- gen-data --------------------------------------------------------------

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
  auto cfg = floral::fed::load_config_file(config_path);
  if (cfg.use_csv)
    throw floral::ConfigError("gen-data needs a generator config, not a csv source");
  auto series = floral::data::generate_raw_series(cfg.generator);
  fs::create_directories(out_dir);
  std::vector<std::string> files;
  char buffer[40];
  for (std::size_t i = 0; i < series.size(); ++i) {
    const fs::path path = fs::path(out_dir) / ("client_" + std::to_string(i) + ".csv");
    std::ofstream file(path);
    for (std::size_t c = 0; c < series[i].channels(); ++c)
      file << (c ? "," : "") << "x" << (c + 1);
    file << "\n";
    for (std::size_t t = 0; t < series[i].steps(); ++t) {
      for (std::size_t c = 0; c < series[i].channels(); ++c) {
        std::snprintf(buffer, sizeof(buffer), "%.17g", series[i].at(t, c));
        file << (c ? "," : "") << buffer;
      }
      file << "\n";
    }
    files.push_back(path.string());
  }
  std::printf("wrote %zu client series to %s\n", files.size(), out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated time-series robustness simulator"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("--config", run_flags.config_path, "experiment config (JSON)")
      ->required()
      ->envname("FLORAL_CONFIG");
  run->add_option("--out-dir", run_flags.out_dir, "artifact directory")->envname("FLORAL_OUT_DIR");
  run->add_option("--seed", run_flags.seed, "override the config seed")->envname("FLORAL_SEED");
  run->add_option("--rounds", run_flags.rounds, "override the round count")
      ->envname("FLORAL_ROUNDS");
  run->add_option("--epsilon", run_flags.epsilon, "override the attack ratio")
      ->envname("FLORAL_EPSILON");
  run->add_option("--gamma", run_flags.gamma, "override the defense threshold")
      ->envname("FLORAL_GAMMA");
  run->add_option("--defense", run_flags.defense, "override the defense kind")
      ->envname("FLORAL_DEFENSE");
  run->add_option("--attack", run_flags.attack, "override the attack kind")
      ->envname("FLORAL_ATTACK");
  run->add_flag("--parallel", run_flags.parallel, "fan client training out on OpenMP threads")
      ->envname("FLORAL_PARALLEL");
  run->add_flag("--dry-run", run_flags.dry_run, "validate and print the resolved config");

  std::string sweep_path, sweep_out = "sweep_out";
  bool sweep_parallel = false, sweep_resume = false;
  auto* sweep = app.add_subcommand("sweep", "run a config grid and emit pivoted summaries");
  sweep->add_option("--config", sweep_path, "sweep spec (JSON)")->required();
  sweep->add_option("--out-dir", sweep_out, "sweep output directory");
  sweep->add_flag("--parallel", sweep_parallel, "run cells on OpenMP threads");
  sweep->add_flag("--resume", sweep_resume, "skip cells with a done marker");

  std::string verify_formula, verify_trace;
  int verify_at = 0;
  auto* verify = app.add_subcommand("verify", "evaluate an STL formula against a trace CSV");
  verify->add_option("--formula", verify_formula, "STL formula text")->required();
  verify->add_option("--trace", verify_trace, "trace CSV (header + numeric rows)")->required();
  verify->add_option("--at", verify_at, "time step for the robustness value");

  std::string gen_config, gen_out = "data_out";
  auto* gen = app.add_subcommand("gen-data", "emit synthetic client series as CSV files");
  gen->add_option("--config", gen_config, "experiment config with a generator block")->required();
  gen->add_option("--out-dir", gen_out, "CSV output directory");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(run_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_path, sweep_out, sweep_parallel, sweep_resume);
    if (verify->parsed()) return cmd_verify(verify_formula, verify_trace, verify_at);
    if (gen->parsed()) return cmd_gen_data(gen_config, gen_out);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? kExitOk : kExitConfig;
  } catch (const floral::ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  } catch (const floral::ParseError& err) {
    std::fprintf(stderr, "parse error: %s\n", err.what());
    return kExitConfig;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitRuntime;
  }
  return kExitOk;
}
