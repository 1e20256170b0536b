#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cosmocore/agent.hpp"
#include "cosmocore/buffer.hpp"
#include "cosmocore/config.hpp"
#include "cosmocore/metrics.hpp"
#include "cosmocore/miniworld.hpp"
#include "cosmocore/nocturnal.hpp"
#include "cosmocore/tagger.hpp"

namespace cosmocore::harness {

// Synthetic-supervision recipe for the tagger: every (task, candidate) pair
// is executed and labeled. Failures take heuristic_tag labels with a
// fresh-estimate TD (the scold signal); repeated successes are labeled
// low-impact so routine passes land inside the prune gate.
struct PretrainOptions {
  int fail_reps = 4;
  int pass_reps = 6;
  double pass_valence_label = 0.1;
  double pass_arousal_label = 0.08;
  double td_scale = 1.0;
  TaggerTrainConfig train{/*learning_rate=*/0.08, /*l2_coefficient=*/1e-4,
                          /*batch_size=*/32, /*epochs=*/60};
};

struct RunOptions {
  int n_sweeps = 16;                      // corpus passes per seed
  int consolidate_every = 2;              // task blocks between sleep cycles
  std::size_t consolidation_batches = 1;
  std::size_t consolidation_batch_size = 4;
  std::size_t window = 5;                 // for cycles_to_zero_error
  std::size_t candidates_per_task = 8;    // reference + mutants
  double agent_learning_rate = 0.7;
  double agent_temperature = 0.7;
  bool alg1_compat = false;               // literal Alg-1 prune rule
  PretrainOptions pretrain;
};

MlpTagger pretrain_tagger(const std::vector<miniworld::TaskSpec>& corpus,
                          const std::vector<std::vector<miniworld::Program>>& candidates,
                          const PretrainOptions& opts, Rng& rng);

struct SeedRun {
  std::int64_t seed = 0;
  std::vector<EpisodeRecord> records;
  std::vector<ConsolidationReport> consolidations;
  SeedMetrics metrics;
};

struct SeedFailure {
  std::int64_t seed = 0;
  std::string error;
};

struct RunResult {
  std::string arm;
  ExperimentConfig config;
  std::vector<SeedRun> seeds;
  std::vector<SeedFailure> failures;
};

std::string arm_name(const ExperimentConfig& cfg, bool alg1_compat);

// Algorithm-1-at-desk-scale over every configured seed; failed seeds are
// collected, the rest continue.
RunResult run_episode_loop(const ExperimentConfig& cfg,
                           const std::vector<miniworld::TaskSpec>& corpus,
                           const RunOptions& opts,
                           const std::string& arm = "");

struct AblationResult {
  std::vector<RunResult> arms;  // baseline, full, no-prioritization, no-pruning
};

// Four-arm comparison on identical seeds.
AblationResult run_ablations(const ExperimentConfig& base_cfg,
                             const std::vector<miniworld::TaskSpec>& corpus,
                             const RunOptions& opts);

// Serialized outputs. summary.csv columns:
// arm,seed,hallucination_rate,mean_reward,mean_entropy,cycles_to_zero_error,
// recurrence_rate,final_occupancy
std::string summary_csv(const std::vector<RunResult>& results);
std::string metrics_json(const RunResult& result);
std::string ablation_metrics_json(const AblationResult& result);

// Writes episodes.jsonl, consolidations.jsonl, metrics.json and summary.csv
// under dir (created if needed).
void write_run_outputs(const std::string& dir, const RunResult& result);
void write_ablation_outputs(const std::string& dir, const AblationResult& result);

// Recomputes a summary.csv from raw episodes.jsonl lines (the aggregation
// cross-check used by the `report` subcommand). final_occupancy is not
// recoverable from records; callers may supply it per seed.
std::string report_from_episode_lines(
    const std::string& arm, const std::vector<std::string>& lines,
    std::size_t window,
    const std::map<std::int64_t, std::size_t>& final_occupancy = {});

}  // namespace cosmocore::harness
