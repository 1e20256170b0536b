#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cosmocore {

// Every threshold, rate and ablation switch of the architecture in one
// serializable record, so ablations are config-only changes.
struct ExperimentConfig {
  double lambda_weight = 0.6;
  double dream_valence_threshold = 0.5;
  double dream_arousal_threshold = 0.7;
  double prune_valence_threshold = 0.2;
  double prune_arousal_threshold = 0.3;
  double entropy_keep_threshold = 0.3;
  int dream_multiplier = 5;
  std::int64_t capacity = 1000000;  // desk-scale runs use 10^4
  double dream_mix_fraction = 0.8;
  double variance_floor = 0.1;
  double immediate_replay_gate = -0.5;
  double success_break_reward = 0.9;
  std::vector<std::int64_t> seeds = {1, 2, 3, 4, 5};
  int iterations_per_prompt = 100;
  bool use_prioritization = true;
  bool use_pruning = true;

  bool operator==(const ExperimentConfig&) const = default;
};

// Returns one message per violated range constraint; empty means ok.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

// JSON round-trip with exactly the field names above; unknown fields are
// rejected, reals keep full round-trip precision.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

}  // namespace cosmocore
