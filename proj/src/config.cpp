#include "cosmocore/config.hpp"

#include <cmath>
#include <set>

#include "cosmocore/types.hpp"
#include "json.hpp"

namespace cosmocore {

namespace {

bool in_range(double x, double lo, double hi) {
  return std::isfinite(x) && x >= lo && x <= hi;
}

}  // namespace

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> violations;
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) violations.push_back(msg);
  };
  require(std::isfinite(cfg.lambda_weight) && cfg.lambda_weight >= 0.0,
          "lambda_weight < 0");
  require(in_range(cfg.dream_valence_threshold, 0.0, 1.0),
          "dream_valence_threshold outside [0,1]");
  require(in_range(cfg.dream_arousal_threshold, 0.0, 1.0),
          "dream_arousal_threshold outside [0,1]");
  require(in_range(cfg.prune_valence_threshold, 0.0, 1.0),
          "prune_valence_threshold outside [0,1]");
  require(in_range(cfg.prune_arousal_threshold, 0.0, 1.0),
          "prune_arousal_threshold outside [0,1]");
  require(in_range(cfg.entropy_keep_threshold, 0.0, 1.0),
          "entropy_keep_threshold outside [0,1]");
  require(cfg.dream_multiplier >= 1, "dream_multiplier < 1");
  require(cfg.capacity >= 1, "capacity < 1");
  require(in_range(cfg.dream_mix_fraction, 0.0, 1.0),
          "dream_mix_fraction outside [0,1]");
  require(std::isfinite(cfg.variance_floor) && cfg.variance_floor >= 0.0,
          "variance_floor < 0");
  require(in_range(cfg.immediate_replay_gate, -1.0, 1.0),
          "immediate_replay_gate outside [-1,1]");
  require(in_range(cfg.success_break_reward, -1.0, 1.0),
          "success_break_reward outside [-1,1]");
  require(!cfg.seeds.empty(), "seeds empty");
  require(cfg.iterations_per_prompt >= 1, "iterations_per_prompt < 1");
  return violations;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["lambda_weight"] = cfg.lambda_weight;
  j["dream_valence_threshold"] = cfg.dream_valence_threshold;
  j["dream_arousal_threshold"] = cfg.dream_arousal_threshold;
  j["prune_valence_threshold"] = cfg.prune_valence_threshold;
  j["prune_arousal_threshold"] = cfg.prune_arousal_threshold;
  j["entropy_keep_threshold"] = cfg.entropy_keep_threshold;
  j["dream_multiplier"] = cfg.dream_multiplier;
  j["capacity"] = cfg.capacity;
  j["dream_mix_fraction"] = cfg.dream_mix_fraction;
  j["variance_floor"] = cfg.variance_floor;
  j["immediate_replay_gate"] = cfg.immediate_replay_gate;
  j["success_break_reward"] = cfg.success_break_reward;
  j["seeds"] = cfg.seeds;
  j["iterations_per_prompt"] = cfg.iterations_per_prompt;
  j["use_prioritization"] = cfg.use_prioritization;
  j["use_pruning"] = cfg.use_pruning;
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw validation_error("config must be a JSON object");

  static const std::set<std::string> known = {
      "lambda_weight", "dream_valence_threshold", "dream_arousal_threshold",
      "prune_valence_threshold", "prune_arousal_threshold",
      "entropy_keep_threshold", "dream_multiplier", "capacity",
      "dream_mix_fraction", "variance_floor", "immediate_replay_gate",
      "success_break_reward", "seeds", "iterations_per_prompt",
      "use_prioritization", "use_pruning"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw validation_error("unknown config field: " + key);
  }

  ExperimentConfig cfg;
  try {
    if (j.contains("lambda_weight")) cfg.lambda_weight = j["lambda_weight"];
    if (j.contains("dream_valence_threshold"))
      cfg.dream_valence_threshold = j["dream_valence_threshold"];
    if (j.contains("dream_arousal_threshold"))
      cfg.dream_arousal_threshold = j["dream_arousal_threshold"];
    if (j.contains("prune_valence_threshold"))
      cfg.prune_valence_threshold = j["prune_valence_threshold"];
    if (j.contains("prune_arousal_threshold"))
      cfg.prune_arousal_threshold = j["prune_arousal_threshold"];
    if (j.contains("entropy_keep_threshold"))
      cfg.entropy_keep_threshold = j["entropy_keep_threshold"];
    if (j.contains("dream_multiplier")) cfg.dream_multiplier = j["dream_multiplier"];
    if (j.contains("capacity")) cfg.capacity = j["capacity"];
    if (j.contains("dream_mix_fraction"))
      cfg.dream_mix_fraction = j["dream_mix_fraction"];
    if (j.contains("variance_floor")) cfg.variance_floor = j["variance_floor"];
    if (j.contains("immediate_replay_gate"))
      cfg.immediate_replay_gate = j["immediate_replay_gate"];
    if (j.contains("success_break_reward"))
      cfg.success_break_reward = j["success_break_reward"];
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::int64_t>>();
    if (j.contains("iterations_per_prompt"))
      cfg.iterations_per_prompt = j["iterations_per_prompt"];
    if (j.contains("use_prioritization"))
      cfg.use_prioritization = j["use_prioritization"];
    if (j.contains("use_pruning")) cfg.use_pruning = j["use_pruning"];
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("config field type error: ") + e.what());
  }
  return cfg;
}

}  // namespace cosmocore
