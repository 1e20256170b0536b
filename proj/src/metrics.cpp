#include "cosmocore/metrics.hpp"

#include <charconv>
#include <cmath>
#include <map>

#include "cosmocore/types.hpp"
#include "json.hpp"

namespace cosmocore::harness {

std::string EpisodeRecord::to_json_line() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["task_id"] = task_id;
  j["sweep"] = sweep;
  j["iteration"] = iteration;
  j["program"] = program;
  j["valence"] = valence;
  j["arousal"] = arousal;
  j["td_error"] = td_error;
  j["reward"] = reward;
  j["replayed"] = replayed;
  j["policy_entropy"] = policy_entropy;
  return j.dump();
}

EpisodeRecord EpisodeRecord::from_json_line(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  EpisodeRecord r;
  r.seed = j.at("seed").get<std::int64_t>();
  r.task_id = j.at("task_id").get<std::string>();
  r.sweep = j.at("sweep").get<int>();
  r.iteration = j.at("iteration").get<int>();
  r.program = j.at("program").get<std::string>();
  r.valence = j.at("valence").get<double>();
  r.arousal = j.at("arousal").get<double>();
  r.td_error = j.at("td_error").get<double>();
  r.reward = j.at("reward").get<double>();
  r.replayed = j.at("replayed").get<bool>();
  r.policy_entropy = j.at("policy_entropy").get<double>();
  return r;
}

double hallucination_rate(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw validation_error("hallucination_rate of empty records");
  std::size_t errors = 0;
  for (const auto& r : records)
    if (!(r.reward > 0.0)) ++errors;
  return static_cast<double>(errors) / static_cast<double>(records.size());
}

double mean_reward(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw validation_error("mean_reward of empty records");
  double total = 0.0;
  for (const auto& r : records) total += r.reward;
  return total / static_cast<double>(records.size());
}

double mean_entropy(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw validation_error("mean_entropy of empty records");
  double total = 0.0;
  for (const auto& r : records) total += r.policy_entropy;
  return total / static_cast<double>(records.size());
}

CyclesResult cycles_to_zero_error(const std::vector<EpisodeRecord>& records,
                                  std::size_t window) {
  if (window < 1) throw validation_error("window must be >= 1");
  if (records.size() >= window) {
    std::size_t clean = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      clean = records[i].reward > 0.0 ? clean + 1 : 0;
      if (clean >= window) return {i + 1 - window, false};
    }
  }
  return {records.size(), true};
}

double bug_recurrence_rate(const std::vector<EpisodeRecord>& records) {
  std::map<std::string, bool> corrected;
  std::size_t post_correction = 0;
  std::size_t recurrences = 0;
  for (const auto& r : records) {
    const bool pass = r.reward > 0.0;
    auto it = corrected.find(r.task_id);
    if (it != corrected.end() && it->second) {
      ++post_correction;
      if (!pass) ++recurrences;
    }
    if (pass) corrected[r.task_id] = true;
  }
  if (post_correction == 0) return 0.0;
  return static_cast<double>(recurrences) / static_cast<double>(post_correction);
}

CyclesResult episodes_to_pass_rate(const std::vector<EpisodeRecord>& records,
                                   double threshold, std::size_t window) {
  if (window < 1) throw validation_error("window must be >= 1");
  std::size_t passes = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].reward > 0.0) ++passes;
    if (i >= window && records[i - window].reward > 0.0) --passes;
    if (i + 1 >= window) {
      const double rate = static_cast<double>(passes) / static_cast<double>(window);
      if (rate >= threshold) return {i + 1, false};
    }
  }
  return {records.size(), true};
}

SeedMetrics compute_seed_metrics(std::int64_t seed,
                                 const std::vector<EpisodeRecord>& records,
                                 std::size_t window) {
  SeedMetrics m;
  m.seed = seed;
  m.episodes = records.size();
  m.hallucination_rate = hallucination_rate(records);
  m.mean_reward = mean_reward(records);
  m.mean_entropy = mean_entropy(records);
  const CyclesResult cycles = cycles_to_zero_error(records, window);
  m.cycles_to_zero_error = cycles.cycles;
  m.cycles_censored = cycles.censored;
  m.bug_recurrence_rate = bug_recurrence_rate(records);
  return m;
}

Aggregate aggregate_of(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace cosmocore::harness
