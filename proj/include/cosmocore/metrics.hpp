#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cosmocore::harness {

// One row of Alg-1-style detailed results. `sweep` indexes corpus passes;
// `iteration` restarts at 1 on every task visit.
struct EpisodeRecord {
  std::int64_t seed = 0;
  std::string task_id;
  int sweep = 0;
  int iteration = 0;
  std::string program;  // compact pipeline text
  double valence = 0.0;
  double arousal = 0.0;
  double td_error = 0.0;
  double reward = 0.0;
  bool replayed = false;
  double policy_entropy = 0.0;

  std::string to_json_line() const;
  static EpisodeRecord from_json_line(const std::string& line);
};

struct CyclesResult {
  std::size_t cycles = 0;
  bool censored = false;  // no clean window; cycles == total episode count
};

// errors / executions: fraction of episodes with reward <= 0.
double hallucination_rate(const std::vector<EpisodeRecord>& records);
double mean_reward(const std::vector<EpisodeRecord>& records);
double mean_entropy(const std::vector<EpisodeRecord>& records);

// Index of the first window of `window` consecutive error-free episodes.
CyclesResult cycles_to_zero_error(const std::vector<EpisodeRecord>& records,
                                  std::size_t window);

// Episodes where an already-corrected task fails again, over all episodes
// that follow each task's first pass.
double bug_recurrence_rate(const std::vector<EpisodeRecord>& records);

// First episode index at which the trailing `window` episodes reach the
// given pass rate; censored at the total count when never reached.
CyclesResult episodes_to_pass_rate(const std::vector<EpisodeRecord>& records,
                                   double threshold, std::size_t window);

struct SeedMetrics {
  std::int64_t seed = 0;
  std::size_t episodes = 0;
  double hallucination_rate = 0.0;
  double mean_reward = 0.0;
  double mean_entropy = 0.0;
  std::size_t cycles_to_zero_error = 0;
  bool cycles_censored = false;
  double bug_recurrence_rate = 0.0;
  std::size_t final_occupancy = 0;
  std::vector<std::size_t> occupancy_curve;          // after every task block
  std::vector<double> confidence_variance_curve;     // per consolidation
};

SeedMetrics compute_seed_metrics(std::int64_t seed,
                                 const std::vector<EpisodeRecord>& records,
                                 std::size_t window);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation across seeds
};

Aggregate aggregate_of(const std::vector<double>& values);

// Deterministic shortest round-trip decimal rendering.
std::string format_double(double x);

}  // namespace cosmocore::harness
