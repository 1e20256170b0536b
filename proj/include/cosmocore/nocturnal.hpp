#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cosmocore/buffer.hpp"

namespace cosmocore {

// What the consolidation phase needs from a learner: apply one replayed
// entry (returning the fresh TD error) and expose a value estimate for the
// entry's context, from which confidence variance is measured.
class Learner {
public:
  virtual ~Learner() = default;
  virtual double replay_update(const BufferEntry& entry) = 0;
  virtual double value_estimate(const BufferEntry& entry) const = 0;
};

// Adaptive pruning scale: scale' = clamp(scale + eta * (floor - variance)),
// so low confidence variance widens the prune bin and high variance narrows
// it, clamped to [0.5, 2.0].
struct NocturnalState {
  static constexpr double kMinScale = 0.5;
  static constexpr double kMaxScale = 2.0;

  double prune_scale = 1.0;
  double eta = 0.5;

  struct HistoryPoint {
    std::uint64_t cycle = 0;
    double confidence_variance = 0.0;
    double prune_scale = 0.0;
    std::size_t pruned_count = 0;
  };
  std::vector<HistoryPoint> history;
  std::uint64_t cycle = 0;
};

double update_prune_scale(NocturnalState& state, double confidence_variance,
                          double variance_floor);

struct ConsolidationReport {
  std::uint64_t cycle = 0;
  std::size_t batches = 0;
  std::size_t batch_size = 0;
  std::size_t dream_draws = 0;         // dream-route draws (the 80% share)
  std::size_t uniform_draws = 0;       // uniform-route draws
  std::size_t dream_gated_draws = 0;   // draws that landed on dream-gated entries
  double confidence_variance = 0.0;
  double prune_scale = 0.0;
  std::size_t pruned_count = 0;
  std::size_t occupancy_after = 0;

  std::string to_json_line() const;
};

struct ConsolidateOptions {
  bool do_prune = true;        // false under the no-pruning ablation
  bool mixture_draws = true;   // false degrades every draw to uniform (baseline)
};

// One sleep cycle: n_batches mixture-sampled replays into the learner, then
// confidence variance (std. dev. of the learner's value estimates over the
// replayed draws, measured after the updates) tunes the prune scale, and the
// buffer is pruned at the new scale. Empty buffer -> no-op report. With zero
// replayed draws the variance is reported as 0 and the scale is left alone.
ConsolidationReport consolidate(CosmoBuffer& buf, Learner& learner,
                                NocturnalState& state, std::size_t batch_size,
                                std::size_t n_batches, double policy_entropy,
                                Rng& rng,
                                const ConsolidateOptions& opts = {});

}  // namespace cosmocore
