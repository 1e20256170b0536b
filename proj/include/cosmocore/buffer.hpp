#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cosmocore/config.hpp"
#include "cosmocore/rng.hpp"
#include "cosmocore/types.hpp"

namespace cosmocore {

// High-impact gate: |v| > dream_valence_threshold and a > dream_arousal_threshold
// (strict). Entries passing it form the Dream Queue view.
bool is_dream(const AffectTag& tag, const ExperimentConfig& cfg);

// Low-impact gate: |v| < prune_valence_threshold * scale and
// a < prune_arousal_threshold * scale (strict), kept anyway while the policy
// entropy exceeds entropy_keep_threshold. Scaled thresholds are capped at the
// dream gates so the two gates can never overlap.
bool is_prunable(const AffectTag& tag, double policy_entropy,
                 const ExperimentConfig& cfg, double prune_scale = 1.0);

enum class Provenance { Dream, Uniform };

// References stay valid until the next mutating buffer call.
struct SampleBatch {
  std::vector<const BufferEntry*> entries;
  std::vector<Provenance> provenance;  // which sampling route produced the draw
};

// Bounded replay store with Dream-Queue gating, weighted / mixture sampling,
// Prune-Bin deletion and minimum-priority ("rank-based") eviction.
// Single writer; sampling is read-only.
class CosmoBuffer {
public:
  explicit CosmoBuffer(const ExperimentConfig& cfg);

  // Stores the entry (assigning the next seq) and, when the buffer was full,
  // evicts and returns the (priority, seq)-minimal entry; ties evict the
  // oldest. A newcomer with strictly minimal priority bounces straight out.
  std::optional<BufferEntry> insert(BufferEntry entry);

  // Draws `batch_size` entries with replacement, each weighted
  // dream_multiplier when dream-gated and 1 otherwise.
  SampleBatch sample_multiplier(std::size_t batch_size, Rng& rng) const;

  // ceil(dream_mix_fraction * batch_size) draws from the dream set with
  // probability proportional to priority, the rest uniform over the whole
  // buffer; the dream share falls back to uniform when the set is empty.
  SampleBatch sample_mixture(std::size_t batch_size, Rng& rng) const;

  // Removes every entry prunable under the scaled thresholds; returns the
  // count. prune_scale must be > 0.
  std::size_t prune(double policy_entropy, double prune_scale);

  // Removes entries matching pred (order preserved); returns the count.
  // Exists for the harness's Alg-1 compatibility path.
  std::size_t erase_if(const std::function<bool(const BufferEntry&)>& pred);

  // Recompute the stored priority after a td/tag change.
  void update_td(std::uint64_t seq, double td_error);
  void update_tag(std::uint64_t seq, const AffectTag& tag);

  std::pair<std::size_t, double> occupancy() const;
  std::size_t size() const { return entries_.size(); }
  std::int64_t capacity() const { return cfg_.capacity; }
  const ExperimentConfig& config() const { return cfg_; }
  const std::vector<BufferEntry>& entries() const { return entries_; }

  // Versioned snapshot; prompt features may be elided to keep files small.
  std::string save_snapshot(bool elide_features = false) const;
  static CosmoBuffer load_snapshot(const std::string& text);

private:
  std::size_t min_rank_index() const;
  BufferEntry* find_seq(std::uint64_t seq);

  ExperimentConfig cfg_;
  std::vector<BufferEntry> entries_;  // insertion order
  std::uint64_t next_seq_ = 0;
};

}  // namespace cosmocore
