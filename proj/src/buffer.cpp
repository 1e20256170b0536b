#include "cosmocore/buffer.hpp"

#include <algorithm>
#include <cmath>

#include "cosmocore/serialization.hpp"

namespace cosmocore {

namespace {

constexpr int kSnapshotVersion = 1;

}  // namespace

bool is_dream(const AffectTag& tag, const ExperimentConfig& cfg) {
  return std::abs(tag.valence) > cfg.dream_valence_threshold &&
         tag.arousal > cfg.dream_arousal_threshold;
}

bool is_prunable(const AffectTag& tag, double policy_entropy,
                 const ExperimentConfig& cfg, double prune_scale) {
  if (!(prune_scale > 0.0)) throw validation_error("prune_scale must be > 0");
  if (policy_entropy > cfg.entropy_keep_threshold) return false;
  const double v_th =
      std::min(cfg.prune_valence_threshold * prune_scale, cfg.dream_valence_threshold);
  const double a_th =
      std::min(cfg.prune_arousal_threshold * prune_scale, cfg.dream_arousal_threshold);
  return std::abs(tag.valence) < v_th && tag.arousal < a_th;
}

CosmoBuffer::CosmoBuffer(const ExperimentConfig& cfg) : cfg_(cfg) {
  if (cfg.capacity < 1) throw validation_error("buffer capacity < 1");
}

std::size_t CosmoBuffer::min_rank_index() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    const auto& b = entries_[best];
    if (e.priority < b.priority || (e.priority == b.priority && e.seq < b.seq)) best = i;
  }
  return best;
}

std::optional<BufferEntry> CosmoBuffer::insert(BufferEntry entry) {
  entry.seq = next_seq_++;
  // stored priorities always reflect this buffer's lambda
  entry.priority = compute_priority(entry.td_error, entry.tag, cfg_.lambda_weight);
  const bool was_full =
      entries_.size() >= static_cast<std::size_t>(cfg_.capacity);
  entries_.push_back(std::move(entry));
  if (!was_full) return std::nullopt;
  const std::size_t victim = min_rank_index();
  BufferEntry evicted = std::move(entries_[victim]);
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(victim));
  return evicted;
}

SampleBatch CosmoBuffer::sample_multiplier(std::size_t batch_size, Rng& rng) const {
  if (entries_.empty()) throw validation_error("cannot sample from an empty buffer");
  std::vector<double> weights(entries_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    weights[i] = is_dream(entries_[i].tag, cfg_)
                     ? static_cast<double>(cfg_.dream_multiplier)
                     : 1.0;
    total += weights[i];
  }
  SampleBatch batch;
  batch.entries.reserve(batch_size);
  batch.provenance.reserve(batch_size);
  for (std::size_t d = 0; d < batch_size; ++d) {
    double target = rng.uniform() * total;
    std::size_t pick = entries_.size() - 1;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      target -= weights[i];
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
    batch.entries.push_back(&entries_[pick]);
    batch.provenance.push_back(is_dream(entries_[pick].tag, cfg_) ? Provenance::Dream
                                                                  : Provenance::Uniform);
  }
  return batch;
}

SampleBatch CosmoBuffer::sample_mixture(std::size_t batch_size, Rng& rng) const {
  if (entries_.empty()) throw validation_error("cannot sample from an empty buffer");
  std::vector<std::size_t> dream_idx;
  double dream_total = 0.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (is_dream(entries_[i].tag, cfg_)) {
      dream_idx.push_back(i);
      dream_total += entries_[i].priority;
    }
  }
  // Guard against float noise in frac*B when the product is integral.
  const double raw = cfg_.dream_mix_fraction * static_cast<double>(batch_size);
  std::size_t n_dream = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  n_dream = std::min(n_dream, batch_size);

  SampleBatch batch;
  batch.entries.reserve(batch_size);
  batch.provenance.reserve(batch_size);

  auto draw_uniform = [&]() {
    const std::size_t pick = static_cast<std::size_t>(rng.bounded(entries_.size()));
    batch.entries.push_back(&entries_[pick]);
    batch.provenance.push_back(Provenance::Uniform);
  };

  for (std::size_t d = 0; d < n_dream; ++d) {
    if (dream_idx.empty()) {
      draw_uniform();  // dream share falls back to uniform draws
      continue;
    }
    std::size_t pick = dream_idx.back();
    if (dream_total > 0.0) {
      double target = rng.uniform() * dream_total;
      for (std::size_t i : dream_idx) {
        target -= entries_[i].priority;
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = dream_idx[static_cast<std::size_t>(rng.bounded(dream_idx.size()))];
    }
    batch.entries.push_back(&entries_[pick]);
    batch.provenance.push_back(Provenance::Dream);
  }
  for (std::size_t d = n_dream; d < batch_size; ++d) draw_uniform();
  return batch;
}

std::size_t CosmoBuffer::prune(double policy_entropy, double prune_scale) {
  if (!(prune_scale > 0.0)) throw validation_error("prune_scale must be > 0");
  return erase_if([&](const BufferEntry& e) {
    return is_prunable(e.tag, policy_entropy, cfg_, prune_scale);
  });
}

std::size_t CosmoBuffer::erase_if(const std::function<bool(const BufferEntry&)>& pred) {
  const std::size_t before = entries_.size();
  entries_.erase(std::remove_if(entries_.begin(), entries_.end(), pred),
                 entries_.end());
  return before - entries_.size();
}

BufferEntry* CosmoBuffer::find_seq(std::uint64_t seq) {
  for (auto& e : entries_)
    if (e.seq == seq) return &e;
  throw validation_error("no buffer entry with seq " + std::to_string(seq));
}

void CosmoBuffer::update_td(std::uint64_t seq, double td_error) {
  BufferEntry* e = find_seq(seq);
  e->td_error = td_error;
  e->priority = compute_priority(e->td_error, e->tag, cfg_.lambda_weight);
}

void CosmoBuffer::update_tag(std::uint64_t seq, const AffectTag& tag) {
  BufferEntry* e = find_seq(seq);
  e->tag = tag;
  e->priority = compute_priority(e->td_error, e->tag, cfg_.lambda_weight);
}

std::pair<std::size_t, double> CosmoBuffer::occupancy() const {
  return {entries_.size(),
          static_cast<double>(entries_.size()) / static_cast<double>(cfg_.capacity)};
}

std::string CosmoBuffer::save_snapshot(bool elide_features) const {
  nlohmann::json j;
  j["version"] = kSnapshotVersion;
  j["features_elided"] = elide_features;
  j["next_seq"] = next_seq_;
  j["config"] = nlohmann::json::parse(config_to_json(cfg_));
  auto arr = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json je = e;
    if (elide_features) je["trajectory"]["features"] = nlohmann::json::array();
    arr.push_back(std::move(je));
  }
  j["entries"] = std::move(arr);
  return j.dump();
}

CosmoBuffer CosmoBuffer::load_snapshot(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("version").get<int>() != kSnapshotVersion)
    throw validation_error("unsupported buffer snapshot version");
  CosmoBuffer buf(config_from_json(j.at("config").dump()));
  buf.next_seq_ = j.at("next_seq").get<std::uint64_t>();
  for (const auto& je : j.at("entries"))
    buf.entries_.push_back(je.get<BufferEntry>());
  if (buf.entries_.size() > static_cast<std::size_t>(buf.cfg_.capacity))
    throw validation_error("snapshot exceeds its own capacity");
  return buf;
}

}  // namespace cosmocore
