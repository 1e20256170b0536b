#include "cosmocore/nocturnal.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace cosmocore {

double update_prune_scale(NocturnalState& state, double confidence_variance,
                          double variance_floor) {
  if (!(confidence_variance >= 0.0))
    throw validation_error("confidence_variance must be >= 0");
  const double raw =
      state.prune_scale + state.eta * (variance_floor - confidence_variance);
  state.prune_scale =
      std::clamp(raw, NocturnalState::kMinScale, NocturnalState::kMaxScale);
  return state.prune_scale;
}

std::string ConsolidationReport::to_json_line() const {
  nlohmann::json j;
  j["cycle"] = cycle;
  j["batches"] = batches;
  j["batch_size"] = batch_size;
  j["dream_draws"] = dream_draws;
  j["uniform_draws"] = uniform_draws;
  j["dream_gated_draws"] = dream_gated_draws;
  j["confidence_variance"] = confidence_variance;
  j["prune_scale"] = prune_scale;
  j["pruned_count"] = pruned_count;
  j["occupancy_after"] = occupancy_after;
  return j.dump();
}

ConsolidationReport consolidate(CosmoBuffer& buf, Learner& learner,
                                NocturnalState& state, std::size_t batch_size,
                                std::size_t n_batches, double policy_entropy,
                                Rng& rng, const ConsolidateOptions& opts) {
  ConsolidationReport report;
  report.cycle = state.cycle;
  report.batch_size = batch_size;
  report.prune_scale = state.prune_scale;
  if (buf.size() == 0) return report;

  std::vector<double> estimates;
  std::vector<const BufferEntry*> drawn;
  for (std::size_t b = 0; b < n_batches; ++b) {
    SampleBatch batch = opts.mixture_draws
                            ? buf.sample_mixture(batch_size, rng)
                            : [&] {
                                SampleBatch uni;
                                for (std::size_t d = 0; d < batch_size; ++d) {
                                  const std::size_t pick = static_cast<std::size_t>(
                                      rng.bounded(buf.size()));
                                  uni.entries.push_back(&buf.entries()[pick]);
                                  uni.provenance.push_back(Provenance::Uniform);
                                }
                                return uni;
                              }();
    report.batches++;
    for (std::size_t i = 0; i < batch.entries.size(); ++i) {
      const BufferEntry* e = batch.entries[i];
      if (batch.provenance[i] == Provenance::Dream)
        report.dream_draws++;
      else
        report.uniform_draws++;
      if (is_dream(e->tag, buf.config())) report.dream_gated_draws++;
      learner.replay_update(*e);
      drawn.push_back(e);
    }
  }

  // Confidence variance after the updates, over everything just replayed.
  if (!drawn.empty()) {
    estimates.reserve(drawn.size());
    for (const BufferEntry* e : drawn) estimates.push_back(learner.value_estimate(*e));
    double mean = 0.0;
    for (double v : estimates) mean += v;
    mean /= static_cast<double>(estimates.size());
    double var = 0.0;
    for (double v : estimates) var += (v - mean) * (v - mean);
    var /= static_cast<double>(estimates.size());
    report.confidence_variance = std::sqrt(var);
    update_prune_scale(state, report.confidence_variance,
                       buf.config().variance_floor);
  }
  report.prune_scale = state.prune_scale;

  if (opts.do_prune)
    report.pruned_count = buf.prune(policy_entropy, state.prune_scale);
  report.occupancy_after = buf.occupancy().first;

  state.cycle++;
  state.history.push_back({report.cycle, report.confidence_variance,
                           state.prune_scale, report.pruned_count});
  return report;
}

}  // namespace cosmocore
