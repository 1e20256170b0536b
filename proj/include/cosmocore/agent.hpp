#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "cosmocore/miniworld.hpp"
#include "cosmocore/nocturnal.hpp"
#include "cosmocore/rng.hpp"
#include "cosmocore/types.hpp"

namespace cosmocore::miniworld {

// Reference program plus seeded mutated variants, deduplicated; at most
// `target_size` candidates per task.
std::vector<std::vector<Program>> build_candidate_sets(
    const std::vector<TaskSpec>& corpus, std::size_t target_size, Rng& rng);

struct ActResult {
  std::size_t candidate_index = 0;
  const Program* program = nullptr;
  double probability = 0.0;
  double entropy_normalized = 0.0;  // Shannon entropy of the softmax / ln(K)
};

// Softmax preference learner over each task's finite candidate set. All
// learning flows through replayed buffer entries: w(a) += lr * (r - v_bar)
// where v_bar is the policy-expected preference value for the context.
class Agent : public Learner {
public:
  Agent(const std::vector<TaskSpec>& corpus,
        std::vector<std::vector<Program>> candidate_sets, double learning_rate,
        double temperature);

  ActResult act(const std::string& task_id, Rng& rng) const;

  // TD error for a hypothetical outcome, without updating anything.
  double td_estimate(const std::string& task_id, double reward) const;

  // Policy-expected value for the context.
  double value_estimate(const std::string& task_id) const;

  double policy_entropy(const std::string& task_id) const;
  std::vector<double> policy(const std::string& task_id) const;

  // Learner interface: preference update from a replayed entry; returns the
  // TD error measured before the update.
  double replay_update(const BufferEntry& entry) override;
  double value_estimate(const BufferEntry& entry) const override;

  double learn_update(const BufferEntry& entry) { return replay_update(entry); }

  const std::vector<Program>& candidates(const std::string& task_id) const;

private:
  struct Context {
    std::vector<Program> candidates;
    std::vector<double> weights;
  };
  const Context& context(const std::string& task_id) const;
  Context& context(const std::string& task_id);
  std::vector<double> softmax(const Context& ctx) const;

  std::vector<Context> contexts_;
  std::unordered_map<std::string, std::size_t> index_;
  double learning_rate_;
  double temperature_;
};

}  // namespace cosmocore::miniworld
