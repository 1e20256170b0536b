#include "cosmocore/agent.hpp"

#include <algorithm>
#include <cmath>

namespace cosmocore::miniworld {

std::vector<std::vector<Program>> build_candidate_sets(
    const std::vector<TaskSpec>& corpus, std::size_t target_size, Rng& rng) {
  std::vector<std::vector<Program>> sets;
  sets.reserve(corpus.size());
  static constexpr BugKind kinds[] = {BugKind::WrongPredicate, BugKind::WrongJoinKey,
                                      BugKind::WrongAggregation, BugKind::MalformedOp};
  for (const auto& task : corpus) {
    std::vector<Program> cands{task.reference};
    std::vector<BugKind> applicable;
    for (BugKind k : kinds)
      if (bug_applicable(task.reference, k)) applicable.push_back(k);
    std::size_t attempts = 0;
    std::size_t next_kind = 0;
    while (cands.size() < target_size && attempts < 64 && !applicable.empty()) {
      ++attempts;
      const BugKind kind = applicable[next_kind % applicable.size()];
      ++next_kind;
      Program mutant = mutate(task.reference, kind, rng);
      if (std::find(cands.begin(), cands.end(), mutant) == cands.end())
        cands.push_back(std::move(mutant));
    }
    sets.push_back(std::move(cands));
  }
  return sets;
}

Agent::Agent(const std::vector<TaskSpec>& corpus,
             std::vector<std::vector<Program>> candidate_sets, double learning_rate,
             double temperature)
    : learning_rate_(learning_rate), temperature_(temperature) {
  if (corpus.size() != candidate_sets.size())
    throw validation_error("candidate sets do not match corpus size");
  if (!(temperature > 0.0)) throw validation_error("temperature must be > 0");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (candidate_sets[i].empty())
      throw validation_error("empty candidate set for task " + corpus[i].id);
    Context ctx;
    ctx.candidates = std::move(candidate_sets[i]);
    ctx.weights.assign(ctx.candidates.size(), 0.0);
    index_.emplace(corpus[i].id, contexts_.size());
    contexts_.push_back(std::move(ctx));
  }
}

const Agent::Context& Agent::context(const std::string& task_id) const {
  auto it = index_.find(task_id);
  if (it == index_.end()) throw validation_error("unknown task context: " + task_id);
  return contexts_[it->second];
}

Agent::Context& Agent::context(const std::string& task_id) {
  auto it = index_.find(task_id);
  if (it == index_.end()) throw validation_error("unknown task context: " + task_id);
  return contexts_[it->second];
}

std::vector<double> Agent::softmax(const Context& ctx) const {
  std::vector<double> p(ctx.weights.size());
  double max_w = ctx.weights[0];
  for (double w : ctx.weights) max_w = std::max(max_w, w);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp((ctx.weights[i] - max_w) / temperature_);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

ActResult Agent::act(const std::string& task_id, Rng& rng) const {
  const Context& ctx = context(task_id);
  const std::vector<double> p = softmax(ctx);
  double target = rng.uniform();
  std::size_t pick = p.size() - 1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    target -= p[i];
    if (target < 0.0) {
      pick = i;
      break;
    }
  }
  double entropy = 0.0;
  for (double x : p)
    if (x > 0.0) entropy -= x * std::log(x);
  const double ln_k = std::log(static_cast<double>(p.size()));
  ActResult res;
  res.candidate_index = pick;
  res.program = &ctx.candidates[pick];
  res.probability = p[pick];
  res.entropy_normalized = ln_k > 0.0 ? entropy / ln_k : 0.0;
  return res;
}

double Agent::value_estimate(const std::string& task_id) const {
  const Context& ctx = context(task_id);
  const std::vector<double> p = softmax(ctx);
  double v = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) v += p[i] * ctx.weights[i];
  return v;
}

double Agent::td_estimate(const std::string& task_id, double reward) const {
  return reward - value_estimate(task_id);
}

double Agent::policy_entropy(const std::string& task_id) const {
  const Context& ctx = context(task_id);
  const std::vector<double> p = softmax(ctx);
  double entropy = 0.0;
  for (double x : p)
    if (x > 0.0) entropy -= x * std::log(x);
  const double ln_k = std::log(static_cast<double>(p.size()));
  return ln_k > 0.0 ? entropy / ln_k : 0.0;
}

std::vector<double> Agent::policy(const std::string& task_id) const {
  return softmax(context(task_id));
}

double Agent::replay_update(const BufferEntry& entry) {
  Context& ctx = context(entry.trajectory.task_id);
  auto it =
      std::find(ctx.candidates.begin(), ctx.candidates.end(), entry.trajectory.program);
  if (it == ctx.candidates.end())
    throw validation_error("replayed program is not a known candidate for task " +
                           entry.trajectory.task_id);
  const std::size_t idx = static_cast<std::size_t>(it - ctx.candidates.begin());
  const double td = entry.trajectory.reward - value_estimate(entry.trajectory.task_id);
  ctx.weights[idx] += learning_rate_ * td;
  return td;
}

double Agent::value_estimate(const BufferEntry& entry) const {
  return value_estimate(entry.trajectory.task_id);
}

const std::vector<Program>& Agent::candidates(const std::string& task_id) const {
  return context(task_id).candidates;
}

}  // namespace cosmocore::miniworld
