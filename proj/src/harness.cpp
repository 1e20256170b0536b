#include "cosmocore/harness.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cosmocore::harness {

namespace {

// Fixed stream ids so every component owns a distinct seeded stream.
constexpr std::uint64_t kStreamCandidates = 1;
constexpr std::uint64_t kStreamTagger = 2;
constexpr std::uint64_t kStreamRun = 3;

}  // namespace

MlpTagger pretrain_tagger(const std::vector<miniworld::TaskSpec>& corpus,
                          const std::vector<std::vector<miniworld::Program>>& candidates,
                          const PretrainOptions& opts, Rng& rng) {
  if (corpus.size() != candidates.size())
    throw validation_error("candidate sets do not match corpus size");
  std::vector<TaggerSample> dataset;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& task = corpus[i];
    for (const auto& program : candidates[i]) {
      const miniworld::ExecResult exec = miniworld::execute(program, task);
      std::vector<double> features =
          miniworld::encode_features(task.prompt, program, exec.reward);
      AffectTag label;
      int reps;
      if (exec.feedback == FeedbackKind::Pass) {
        label = AffectTag{opts.pass_valence_label, opts.pass_arousal_label};
        reps = opts.pass_reps;
      } else {
        Trajectory traj;
        traj.task_id = task.id;
        traj.program = program;
        traj.feedback = exec.feedback;
        traj.reward = exec.reward;
        // Fresh-estimate surprise: the scold arrives before any value has
        // been learned, so the TD magnitude is the full reward.
        label = heuristic_tag(traj, exec.reward, opts.td_scale);
        reps = opts.fail_reps;
      }
      for (int r = 0; r < reps; ++r) dataset.emplace_back(features, label);
    }
  }
  MlpTagger tagger = MlpTagger::random_init(rng);
  tagger.train(dataset, opts.train, rng);
  return tagger;
}

std::string arm_name(const ExperimentConfig& cfg, bool alg1_compat) {
  std::string name;
  if (cfg.use_prioritization && cfg.use_pruning)
    name = "full";
  else if (!cfg.use_prioritization && !cfg.use_pruning)
    name = "baseline";
  else if (!cfg.use_prioritization)
    name = "no-prioritization";
  else
    name = "no-pruning";
  if (alg1_compat) name += "-alg1";
  return name;
}

namespace {

SeedRun run_seed(const ExperimentConfig& cfg,
                 const std::vector<miniworld::TaskSpec>& corpus,
                 const RunOptions& opts, std::int64_t seed) {
  SeedRun out;
  out.seed = seed;

  const std::uint64_t useed = static_cast<std::uint64_t>(seed);
  Rng cand_rng(useed, kStreamCandidates);
  auto candidate_sets =
      miniworld::build_candidate_sets(corpus, opts.candidates_per_task, cand_rng);

  Rng tagger_rng(useed, kStreamTagger);
  const MlpTagger tagger =
      pretrain_tagger(corpus, candidate_sets, opts.pretrain, tagger_rng);

  miniworld::Agent agent(corpus, std::move(candidate_sets), opts.agent_learning_rate,
                         opts.agent_temperature);
  CosmoBuffer buffer(cfg);
  NocturnalState state;
  Rng run_rng(useed, kStreamRun);

  int tasks_since_sleep = 0;
  for (int sweep = 0; sweep < opts.n_sweeps; ++sweep) {
    for (const auto& task : corpus) {
      double last_entropy = agent.policy_entropy(task.id);
      for (int iter = 1; iter <= cfg.iterations_per_prompt; ++iter) {
        const miniworld::ActResult act = agent.act(task.id, run_rng);
        const miniworld::ExecResult exec = miniworld::execute(*act.program, task);
        const double td = agent.td_estimate(task.id, exec.reward);

        Trajectory traj;
        traj.task_id = task.id;
        traj.prompt_features =
            miniworld::encode_features(task.prompt, *act.program, exec.reward);
        traj.program = *act.program;
        traj.feedback = exec.feedback;
        traj.feedback_detail = exec.detail;
        traj.reward = exec.reward;
        const AffectTag tag = tagger.forward(traj.prompt_features);

        const BufferEntry entry = make_entry(std::move(traj), tag, td, cfg.lambda_weight);
        buffer.insert(entry);
        bool replayed = false;
        if (cfg.use_prioritization && tag.valence < cfg.immediate_replay_gate) {
          replayed = true;
          for (int r = 0; r < cfg.dream_multiplier; ++r) agent.learn_update(entry);
        }

        EpisodeRecord rec;
        rec.seed = seed;
        rec.task_id = task.id;
        rec.sweep = sweep;
        rec.iteration = iter;
        rec.program = act.program->to_text();
        rec.valence = tag.valence;
        rec.arousal = tag.arousal;
        rec.td_error = td;
        rec.reward = exec.reward;
        rec.replayed = replayed;
        rec.policy_entropy = act.entropy_normalized;
        out.records.push_back(std::move(rec));

        last_entropy = act.entropy_normalized;
        if (exec.reward > cfg.success_break_reward) break;
      }

      if (cfg.use_pruning) {
        if (opts.alg1_compat) {
          // Literal Alg-1 rule: keep if valence < -0.2 or random > 0.3.
          buffer.erase_if([&](const BufferEntry& e) {
            return !(e.tag.valence < -0.2) && !(run_rng.uniform() > 0.3);
          });
        } else {
          buffer.prune(last_entropy, state.prune_scale);
        }
      }
      out.metrics.occupancy_curve.push_back(buffer.size());

      if (++tasks_since_sleep >= opts.consolidate_every) {
        tasks_since_sleep = 0;
        ConsolidateOptions copts;
        copts.do_prune = cfg.use_pruning && !opts.alg1_compat;
        copts.mixture_draws = cfg.use_prioritization;
        const ConsolidationReport rep = consolidate(
            buffer, agent, state, opts.consolidation_batch_size,
            opts.consolidation_batches, last_entropy, run_rng, copts);
        out.metrics.confidence_variance_curve.push_back(rep.confidence_variance);
        out.consolidations.push_back(rep);
      }
    }
  }

  auto curves_occupancy = std::move(out.metrics.occupancy_curve);
  auto curves_variance = std::move(out.metrics.confidence_variance_curve);
  out.metrics = compute_seed_metrics(seed, out.records, opts.window);
  out.metrics.occupancy_curve = std::move(curves_occupancy);
  out.metrics.confidence_variance_curve = std::move(curves_variance);
  out.metrics.final_occupancy = buffer.size();
  return out;
}

}  // namespace

RunResult run_episode_loop(const ExperimentConfig& cfg,
                           const std::vector<miniworld::TaskSpec>& corpus,
                           const RunOptions& opts, const std::string& arm) {
  if (corpus.empty()) throw validation_error("corpus is empty");
  const auto violations = validate_config(cfg);
  if (!violations.empty())
    throw validation_error("invalid config: " + violations.front());

  RunResult result;
  result.arm = arm.empty() ? arm_name(cfg, opts.alg1_compat) : arm;
  result.config = cfg;
  for (std::int64_t seed : cfg.seeds) {
    try {
      result.seeds.push_back(run_seed(cfg, corpus, opts, seed));
    } catch (const std::exception& e) {
      result.failures.push_back({seed, e.what()});
    }
  }
  return result;
}

AblationResult run_ablations(const ExperimentConfig& base_cfg,
                             const std::vector<miniworld::TaskSpec>& corpus,
                             const RunOptions& opts) {
  AblationResult result;
  const struct {
    const char* name;
    bool prioritization;
    bool pruning;
  } arms[] = {{"baseline", false, false},
              {"full", true, true},
              {"no-prioritization", false, true},
              {"no-pruning", true, false}};
  for (const auto& arm : arms) {
    ExperimentConfig cfg = base_cfg;
    cfg.use_prioritization = arm.prioritization;
    cfg.use_pruning = arm.pruning;
    result.arms.push_back(run_episode_loop(cfg, corpus, opts, arm.name));
  }
  return result;
}

std::string summary_csv(const std::vector<RunResult>& results) {
  std::ostringstream out;
  out << "arm,seed,hallucination_rate,mean_reward,mean_entropy,"
         "cycles_to_zero_error,recurrence_rate,final_occupancy\n";
  for (const auto& run : results) {
    for (const auto& sr : run.seeds) {
      out << run.arm << ',' << sr.seed << ','
          << format_double(sr.metrics.hallucination_rate) << ','
          << format_double(sr.metrics.mean_reward) << ','
          << format_double(sr.metrics.mean_entropy) << ','
          << sr.metrics.cycles_to_zero_error << ','
          << format_double(sr.metrics.bug_recurrence_rate) << ','
          << sr.metrics.final_occupancy << '\n';
    }
  }
  return out.str();
}

namespace {

nlohmann::json seed_metrics_json(const SeedMetrics& m) {
  nlohmann::json j;
  j["seed"] = m.seed;
  j["episodes"] = m.episodes;
  j["hallucination_rate"] = m.hallucination_rate;
  j["mean_reward"] = m.mean_reward;
  j["mean_entropy"] = m.mean_entropy;
  j["cycles_to_zero_error"] = m.cycles_to_zero_error;
  j["cycles_censored"] = m.cycles_censored;
  j["bug_recurrence_rate"] = m.bug_recurrence_rate;
  j["final_occupancy"] = m.final_occupancy;
  j["occupancy_curve"] = m.occupancy_curve;
  j["confidence_variance_curve"] = m.confidence_variance_curve;
  return j;
}

struct FieldView {
  const char* name;
  double (*get)(const SeedMetrics&);
};

constexpr FieldView kScalarFields[] = {
    {"hallucination_rate", [](const SeedMetrics& m) { return m.hallucination_rate; }},
    {"mean_reward", [](const SeedMetrics& m) { return m.mean_reward; }},
    {"mean_entropy", [](const SeedMetrics& m) { return m.mean_entropy; }},
    {"cycles_to_zero_error",
     [](const SeedMetrics& m) { return static_cast<double>(m.cycles_to_zero_error); }},
    {"bug_recurrence_rate", [](const SeedMetrics& m) { return m.bug_recurrence_rate; }},
    {"final_occupancy",
     [](const SeedMetrics& m) { return static_cast<double>(m.final_occupancy); }},
};

nlohmann::json aggregate_json(const RunResult& result) {
  nlohmann::json agg;
  for (const auto& field : kScalarFields) {
    std::vector<double> values;
    for (const auto& sr : result.seeds) values.push_back(field.get(sr.metrics));
    const Aggregate a = aggregate_of(values);
    agg[field.name] = {{"mean", a.mean}, {"std", a.stddev}};
  }
  return agg;
}

nlohmann::json run_json(const RunResult& result) {
  nlohmann::json j;
  j["arm"] = result.arm;
  j["config"] = nlohmann::json::parse(config_to_json(result.config));
  auto per_seed = nlohmann::json::array();
  for (const auto& sr : result.seeds) per_seed.push_back(seed_metrics_json(sr.metrics));
  j["per_seed"] = std::move(per_seed);
  j["aggregate"] = aggregate_json(result);
  auto failures = nlohmann::json::array();
  for (const auto& f : result.failures)
    failures.push_back({{"seed", f.seed}, {"error", f.error}});
  j["aborted_seeds"] = std::move(failures);
  return j;
}

nlohmann::json paired_deltas(const RunResult& a, const RunResult& b) {
  // per-seed (a - b), paired on seed order; both runs share cfg.seeds
  nlohmann::json deltas;
  const std::size_t n = std::min(a.seeds.size(), b.seeds.size());
  for (const auto& field : kScalarFields) {
    std::vector<double> diff;
    for (std::size_t i = 0; i < n; ++i)
      diff.push_back(field.get(a.seeds[i].metrics) - field.get(b.seeds[i].metrics));
    const Aggregate agg = aggregate_of(diff);
    deltas[field.name] = {{"mean", agg.mean}, {"std", agg.stddev}, {"per_seed", diff}};
  }
  return deltas;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw validation_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string metrics_json(const RunResult& result) { return run_json(result).dump(2); }

std::string ablation_metrics_json(const AblationResult& result) {
  nlohmann::json j;
  for (const auto& arm : result.arms) j["arms"][arm.arm] = run_json(arm);
  const RunResult* baseline = nullptr;
  const RunResult* full = nullptr;
  const RunResult* no_prio = nullptr;
  const RunResult* no_prune = nullptr;
  for (const auto& arm : result.arms) {
    if (arm.arm == "baseline") baseline = &arm;
    if (arm.arm == "full") full = &arm;
    if (arm.arm == "no-prioritization") no_prio = &arm;
    if (arm.arm == "no-pruning") no_prune = &arm;
  }
  if (full && baseline) j["deltas"]["full_minus_baseline"] = paired_deltas(*full, *baseline);
  if (no_prio && full)
    j["deltas"]["no_prioritization_minus_full"] = paired_deltas(*no_prio, *full);
  if (no_prune && full)
    j["deltas"]["no_pruning_minus_full"] = paired_deltas(*no_prune, *full);
  return j.dump(2);
}

void write_run_outputs(const std::string& dir, const RunResult& result) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  std::ostringstream episodes;
  for (const auto& sr : result.seeds)
    for (const auto& rec : sr.records) episodes << rec.to_json_line() << '\n';
  write_text(base / "episodes.jsonl", episodes.str());
  std::ostringstream consolidations;
  for (const auto& sr : result.seeds)
    for (const auto& rep : sr.consolidations)
      consolidations << rep.to_json_line() << '\n';
  write_text(base / "consolidations.jsonl", consolidations.str());
  write_text(base / "metrics.json", metrics_json(result));
  write_text(base / "summary.csv", summary_csv({result}));
}

void write_ablation_outputs(const std::string& dir, const AblationResult& result) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  for (const auto& arm : result.arms) write_run_outputs((base / arm.arm).string(), arm);
  write_text(base / "summary.csv", summary_csv(result.arms));
  write_text(base / "metrics.json", ablation_metrics_json(result));
}

std::string report_from_episode_lines(
    const std::string& arm, const std::vector<std::string>& lines, std::size_t window,
    const std::map<std::int64_t, std::size_t>& final_occupancy) {
  std::vector<std::int64_t> seed_order;
  std::map<std::int64_t, std::vector<EpisodeRecord>> by_seed;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    EpisodeRecord rec = EpisodeRecord::from_json_line(line);
    if (!by_seed.count(rec.seed)) seed_order.push_back(rec.seed);
    by_seed[rec.seed].push_back(std::move(rec));
  }
  RunResult result;
  result.arm = arm;
  for (std::int64_t seed : seed_order) {
    SeedRun sr;
    sr.seed = seed;
    sr.metrics = compute_seed_metrics(seed, by_seed[seed], window);
    if (auto it = final_occupancy.find(seed); it != final_occupancy.end())
      sr.metrics.final_occupancy = it->second;
    result.seeds.push_back(std::move(sr));
  }
  return summary_csv({result});
}

}  // namespace cosmocore::harness
