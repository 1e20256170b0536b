#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cosmocore/harness.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace cosmocore;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::int64_t> parse_seeds(const std::string& text) {
  std::vector<std::int64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoll(item));
  }
  if (seeds.empty()) throw validation_error("empty seed list");
  return seeds;
}

ExperimentConfig load_config(const std::string& config_path) {
  if (config_path.empty()) return ExperimentConfig{};
  return config_from_json(read_file(config_path));
}

std::vector<miniworld::TaskSpec> load_corpus(const std::string& corpus_path) {
  return miniworld::corpus_from_json(read_file(corpus_path));
}

int finish_run(const harness::RunResult& result) {
  for (const auto& f : result.failures)
    std::cerr << "seed " << f.seed << " aborted: " << f.error << "\n";
  return result.failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CosmoCore affective replay experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string corpus_path = "data/corpus.json";
  std::string seeds_text;
  std::string out_dir = "out";
  bool no_prioritization = false;
  bool no_pruning = false;
  bool alg1_compat = false;
  int sweeps = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config JSON");
    cmd->add_option("--corpus", corpus_path, "task corpus JSON")
        ->capture_default_str();
    cmd->add_option("--seeds", seeds_text, "comma-separated seed list");
    cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
    cmd->add_option("--sweeps", sweeps, "override corpus passes per seed");
  };

  auto* run_cmd = app.add_subcommand("run", "run one experiment arm");
  add_common(run_cmd);
  run_cmd->add_flag("--no-prioritization", no_prioritization,
                    "disable valence-gated immediate replay");
  run_cmd->add_flag("--no-pruning", no_pruning, "disable the prune bin");
  run_cmd->add_flag("--alg1-compat", alg1_compat,
                    "use the literal Alg-1 prune rule");

  auto* ablate_cmd = app.add_subcommand("ablate", "run the 4-arm comparison");
  add_common(ablate_cmd);

  std::string validate_path = "data/corpus.json";
  auto* validate_cmd = app.add_subcommand("validate-corpus",
                                          "re-execute every reference program");
  validate_cmd->add_option("--corpus", validate_path, "task corpus JSON")
      ->capture_default_str();

  std::string report_in;
  std::string report_out = "summary.csv";
  std::string report_arm = "run";
  std::size_t report_window = 5;
  auto* report_cmd =
      app.add_subcommand("report", "rebuild a CSV summary from episodes.jsonl");
  report_cmd->add_option("--in", report_in, "run output directory")->required();
  report_cmd->add_option("--out", report_out, "CSV path")->capture_default_str();
  report_cmd->add_option("--arm", report_arm, "arm label")->capture_default_str();
  report_cmd->add_option("--window", report_window, "zero-error window")
      ->capture_default_str();

  std::uint64_t gen_seed = 7;
  std::size_t gen_tasks = 24;
  std::string gen_out = "data/corpus.json";
  auto* gen_cmd = app.add_subcommand("gen-corpus", "generate a seeded task corpus");
  gen_cmd->add_option("--seed", gen_seed, "corpus seed")->capture_default_str();
  gen_cmd->add_option("--tasks", gen_tasks, "number of tasks")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "corpus path")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed() || ablate_cmd->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      if (!seeds_text.empty()) cfg.seeds = parse_seeds(seeds_text);
      harness::RunOptions opts;
      if (sweeps > 0) opts.n_sweeps = sweeps;
      const auto corpus = load_corpus(corpus_path);

      if (run_cmd->parsed()) {
        if (no_prioritization) cfg.use_prioritization = false;
        if (no_pruning) cfg.use_pruning = false;
        opts.alg1_compat = alg1_compat;
        const auto result = harness::run_episode_loop(cfg, corpus, opts);
        harness::write_run_outputs(out_dir, result);
        std::cout << "arm " << result.arm << ": " << result.seeds.size()
                  << " seeds -> " << out_dir << "\n";
        return finish_run(result);
      }

      const auto ablation = harness::run_ablations(cfg, corpus, opts);
      harness::write_ablation_outputs(out_dir, ablation);
      int rc = 0;
      for (const auto& arm : ablation.arms) rc |= finish_run(arm);
      std::cout << "4 arms -> " << out_dir << "\n";
      return rc;
    }

    if (validate_cmd->parsed()) {
      const auto corpus = load_corpus(validate_path);
      for (const auto& task : corpus) {
        const auto res = miniworld::execute(task.reference, task);
        if (res.feedback == FeedbackKind::Pass)
          std::cout << task.id << ": ok\n";
        else
          std::cout << task.id << ": FAIL (" << feedback_text(res.feedback) << ": "
                    << res.detail << ")\n";
      }
      const auto problems = miniworld::validate_corpus(corpus);
      if (!problems.empty()) {
        for (const auto& p : problems) std::cerr << "invalid: " << p << "\n";
        return 1;
      }
      std::cout << corpus.size() << " tasks valid\n";
      return 0;
    }

    if (report_cmd->parsed()) {
      std::vector<std::string> lines;
      {
        std::ifstream in(fs::path(report_in) / "episodes.jsonl");
        if (!in) throw validation_error("cannot read episodes.jsonl under " + report_in);
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
      }
      // final occupancy lives in metrics.json, not in the per-episode records
      std::map<std::int64_t, std::size_t> occupancy;
      if (std::ifstream metrics(fs::path(report_in) / "metrics.json"); metrics) {
        const auto j = nlohmann::json::parse(metrics);
        for (const auto& seed : j.at("per_seed"))
          occupancy[seed.at("seed").get<std::int64_t>()] =
              seed.at("final_occupancy").get<std::size_t>();
      }
      std::string csv = harness::report_from_episode_lines(report_arm, lines,
                                                           report_window, occupancy);
      std::ofstream out(report_out, std::ios::binary);
      out << csv;
      std::cout << "wrote " << report_out << "\n";
      return 0;
    }

    if (gen_cmd->parsed()) {
      const auto corpus = miniworld::make_corpus(gen_seed, gen_tasks);
      const fs::path parent = fs::path(gen_out).parent_path();
      if (!parent.empty()) fs::create_directories(parent);
      std::ofstream out(gen_out, std::ios::binary);
      out << miniworld::corpus_to_json(corpus) << "\n";
      std::cout << "wrote " << gen_out << " (" << corpus.size() << " tasks)\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
