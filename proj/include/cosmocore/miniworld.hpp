#pragma once

#include <string>
#include <vector>

#include "cosmocore/program.hpp"
#include "cosmocore/rng.hpp"
#include "cosmocore/types.hpp"

namespace cosmocore::miniworld {

// One generation task: prompt, input tables, reference pipeline and the
// hidden test (the expected output table).
struct TaskSpec {
  std::string id;
  std::string prompt;
  std::vector<Table> tables;  // pipeline starts from tables[0]
  Program reference;
  Table expected;
};

struct ExecResult {
  FeedbackKind feedback = FeedbackKind::Pass;
  std::string detail;
  double reward = 0.0;
  Table output;  // meaningful only when the program ran to completion
};

// Runs the pipeline against the task's tables and scores it against the
// hidden test. Total mapping: ill-formed / unresolvable names -> syntax_error
// (-1.0), type errors during evaluation -> runtime_error (-1.0), wrong
// output -> semantic_error (-0.5), exact match (row multisets, columns in
// order) -> pass (+1.0). Pure: identical inputs give identical results.
ExecResult execute(const Program& program, const TaskSpec& task);

// Row-multiset, column-exact table equality.
bool tables_match(const Table& a, const Table& b);

enum class BugKind { WrongPredicate, WrongJoinKey, WrongAggregation, MalformedOp };

std::string bug_kind_text(BugKind kind);

// Returns a program differing from the reference in exactly the requested
// way; throws validation_error when the reference has no op the bug kind
// applies to.
Program mutate(const Program& reference, BugKind kind, Rng& rng);

bool bug_applicable(const Program& reference, BugKind kind);

// 512-dim deterministic encoding: 256 hashed prompt-token counts, 255 hashed
// program-token counts (each block L2-normalized; zero when the bag is
// empty), reward in the final slot.
std::vector<double> encode_features(const std::string& prompt, const Program& program,
                                    double reward);

// Seeded corpus spanning every op kind; references are validated against
// their own hidden tests at build time.
std::vector<TaskSpec> make_corpus(std::uint64_t seed, std::size_t n_tasks = 24);

std::string corpus_to_json(const std::vector<TaskSpec>& corpus);
std::vector<TaskSpec> corpus_from_json(const std::string& text);

// Re-executes every reference program against its hidden test; returns one
// message per violation (empty == valid).
std::vector<std::string> validate_corpus(const std::vector<TaskSpec>& corpus);

}  // namespace cosmocore::miniworld
