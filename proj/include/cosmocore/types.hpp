#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cosmocore/program.hpp"

namespace cosmocore {

struct validation_error : std::runtime_error {
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr std::size_t kFeatureDim = 512;

enum class FeedbackKind { Pass, SyntaxError, SemanticError, RuntimeError };

std::string feedback_text(FeedbackKind kind);
FeedbackKind feedback_from_text(const std::string& s);
inline bool is_failure(FeedbackKind kind) { return kind != FeedbackKind::Pass; }

// One generation episode: encoded prompt, the program that was produced,
// what execution said about it, and the scalar reward in [-1, 1].
struct Trajectory {
  std::string task_id;  // identifies the prompt/context the episode came from
  std::vector<double> prompt_features;
  miniworld::Program program;
  FeedbackKind feedback = FeedbackKind::Pass;
  std::string feedback_detail;
  double reward = 0.0;
};

// Throws validation_error describing the first violated invariant.
// expected_dim == 0 skips the feature-dimension check (snapshots may elide
// features entirely).
void validate_trajectory(const Trajectory& traj, std::size_t expected_dim = 0);

// Valence in [-1, 1], arousal in [0, 1].
struct AffectTag {
  double valence = 0.0;
  double arousal = 0.0;
};

void validate_tag(const AffectTag& tag);

// p = |td| + lambda * |v| * a. Rejects non-finite inputs and negative lambda.
double compute_priority(double td_error, const AffectTag& tag, double lambda_weight);

struct BufferEntry {
  Trajectory trajectory;
  AffectTag tag;
  double td_error = 0.0;
  double priority = 0.0;
  std::uint64_t seq = 0;
};

// Builds an entry with its priority derived from (td_error, tag); the buffer
// assigns seq on insert.
BufferEntry make_entry(Trajectory trajectory, const AffectTag& tag, double td_error,
                       double lambda_weight);

}  // namespace cosmocore
