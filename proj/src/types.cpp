#include "cosmocore/types.hpp"

#include <cmath>

namespace cosmocore {

std::string feedback_text(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::Pass: return "pass";
    case FeedbackKind::SyntaxError: return "syntax_error";
    case FeedbackKind::SemanticError: return "semantic_error";
    case FeedbackKind::RuntimeError: return "runtime_error";
  }
  throw validation_error("unknown feedback kind");
}

FeedbackKind feedback_from_text(const std::string& s) {
  if (s == "pass") return FeedbackKind::Pass;
  if (s == "syntax_error") return FeedbackKind::SyntaxError;
  if (s == "semantic_error") return FeedbackKind::SemanticError;
  if (s == "runtime_error") return FeedbackKind::RuntimeError;
  throw validation_error("unknown feedback kind: " + s);
}

void validate_trajectory(const Trajectory& traj, std::size_t expected_dim) {
  if (!std::isfinite(traj.reward) || traj.reward < -1.0 || traj.reward > 1.0)
    throw validation_error("trajectory reward outside [-1, 1]");
  if (traj.feedback == FeedbackKind::Pass && !(traj.reward > 0.0))
    throw validation_error("pass feedback requires reward > 0");
  if (expected_dim != 0 && traj.prompt_features.size() != expected_dim)
    throw validation_error("prompt features must have " +
                           std::to_string(expected_dim) + " elements");
  for (double x : traj.prompt_features)
    if (!std::isfinite(x)) throw validation_error("non-finite prompt feature");
}

void validate_tag(const AffectTag& tag) {
  if (!std::isfinite(tag.valence) || tag.valence < -1.0 || tag.valence > 1.0)
    throw validation_error("valence outside [-1, 1]");
  if (!std::isfinite(tag.arousal) || tag.arousal < 0.0 || tag.arousal > 1.0)
    throw validation_error("arousal outside [0, 1]");
}

double compute_priority(double td_error, const AffectTag& tag, double lambda_weight) {
  if (!std::isfinite(td_error)) throw validation_error("non-finite td_error");
  if (!std::isfinite(lambda_weight) || lambda_weight < 0.0)
    throw validation_error("lambda_weight must be finite and >= 0");
  validate_tag(tag);
  return std::abs(td_error) + lambda_weight * std::abs(tag.valence) * tag.arousal;
}

BufferEntry make_entry(Trajectory trajectory, const AffectTag& tag, double td_error,
                       double lambda_weight) {
  validate_trajectory(trajectory);
  BufferEntry entry;
  entry.trajectory = std::move(trajectory);
  entry.tag = tag;
  entry.td_error = td_error;
  entry.priority = compute_priority(td_error, tag, lambda_weight);
  return entry;
}

}  // namespace cosmocore
