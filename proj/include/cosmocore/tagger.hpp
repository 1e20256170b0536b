#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cosmocore/rng.hpp"
#include "cosmocore/types.hpp"

namespace cosmocore {

// Deterministic rule-based tagger: the training-label oracle and baseline.
// Valence follows the clamped reward with failures forced negative
// (syntax -> at most -0.8, semantic/runtime -> at most -0.6); arousal is
// |td_error| normalized by td_scale and clamped to [0, 1].
AffectTag heuristic_tag(const Trajectory& trajectory, double td_error, double td_scale);

struct TaggerTrainConfig {
  double learning_rate = 1e-3;
  double l2_coefficient = 1e-4;
  int batch_size = 32;
  int epochs = 1;
};

struct TrainReport {
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;  // dataset loss after each epoch
  double final_loss() const {
    return epoch_losses.empty() ? initial_loss : epoch_losses.back();
  }
};

using TaggerSample = std::pair<std::vector<double>, AffectTag>;

// 512 -> 128 -> 2 perceptron with a rectified hidden layer; output 0 goes
// through tanh (valence), output 1 through the logistic function (arousal),
// so forward outputs satisfy the AffectTag ranges for any finite weights.
// Weight matrices carry the bias as an extra trailing column.
class MlpTagger {
public:
  static constexpr std::size_t kInput = kFeatureDim;
  static constexpr std::size_t kHidden = 128;
  static constexpr std::size_t kOutput = 2;

  MlpTagger();  // all-zero weights
  static MlpTagger random_init(Rng& rng);  // uniform in +-1/sqrt(fan_in)

  AffectTag forward(std::span<const double> features) const;

  // Mini-batch gradient descent on mean squared error over (valence,
  // arousal) plus l2_coefficient * sum of squared weights.
  TrainReport train(const std::vector<TaggerSample>& dataset,
                    const TaggerTrainConfig& cfg, Rng& rng);

  // Per-sample training loss (same objective as train with batch size 1).
  double sample_loss(const TaggerSample& sample, double l2_coefficient) const;

  // Max relative error between the analytic gradient of the per-sample loss
  // and central finite differences, over every weight.
  double gradient_check(const TaggerSample& sample, double epsilon,
                        double l2_coefficient = 1e-4) const;

  // Checkpointing: binary form is bit-exact, JSON form value-exact.
  std::vector<std::uint8_t> save_binary() const;
  static MlpTagger load_binary(const std::vector<std::uint8_t>& bytes);
  std::string save_json() const;
  static MlpTagger load_json(const std::string& text);

  std::vector<double>& w1() { return w1_; }
  std::vector<double>& w2() { return w2_; }
  const std::vector<double>& w1() const { return w1_; }
  const std::vector<double>& w2() const { return w2_; }

private:
  struct ForwardCache {
    std::vector<double> pre_hidden;  // kHidden
    std::vector<double> hidden;      // kHidden, rectified
    double pre_out[2] = {0.0, 0.0};
    double valence = 0.0;
    double arousal = 0.0;
  };
  ForwardCache forward_cached(std::span<const double> features) const;

  // Accumulates the data-term gradient of one sample (scaled by `scale`)
  // into (g1, g2); returns the sample's squared-error term.
  double accumulate_gradient(const TaggerSample& sample, double scale,
                             std::vector<double>& g1, std::vector<double>& g2) const;

  double dataset_loss(const std::vector<TaggerSample>& dataset,
                      double l2_coefficient) const;

  std::vector<double> w1_;  // kHidden x (kInput + 1), row-major
  std::vector<double> w2_;  // kOutput x (kHidden + 1), row-major
};

}  // namespace cosmocore
