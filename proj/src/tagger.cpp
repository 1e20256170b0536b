#include "cosmocore/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "json.hpp"

namespace cosmocore {

namespace {

double clamp(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

AffectTag heuristic_tag(const Trajectory& trajectory, double td_error, double td_scale) {
  if (!(td_scale > 0.0)) throw validation_error("td_scale must be > 0");
  double valence = clamp(trajectory.reward, -1.0, 1.0);
  switch (trajectory.feedback) {
    case FeedbackKind::SyntaxError: valence = std::min(valence, -0.8); break;
    case FeedbackKind::SemanticError:
    case FeedbackKind::RuntimeError: valence = std::min(valence, -0.6); break;
    case FeedbackKind::Pass: break;
  }
  const double arousal = clamp(std::abs(td_error) / td_scale, 0.0, 1.0);
  return AffectTag{valence, arousal};
}

MlpTagger::MlpTagger()
    : w1_(kHidden * (kInput + 1), 0.0), w2_(kOutput * (kHidden + 1), 0.0) {}

MlpTagger MlpTagger::random_init(Rng& rng) {
  MlpTagger t;
  const double b1 = 1.0 / std::sqrt(static_cast<double>(kInput));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(kHidden));
  for (double& w : t.w1_) w = rng.uniform(-b1, b1);
  for (double& w : t.w2_) w = rng.uniform(-b2, b2);
  return t;
}

MlpTagger::ForwardCache MlpTagger::forward_cached(std::span<const double> x) const {
  if (x.size() != kInput)
    throw validation_error("tagger expects " + std::to_string(kInput) +
                           " features, got " + std::to_string(x.size()));
  ForwardCache c;
  c.pre_hidden.resize(kHidden);
  c.hidden.resize(kHidden);
  for (std::size_t j = 0; j < kHidden; ++j) {
    const double* row = &w1_[j * (kInput + 1)];
    double z = row[kInput];  // bias
    for (std::size_t k = 0; k < kInput; ++k) z += row[k] * x[k];
    c.pre_hidden[j] = z;
    c.hidden[j] = z > 0.0 ? z : 0.0;
  }
  for (std::size_t o = 0; o < kOutput; ++o) {
    const double* row = &w2_[o * (kHidden + 1)];
    double z = row[kHidden];
    for (std::size_t j = 0; j < kHidden; ++j) z += row[j] * c.hidden[j];
    c.pre_out[o] = z;
  }
  c.valence = std::tanh(c.pre_out[0]);
  c.arousal = logistic(c.pre_out[1]);
  return c;
}

AffectTag MlpTagger::forward(std::span<const double> features) const {
  const ForwardCache c = forward_cached(features);
  return AffectTag{c.valence, c.arousal};
}

double MlpTagger::accumulate_gradient(const TaggerSample& sample, double scale,
                                      std::vector<double>& g1,
                                      std::vector<double>& g2) const {
  const auto& [x, target] = sample;
  const ForwardCache c = forward_cached(x);
  const double dv = c.valence - target.valence;
  const double da = c.arousal - target.arousal;
  // data term: 0.5 * (dv^2 + da^2)
  const double dz[2] = {dv * (1.0 - c.valence * c.valence) * scale,
                        da * c.arousal * (1.0 - c.arousal) * scale};
  std::vector<double> dhidden(kHidden, 0.0);
  for (std::size_t o = 0; o < kOutput; ++o) {
    double* grow = &g2[o * (kHidden + 1)];
    const double* wrow = &w2_[o * (kHidden + 1)];
    for (std::size_t j = 0; j < kHidden; ++j) {
      grow[j] += dz[o] * c.hidden[j];
      dhidden[j] += dz[o] * wrow[j];
    }
    grow[kHidden] += dz[o];
  }
  for (std::size_t j = 0; j < kHidden; ++j) {
    if (c.pre_hidden[j] <= 0.0) continue;  // rectifier mask
    double* grow = &g1[j * (kInput + 1)];
    const double d = dhidden[j];
    for (std::size_t k = 0; k < kInput; ++k) grow[k] += d * x[k];
    grow[kInput] += d;
  }
  return 0.5 * (dv * dv + da * da);
}

double MlpTagger::dataset_loss(const std::vector<TaggerSample>& dataset,
                               double l2_coefficient) const {
  double data = 0.0;
  for (const auto& sample : dataset) {
    const ForwardCache c = forward_cached(sample.first);
    const double dv = c.valence - sample.second.valence;
    const double da = c.arousal - sample.second.arousal;
    data += 0.5 * (dv * dv + da * da);
  }
  data /= static_cast<double>(dataset.size());
  double l2 = 0.0;
  for (double w : w1_) l2 += w * w;
  for (double w : w2_) l2 += w * w;
  return data + l2_coefficient * l2;
}

TrainReport MlpTagger::train(const std::vector<TaggerSample>& dataset,
                             const TaggerTrainConfig& cfg, Rng& rng) {
  if (dataset.empty()) throw validation_error("training dataset is empty");
  if (!(cfg.learning_rate > 0.0) && cfg.learning_rate != 0.0)
    throw validation_error("learning_rate must be >= 0");
  if (cfg.l2_coefficient < 0.0) throw validation_error("l2_coefficient must be >= 0");
  if (cfg.batch_size < 1) throw validation_error("batch_size must be >= 1");
  for (const auto& sample : dataset) validate_tag(sample.second);

  TrainReport report;
  report.initial_loss = dataset_loss(dataset, cfg.l2_coefficient);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> g1(w1_.size()), g2(w2_.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      std::fill(g1.begin(), g1.end(), 0.0);
      std::fill(g2.begin(), g2.end(), 0.0);
      for (std::size_t i = start; i < end; ++i)
        accumulate_gradient(dataset[order[i]], inv_batch, g1, g2);
      const double lr = cfg.learning_rate;
      const double decay = 2.0 * cfg.l2_coefficient;
      for (std::size_t i = 0; i < w1_.size(); ++i)
        w1_[i] -= lr * (g1[i] + decay * w1_[i]);
      for (std::size_t i = 0; i < w2_.size(); ++i)
        w2_[i] -= lr * (g2[i] + decay * w2_[i]);
    }
    report.epoch_losses.push_back(dataset_loss(dataset, cfg.l2_coefficient));
  }
  return report;
}

double MlpTagger::sample_loss(const TaggerSample& sample, double l2_coefficient) const {
  const ForwardCache c = forward_cached(sample.first);
  const double dv = c.valence - sample.second.valence;
  const double da = c.arousal - sample.second.arousal;
  double l2 = 0.0;
  for (double w : w1_) l2 += w * w;
  for (double w : w2_) l2 += w * w;
  return 0.5 * (dv * dv + da * da) + l2_coefficient * l2;
}

double MlpTagger::gradient_check(const TaggerSample& sample, double epsilon,
                                 double l2_coefficient) const {
  if (!(epsilon > 0.0) || epsilon > 1e-2)
    throw validation_error("epsilon must be in (0, 1e-2]");

  std::vector<double> g1(w1_.size(), 0.0), g2(w2_.size(), 0.0);
  accumulate_gradient(sample, 1.0, g1, g2);
  for (std::size_t i = 0; i < g1.size(); ++i) g1[i] += 2.0 * l2_coefficient * w1_[i];
  for (std::size_t i = 0; i < g2.size(); ++i) g2[i] += 2.0 * l2_coefficient * w2_[i];

  const std::vector<double>& x = sample.first;
  const AffectTag& target = sample.second;
  const ForwardCache base = forward_cached(x);

  double l2_total = 0.0;
  for (double w : w1_) l2_total += w * w;
  for (double w : w2_) l2_total += w * w;

  // Loss of the perturbed network, recomputed incrementally: nudging one
  // W1 weight shifts a single hidden pre-activation, nudging one W2 weight
  // shifts a single output pre-activation. The shared arithmetic between
  // the +eps and -eps evaluations cancels exactly, which keeps the central
  // difference well-conditioned while still differencing the true loss.
  auto head_loss = [&](double z0, double z1) {
    const double dv = std::tanh(z0) - target.valence;
    const double da = logistic(z1) - target.arousal;
    return 0.5 * (dv * dv + da * da);
  };
  auto loss_with_hidden_delta = [&](std::size_t j, double new_pre_hidden, double w_old,
                                    double w_new) {
    const double h_old = base.hidden[j];
    const double h_new = new_pre_hidden > 0.0 ? new_pre_hidden : 0.0;
    const double z0 = base.pre_out[0] + w2_[0 * (kHidden + 1) + j] * (h_new - h_old);
    const double z1 = base.pre_out[1] + w2_[1 * (kHidden + 1) + j] * (h_new - h_old);
    const double l2 = l2_total - w_old * w_old + w_new * w_new;
    return head_loss(z0, z1) + l2_coefficient * l2;
  };

  // Denominator floor: below ~1e-6 the finite-difference roundoff
  // (machine_eps * |loss| / eps) would dominate a pure ratio, so the
  // comparison degrades to an absolute one there.
  double max_rel = 0.0;
  auto update_max = [&](double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
  };

  for (std::size_t j = 0; j < kHidden; ++j) {
    for (std::size_t k = 0; k <= kInput; ++k) {
      const std::size_t idx = j * (kInput + 1) + k;
      const double w = w1_[idx];
      const double xk = (k == kInput) ? 1.0 : x[k];
      const double plus =
          loss_with_hidden_delta(j, base.pre_hidden[j] + epsilon * xk, w, w + epsilon);
      const double minus =
          loss_with_hidden_delta(j, base.pre_hidden[j] - epsilon * xk, w, w - epsilon);
      update_max(g1[idx], (plus - minus) / (2.0 * epsilon));
    }
  }
  for (std::size_t o = 0; o < kOutput; ++o) {
    for (std::size_t j = 0; j <= kHidden; ++j) {
      const std::size_t idx = o * (kHidden + 1) + j;
      const double w = w2_[idx];
      const double hj = (j == kHidden) ? 1.0 : base.hidden[j];
      auto out_loss = [&](double w_new) {
        double z0 = base.pre_out[0], z1 = base.pre_out[1];
        if (o == 0)
          z0 += (w_new - w) * hj;
        else
          z1 += (w_new - w) * hj;
        const double l2 = l2_total - w * w + w_new * w_new;
        return head_loss(z0, z1) + l2_coefficient * l2;
      };
      update_max(g2[idx],
                 (out_loss(w + epsilon) - out_loss(w - epsilon)) / (2.0 * epsilon));
    }
  }
  return max_rel;
}

std::vector<std::uint8_t> MlpTagger::save_binary() const {
  std::vector<std::uint8_t> bytes;
  auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto put_doubles = [&](const std::vector<double>& v) {
    const std::size_t off = bytes.size();
    bytes.resize(off + v.size() * sizeof(double));
    std::memcpy(bytes.data() + off, v.data(), v.size() * sizeof(double));
  };
  put_u32(0x434d5450u);  // "CMTP"
  put_u32(kCheckpointVersion);
  put_u32(static_cast<std::uint32_t>(kInput));
  put_u32(static_cast<std::uint32_t>(kHidden));
  put_u32(static_cast<std::uint32_t>(kOutput));
  put_doubles(w1_);
  put_doubles(w2_);
  return bytes;
}

MlpTagger MlpTagger::load_binary(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto get_u32 = [&]() {
    if (pos + 4 > bytes.size()) throw validation_error("truncated tagger checkpoint");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
    return v;
  };
  if (get_u32() != 0x434d5450u) throw validation_error("bad tagger checkpoint magic");
  if (get_u32() != kCheckpointVersion)
    throw validation_error("unsupported tagger checkpoint version");
  if (get_u32() != kInput || get_u32() != kHidden || get_u32() != kOutput)
    throw validation_error("tagger checkpoint dims mismatch");
  MlpTagger t;
  auto get_doubles = [&](std::vector<double>& v) {
    const std::size_t need = v.size() * sizeof(double);
    if (pos + need > bytes.size()) throw validation_error("truncated tagger checkpoint");
    std::memcpy(v.data(), bytes.data() + pos, need);
    pos += need;
  };
  get_doubles(t.w1_);
  get_doubles(t.w2_);
  if (pos != bytes.size()) throw validation_error("trailing bytes in tagger checkpoint");
  return t;
}

std::string MlpTagger::save_json() const {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["dims"] = {kInput, kHidden, kOutput};
  j["W1"] = w1_;
  j["W2"] = w2_;
  return j.dump();
}

MlpTagger MlpTagger::load_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("version").get<std::uint32_t>() != kCheckpointVersion)
    throw validation_error("unsupported tagger checkpoint version");
  const auto dims = j.at("dims").get<std::vector<std::size_t>>();
  if (dims != std::vector<std::size_t>{kInput, kHidden, kOutput})
    throw validation_error("tagger checkpoint dims mismatch");
  MlpTagger t;
  t.w1_ = j.at("W1").get<std::vector<double>>();
  t.w2_ = j.at("W2").get<std::vector<double>>();
  if (t.w1_.size() != kHidden * (kInput + 1) || t.w2_.size() != kOutput * (kHidden + 1))
    throw validation_error("tagger checkpoint weight count mismatch");
  return t;
}

}  // namespace cosmocore
