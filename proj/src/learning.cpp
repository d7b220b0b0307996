#include "infoplan/learning.hpp"

#include <algorithm>
#include <numeric>

namespace infoplan {

namespace {

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::vector<double> featurize(const FactoredBelief& b_h,
                              const FactoredBelief& b_h_next) {
  if (!b_h.same_layout(b_h_next)) {
    throw ContractViolation("featurize: beliefs have different layouts");
  }
  const auto before = b_h.flat();
  const auto after = b_h_next.flat();
  std::vector<double> out(before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    out[i] = plogp(after[i]) - plogp(before[i]);
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !(min_learning_rate > 0.0) ||
      min_learning_rate > learning_rate) {
    throw ContractViolation("train config: bad learning rates");
  }
  if (l2_scale < 0.0) throw ContractViolation("train config: negative l2 scale");
  if (batch_size == 0 || replay_capacity == 0) {
    throw ContractViolation("train config: batch size and capacity must be positive");
  }
  if (!(epsilon_end > 0.0) || epsilon_end > epsilon_start || epsilon_start > 1.0) {
    throw ContractViolation("train config: need 0 < epsilon_end <= epsilon_start <= 1");
  }
  if (epsilon_decay_episodes == 0) {
    throw ContractViolation("train config: epsilon decay needs at least one episode");
  }
  for (auto h : hidden) {
    if (h == 0) throw ContractViolation("train config: empty hidden layer");
  }
}

ScoreModel::ScoreModel(std::size_t input_dim, std::vector<std::size_t> hidden,
                       std::uint64_t seed, double init_scale) {
  if (input_dim == 0) throw ContractViolation("score model: zero input size");
  sizes_.push_back(input_dim);
  for (auto h : hidden) {
    if (h == 0) throw ContractViolation("score model: empty hidden layer");
    sizes_.push_back(h);
  }
  sizes_.push_back(1);

  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    LayerView v{sizes_[l], sizes_[l + 1], offset, offset + sizes_[l] * sizes_[l + 1]};
    offset = v.b_offset + v.out;
    layers_.push_back(v);
  }
  params_.resize(offset);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-init_scale, init_scale);
  for (auto& p : params_) p = init(rng);
}

void ScoreModel::zero_output_layer() {
  const auto& last = layers_.back();
  std::fill(params_.begin() + static_cast<long>(last.w_offset), params_.end(), 0.0);
}

void ScoreModel::forward(std::span<const double> x,
                         std::vector<std::vector<double>>& acts) const {
  if (x.size() != input_dim()) {
    throw ContractViolation("score model: input has wrong size");
  }
  acts.resize(layers_.size() + 1);
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& v = layers_[l];
    auto& out = acts[l + 1];
    out.assign(v.out, 0.0);
    const double* w = params_.data() + v.w_offset;
    const double* b = params_.data() + v.b_offset;
    const auto& in = acts[l];
    const bool hidden = l + 1 < layers_.size();
    for (std::size_t j = 0; j < v.out; ++j) {
      const double* row = w + j * v.in;
      // Four running sums let the compiler vectorize the dot product.
      double z0 = 0.0, z1 = 0.0, z2 = 0.0, z3 = 0.0;
      std::size_t i = 0;
      for (; i + 4 <= v.in; i += 4) {
        z0 += row[i] * in[i];
        z1 += row[i + 1] * in[i + 1];
        z2 += row[i + 2] * in[i + 2];
        z3 += row[i + 3] * in[i + 3];
      }
      for (; i < v.in; ++i) z0 += row[i] * in[i];
      const double z = b[j] + ((z0 + z1) + (z2 + z3));
      out[j] = hidden ? sigmoid(z) : z;
    }
  }
}

double ScoreModel::predict(std::span<const double> x) const {
  thread_local std::vector<std::vector<double>> acts;
  forward(x, acts);
  return acts.back()[0];
}

double ScoreModel::loss(const Batch& batch, double l2) const {
  if (batch.inputs.empty()) return 0.0;
  double sse = 0.0;
  for (std::size_t k = 0; k < batch.inputs.size(); ++k) {
    const double e = predict(batch.inputs[k]) - batch.targets[k];
    sse += e * e;
  }
  double reg = 0.0;
  for (double p : params_) reg += p * p;
  return sse / static_cast<double>(batch.inputs.size()) + l2 * reg;
}

std::vector<double> ScoreModel::gradient(const Batch& batch, double l2) const {
  return loss_and_gradient(batch, l2).second;
}

std::pair<double, std::vector<double>> ScoreModel::loss_and_gradient(const Batch& batch,
                                                                     double l2) const {
  double reg = 0.0;
  for (double p : params_) reg += p * p;
  std::vector<double> grad(params_.size(), 0.0);
  for (std::size_t i = 0; i < params_.size(); ++i) grad[i] = 2.0 * l2 * params_[i];
  if (batch.inputs.empty()) return {l2 * reg, std::move(grad)};

  double sse = 0.0;
  const double scale = 2.0 / static_cast<double>(batch.inputs.size());
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;
  for (std::size_t k = 0; k < batch.inputs.size(); ++k) {
    forward(batch.inputs[k], acts);
    const double err = acts.back()[0] - batch.targets[k];
    sse += err * err;
    delta.assign(1, scale * err);
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const auto& v = layers_[l];
      const auto& in = acts[l];
      const double* w = params_.data() + v.w_offset;
      for (std::size_t j = 0; j < v.out; ++j) {
        double* gw = grad.data() + v.w_offset + j * v.in;
        for (std::size_t i = 0; i < v.in; ++i) gw[i] += delta[j] * in[i];
        grad[v.b_offset + j] += delta[j];
      }
      if (l == 0) break;
      // Back through the sigmoid feeding this layer.
      prev_delta.assign(v.in, 0.0);
      for (std::size_t j = 0; j < v.out; ++j) {
        const double* row = w + j * v.in;
        for (std::size_t i = 0; i < v.in; ++i) prev_delta[i] += row[i] * delta[j];
      }
      for (std::size_t i = 0; i < v.in; ++i) prev_delta[i] *= in[i] * (1.0 - in[i]);
      delta.swap(prev_delta);
    }
  }
  return {sse / static_cast<double>(batch.inputs.size()) + l2 * reg, std::move(grad)};
}

LinearProbe LinearProbe::fit(const std::vector<std::vector<double>>& features,
                             const std::vector<double>& targets, double ridge) {
  if (features.empty() || features.size() != targets.size()) {
    throw ContractViolation("linear probe: need matching non-empty data");
  }
  const std::size_t d = features.front().size() + 1;  // last column: intercept
  std::vector<double> a(d * d, 0.0), rhs(d, 0.0);
  std::vector<double> row(d);
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (features[k].size() + 1 != d) {
      throw ContractViolation("linear probe: ragged features");
    }
    std::copy(features[k].begin(), features[k].end(), row.begin());
    row[d - 1] = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      rhs[i] += row[i] * targets[k];
      for (std::size_t j = 0; j < d; ++j) a[i * d + j] += row[i] * row[j];
    }
  }
  for (std::size_t i = 0; i + 1 < d; ++i) a[i * d + i] += ridge;

  // Gaussian elimination with partial pivoting.
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < d; ++r) {
      if (std::abs(a[r * d + c]) > std::abs(a[piv * d + c])) piv = r;
    }
    if (std::abs(a[piv * d + c]) < 1e-300) {
      throw ContractViolation("linear probe: singular system");
    }
    if (piv != c) {
      for (std::size_t j = 0; j < d; ++j) std::swap(a[c * d + j], a[piv * d + j]);
      std::swap(rhs[c], rhs[piv]);
    }
    for (std::size_t r = c + 1; r < d; ++r) {
      const double f = a[r * d + c] / a[c * d + c];
      if (f == 0.0) continue;
      for (std::size_t j = c; j < d; ++j) a[r * d + j] -= f * a[c * d + j];
      rhs[r] -= f * rhs[c];
    }
  }
  std::vector<double> x(d);
  for (std::size_t c = d; c-- > 0;) {
    double s = rhs[c];
    for (std::size_t j = c + 1; j < d; ++j) s -= a[c * d + j] * x[j];
    x[c] = s / a[c * d + c];
  }
  LinearProbe probe;
  probe.intercept_ = x.back();
  x.pop_back();
  probe.coef_ = std::move(x);
  return probe;
}

double LinearProbe::predict(std::span<const double> x) const {
  if (x.size() != coef_.size()) throw ContractViolation("linear probe: bad input size");
  double y = intercept_;
  for (std::size_t i = 0; i < x.size(); ++i) y += coef_[i] * x[i];
  return y;
}

ReplayDataset::ReplayDataset(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractViolation("replay dataset: zero capacity");
}

void ReplayDataset::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<std::size_t> ReplayDataset::sample_indices(std::size_t n,
                                                       std::mt19937_64& rng) const {
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t k = std::min(n, idx.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

ScoreModel::Batch ReplayDataset::batch(std::span<const std::size_t> indices) const {
  ScoreModel::Batch b;
  b.inputs.reserve(indices.size());
  b.targets.reserve(indices.size());
  for (auto i : indices) {
    const auto& t = items_.at(i);
    b.inputs.emplace_back(t.feature);
    b.targets.push_back(t.noisy_score);
  }
  return b;
}

double train_step(ScoreModel& model, const ScoreModel::Batch& batch, Optimizer& opt) {
  if (batch.inputs.empty()) return model.loss(batch, opt.l2_scale);
  const auto [before, grad] = model.loss_and_gradient(batch, opt.l2_scale);
  const std::vector<double> saved(model.parameters().begin(), model.parameters().end());
  auto params = model.parameters();
  double lr = opt.learning_rate;
  opt.last_step_size = 0.0;
  while (lr >= opt.min_learning_rate) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = saved[i] - lr * grad[i];
    if (model.loss(batch, opt.l2_scale) <= before) {
      opt.last_step_size = lr;
      return before;
    }
    lr *= 0.5;
  }
  // Every size down to the floor made things worse: skip this batch.
  std::copy(saved.begin(), saved.end(), params.begin());
  return before;
}

Fluent epsilon_greedy_info(const Fluent& planned, std::span<const Fluent> info_space,
                           double epsilon, std::mt19937_64& rng) {
  if (info_space.empty()) return planned;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) >= epsilon) return planned;
  std::uniform_int_distribution<std::size_t> pick(0, info_space.size() - 1);
  return info_space[pick(rng)];
}

double epsilon_at(const TrainConfig& c, std::size_t episode,
                  std::size_t anchor_episode, double start) {
  if (episode < anchor_episode) return start;
  const double rate =
      std::log(c.epsilon_start / c.epsilon_end) / static_cast<double>(c.epsilon_decay_episodes);
  const double e = start * std::exp(-rate * static_cast<double>(episode - anchor_episode));
  return std::max(c.epsilon_end, e);
}

EdgeScorer model_scorer(const ScoreModel& model, bool history_feature,
                        double null_reward) {
  EdgeScorer s;
  s.fn = [&model, history_feature, null_reward](const FactoredBelief& before,
                                                const FactoredBelief& after,
                                                const Fluent& info, bool prev) {
    if (info.is_null()) return null_reward;
    auto x = featurize(before, after);
    if (history_feature) x.push_back(prev ? 1.0 : 0.0);
    return model.predict(x);
  };
  // Null and a no-op transmission can reach the same belief with different
  // weights, so every merged information is scored on its own.
  s.info_independent = false;
  s.uses_history = history_feature;
  return s;
}

ScoreFunctionSpec apply_preference_change(const ScoreFunctionSpec& current,
                                          const BeliefLayout& layout,
                                          const PreferenceChange& change) {
  ScoreFunctionSpec next = current;
  if (!change.weights.empty()) {
    bool per_value = true;
    for (std::size_t f = 0; f < layout.factor_count(); ++f) {
      per_value = per_value && layout.dim(f) == change.weights.size();
    }
    if (per_value) {
      next.weights = Weights::shared(layout, change.weights);
    } else if (change.weights.size() == layout.total_size()) {
      next.weights = Weights(std::vector<double>(change.weights));
    } else {
      throw ContractViolation("preference change: weight vector has wrong size");
    }
  }
  if (change.f_kind) next.f_kind = *change.f_kind;
  next.validate();
  return next;
}

}  // namespace infoplan
