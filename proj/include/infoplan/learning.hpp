#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "infoplan/belief.hpp"
#include "infoplan/planning.hpp"
#include "infoplan/scoring.hpp"

namespace infoplan {

/// Entry-wise p' ln p' - p ln p between B_H and B_H' (0 ln 0 = 0). The
/// weighted gain of the update is the dot product of this with w.
std::vector<double> featurize(const FactoredBelief& b_h,
                              const FactoredBelief& b_h_next);

struct TrainConfig {
  double learning_rate = 1e-1;
  double min_learning_rate = 1e-3;
  double l2_scale = 1e-7;
  std::size_t batch_size = 100;
  std::size_t replay_capacity = 10'000;
  double epsilon_start = 1.0;
  double epsilon_end = 1e-2;
  /// Episodes for epsilon to decay from epsilon_start to epsilon_end.
  std::size_t epsilon_decay_episodes = 20;
  std::vector<std::size_t> hidden = {100, 50};
  double init_scale = 0.05;
  /// Append a "transmitted last step" bit to every feature vector.
  bool history_feature = false;
  std::size_t steps_per_timestep = 1;

  void validate() const;
};

/// Fully connected regressor: sigmoid hidden layers, linear scalar output.
class ScoreModel {
 public:
  ScoreModel(std::size_t input_dim, std::vector<std::size_t> hidden,
             std::uint64_t seed, double init_scale = 0.05);

  double predict(std::span<const double> x) const;

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  /// Zero the output layer so every prediction is exactly 0.
  void zero_output_layer();

  struct Batch {
    std::vector<std::span<const double>> inputs;
    std::vector<double> targets;
  };

  /// Mean squared error plus l2 * sum of squared parameters.
  double loss(const Batch& batch, double l2) const;
  /// Analytic gradient of loss() with respect to parameters().
  std::vector<double> gradient(const Batch& batch, double l2) const;
  /// Both of the above from a single pass over the batch.
  std::pair<double, std::vector<double>> loss_and_gradient(const Batch& batch,
                                                           double l2) const;

 private:
  struct LayerView {
    std::size_t in, out, w_offset, b_offset;
  };
  void forward(std::span<const double> x,
               std::vector<std::vector<double>>& activations) const;

  std::vector<std::size_t> sizes_;
  std::vector<LayerView> layers_;
  std::vector<double> params_;
};

/// Least-squares linear fit of scores on features; recovers the effective
/// per-entry weights when the score is linear in the features.
class LinearProbe {
 public:
  static LinearProbe fit(const std::vector<std::vector<double>>& features,
                         const std::vector<double>& targets, double ridge = 1e-10);
  double predict(std::span<const double> x) const;
  std::span<const double> coefficients() const { return coef_; }
  double intercept() const { return intercept_; }

 private:
  std::vector<double> coef_;
  double intercept_ = 0.0;
};

struct Transition {
  FactoredBelief before;
  FactoredBelief after;
  double noisy_score = 0.0;
  bool prev_transmitted = false;
  std::vector<double> feature;
};

/// FIFO replay buffer of scored belief transitions.
class ReplayDataset {
 public:
  explicit ReplayDataset(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  void clear() { items_.clear(); }
  const Transition& at(std::size_t i) const { return items_.at(i); }

  /// Up to `n` distinct indices, uniformly without replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const;
  ScoreModel::Batch batch(std::span<const std::size_t> indices) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

/// Gradient descent with multiplicative step-size backoff.
struct Optimizer {
  double learning_rate;
  double min_learning_rate;
  double l2_scale;
  double last_step_size = 0.0;  // 0 when the last batch was skipped

  explicit Optimizer(const TrainConfig& c)
      : learning_rate(c.learning_rate),
        min_learning_rate(c.min_learning_rate),
        l2_scale(c.l2_scale) {}
};

/// One update on `batch`; returns the loss before the update. A step that
/// raises the batch loss is undone and retried at half the size, starting
/// from the base rate each call; below the floor nothing changes.
double train_step(ScoreModel& model, const ScoreModel::Batch& batch,
                  Optimizer& opt);

Fluent epsilon_greedy_info(const Fluent& planned, std::span<const Fluent> info_space,
                           double epsilon, std::mt19937_64& rng);

/// Exponential decay from `start` at `anchor_episode` to the configured end
/// value over epsilon_decay_episodes, then held at the end value.
double epsilon_at(const TrainConfig& c, std::size_t episode,
                  std::size_t anchor_episode, double start);

/// Learned edge weights for transmissions. Null is not learned: its score is
/// the fixed null reward, since its belief change (drift alone) looks the
/// same as resending something the human already knows.
EdgeScorer model_scorer(const ScoreModel& model, bool history_feature,
                        double null_reward);

struct PreferenceChange {
  std::size_t episode = 0;
  std::vector<double> weights;  // per factor value
  std::optional<FKind> f_kind;
  double epsilon_reset = 0.5;
  /// Drop stored transitions: they were scored under the old preferences.
  bool clear_replay = false;
};

struct LearningConfig {
  TrainConfig train;
  std::size_t episodes = 40;
  std::vector<PreferenceChange> changes;
  std::uint64_t seed = 0;
};

struct EpisodeRecord {
  std::size_t episode = 0;
  double true_score = 0.0;
  double noisy_score = 0.0;
  double epsilon = 0.0;
  double mean_loss = 0.0;
  double env_reward = 0.0;
  std::size_t steps = 0;
  std::size_t infos = 0;
  bool failed = false;
};

struct LearningResult {
  ScoreModel model;
  std::vector<EpisodeRecord> curve;
};

ScoreFunctionSpec apply_preference_change(const ScoreFunctionSpec& current,
                                          const BeliefLayout& layout,
                                          const PreferenceChange& change);

/// Online estimation of the human's score function: plan under the current
/// model, explore informations epsilon-greedily, store every scored
/// transition and take gradient steps as the episode runs.
template <PlanningDomain D>
LearningResult train_loop(
    const D& domain, SimulatedHuman& human, const PlannerConfig& planner,
    const LearningConfig& config,
    const std::function<typename D::World(std::size_t episode)>& make_world,
    std::optional<ScoreModel> initial_model = std::nullopt) {
  config.train.validate();
  const FactoredBelief prior = domain.human_prior();
  const std::size_t input_dim =
      prior.layout().total_size() + (config.train.history_feature ? 1 : 0);
  ScoreModel model = initial_model
                         ? std::move(*initial_model)
                         : ScoreModel(input_dim, config.train.hidden, config.seed,
                                      config.train.init_scale);
  if (model.input_dim() != input_dim) {
    throw ContractViolation("train_loop: model input size does not match domain");
  }

  ReplayDataset data(config.train.replay_capacity);
  Optimizer opt(config.train);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::span<const Fluent> infos =
      planner.info_space.empty() ? std::span<const Fluent>(domain.info_space())
                                 : std::span<const Fluent>(planner.info_space);

  LearningResult result{model, {}};
  std::size_t anchor = 0;
  double eps_start = config.train.epsilon_start;

  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    for (const auto& change : config.changes) {
      if (change.episode == ep) {
        human.set_spec(apply_preference_change(human.spec(), prior.layout(), change));
        anchor = ep;
        eps_start = change.epsilon_reset;
        if (change.clear_replay) data.clear();
      }
    }
    const double epsilon = epsilon_at(config.train, ep, anchor, eps_start);

    auto world = make_world(ep);
    human.reset(prior);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    ExecutionHooks hooks;
    hooks.scorer = [&] {
      return model_scorer(model, config.train.history_feature, human.spec().null_reward);
    };
    hooks.choose_info = [&](const Fluent& planned) {
      return epsilon_greedy_info(planned, infos, epsilon, rng);
    };
    hooks.on_transmit = [&](const SimulatedHuman::Response& r, const Fluent& info,
                            bool prev) {
      if (!info.is_null()) {
        Transition tr{r.before, r.after, r.noisy, prev, featurize(r.before, r.after)};
        if (config.train.history_feature) tr.feature.push_back(prev ? 1.0 : 0.0);
        data.push(std::move(tr));
      }
      if (data.size() == 0) return;
      for (std::size_t k = 0; k < config.train.steps_per_timestep; ++k) {
        const auto idx = data.sample_indices(config.train.batch_size, rng);
        loss_sum += train_step(model, data.batch(idx), opt);
        ++loss_count;
      }
    };

    const EpisodeTrace trace =
        execute_with_replanning(domain, world, human, planner, hooks);

    EpisodeRecord rec;
    rec.episode = ep;
    rec.true_score = trace.clean_return;
    rec.noisy_score = trace.noisy_return;
    rec.epsilon = epsilon;
    rec.mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    rec.env_reward = trace.env_return;
    rec.steps = trace.steps.size();
    rec.infos = trace.infos;
    rec.failed = trace.error.has_value();
    result.curve.push_back(rec);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace infoplan
