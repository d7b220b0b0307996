#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "infoplan/belief.hpp"

namespace infoplan {

enum class FKind { Identity, Square, Log };

FKind parse_f_kind(std::string_view name);  // "id" | "sq" | "log"
std::string_view to_string(FKind kind);

/// The human's preferences: weights over belief entries plus the shape of
/// the gain-to-score transform.
struct ScoreFunctionSpec {
  FKind f_kind = FKind::Identity;
  double threshold = 1.0;
  double penalty = -10.0;
  double null_reward = 1e-3;
  Weights weights;
  /// When set, added to the score of a transmission that directly follows
  /// another non-null transmission.
  std::optional<double> history_penalty;

  explicit ScoreFunctionSpec(Weights w) : weights(std::move(w)) {}

  void validate() const;
};

double apply_f(const ScoreFunctionSpec& spec, double gain, bool is_null);

double score(const ScoreFunctionSpec& spec, const FactoredBelief& b_h,
             const FactoredBelief& b_h_next, const Fluent& info);

/// score() plus the history penalty when both this and the previous step
/// transmitted something.
double score_with_history(const ScoreFunctionSpec& spec,
                          const FactoredBelief& b_h,
                          const FactoredBelief& b_h_next, const Fluent& info,
                          bool prev_transmitted);

/// Simulated teammate: holds B_H, updates it with Jeffrey's rule and answers
/// each transmission with a score corrupted by Gaussian noise.
class SimulatedHuman {
 public:
  struct Response {
    double clean = 0.0;
    double noisy = 0.0;
    FactoredBelief before;
    FactoredBelief after;
  };

  SimulatedHuman(FactoredBelief initial, HumanForwardModel forward,
                 ScoreFunctionSpec spec, double noise_sigma, std::uint64_t seed);

  /// Propagates UnsupportedUpdate; on error the belief is left untouched.
  Response receive(const Information& info);

  const FactoredBelief& belief() const { return belief_; }
  const ScoreFunctionSpec& spec() const { return spec_; }
  const HumanForwardModel& forward() const { return forward_; }
  double noise_sigma() const { return noise_sigma_; }
  bool last_transmitted() const { return last_transmitted_; }

  /// Start a new episode from `initial`; the noise stream continues.
  void reset(FactoredBelief initial);
  /// Preference change: swap the score function mid-training.
  void set_spec(ScoreFunctionSpec spec);

 private:
  FactoredBelief belief_;
  HumanForwardModel forward_;
  ScoreFunctionSpec spec_;
  double noise_sigma_;
  std::mt19937_64 rng_;
  bool last_transmitted_ = false;
};

}  // namespace infoplan
