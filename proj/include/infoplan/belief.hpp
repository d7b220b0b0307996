#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace infoplan {

/// Raised when a caller breaks a documented precondition (shape mismatch,
/// out-of-range index, Null where an atom is required).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The transmitted information contradicts the support of the receiving
/// belief, so Jeffrey's rule has no defined result.
class UnsupportedUpdate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kNormTolerance = 1e-9;

class CategoricalDist {
 public:
  /// Normalizes `probs`; throws if any entry is negative or the total is 0.
  explicit CategoricalDist(std::vector<double> probs);

  static CategoricalDist uniform(std::size_t n);
  static CategoricalDist degenerate(std::size_t n, std::size_t at);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

/// -sum_i w_i p_i ln p_i over entries with p_i > 0.
double weighted_entropy(std::span<const double> probs,
                        std::span<const double> weights);
double weighted_entropy(const CategoricalDist& dist,
                        std::span<const double> weights);

struct FactorSpec {
  std::string name;
  std::vector<std::string> values;
};

/// Factor names and value sets of a factored belief. Factor ids are
/// positions in this layout; the flattened order is factor-then-value.
class BeliefLayout {
 public:
  explicit BeliefLayout(std::vector<FactorSpec> factors);

  std::size_t factor_count() const { return factors_.size(); }
  std::size_t dim(std::size_t factor) const;
  std::size_t offset(std::size_t factor) const;
  std::size_t total_size() const { return total_; }
  const std::string& factor_name(std::size_t factor) const;
  const std::string& value_name(std::size_t factor, std::size_t value) const;
  const std::vector<FactorSpec>& factors() const { return factors_; }

  bool operator==(const BeliefLayout& other) const;

 private:
  std::vector<FactorSpec> factors_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

using LayoutPtr = std::shared_ptr<const BeliefLayout>;

LayoutPtr make_layout(std::vector<FactorSpec> factors);

/// Same value set repeated for every named factor.
LayoutPtr make_uniform_layout(const std::vector<std::string>& factor_names,
                              const std::vector<std::string>& values);

/// Immutable product of per-factor categorical distributions, stored flat.
class FactoredBelief {
 public:
  /// Each factor slice of `flat` is normalized independently.
  FactoredBelief(LayoutPtr layout, std::vector<double> flat);

  static FactoredBelief uniform(LayoutPtr layout);

  const BeliefLayout& layout() const { return *layout_; }
  const LayoutPtr& layout_ptr() const { return layout_; }
  std::size_t factor_count() const { return layout_->factor_count(); }

  std::span<const double> factor(std::size_t f) const;
  std::span<const double> flat() const { return flat_; }
  double prob(std::size_t f, std::size_t v) const;

  /// Copy with one factor replaced (and renormalized).
  FactoredBelief with_factor(std::size_t f, std::span<const double> probs) const;

  bool same_layout(const FactoredBelief& other) const;

  /// {factor_name: [probs...]} in layout order.
  nlohmann::ordered_json to_json() const;
  static FactoredBelief from_json(LayoutPtr layout,
                                  const nlohmann::ordered_json& j);

 private:
  LayoutPtr layout_;
  std::vector<double> flat_;
};

/// One nonnegative weight per flattened belief entry.
class Weights {
 public:
  explicit Weights(std::vector<double> w);

  /// The same per-value weights for every factor of `layout`.
  static Weights shared(const BeliefLayout& layout,
                        std::span<const double> per_value);
  static Weights ones(const BeliefLayout& layout);

  std::span<const double> values() const { return w_; }
  std::size_t size() const { return w_.size(); }

 private:
  std::vector<double> w_;
};

double factored_weighted_entropy(const FactoredBelief& b, const Weights& w);

/// S_w(b) - S_w(b_next); negative when the update raises weighted entropy.
double weighted_gain(const FactoredBelief& b, const FactoredBelief& b_next,
                     const Weights& w);

enum class FluentKind { Null, Holds, NotHolds };

/// A transmittable atom: "factor takes value" or its negation, or Null.
struct Fluent {
  FluentKind kind = FluentKind::Null;
  std::size_t factor = 0;
  std::size_t value = 0;

  static Fluent null() { return {}; }
  static Fluent holds(std::size_t f, std::size_t v) {
    return {FluentKind::Holds, f, v};
  }
  static Fluent not_holds(std::size_t f, std::size_t v) {
    return {FluentKind::NotHolds, f, v};
  }
  bool is_null() const { return kind == FluentKind::Null; }
  bool operator==(const Fluent&) const = default;
};

/// A fluent together with the sender's marginal probability that it holds.
struct Information {
  Fluent fluent;
  std::optional<double> marginal;

  static Information null() { return {}; }
  bool is_null() const { return fluent.is_null(); }
};

void validate_fluent(const BeliefLayout& layout, const Fluent& fluent);

/// Probability that `fluent` holds under `b`. Null is a contract violation.
double marginal(const FactoredBelief& b, const Fluent& fluent);

/// Attach the marginal of `fluent` under `b` (Null stays without one).
Information make_information(const FactoredBelief& b, const Fluent& fluent);

/// Sticky drift kernel the human applies every step.
struct HumanForwardModel {
  double drift_epsilon = 1e-3;

  explicit HumanForwardModel(double eps = 1e-3);
};

/// Per factor: stay with 1-eps, move to each other value with eps/(K-1).
FactoredBelief human_forward_step(const FactoredBelief& b,
                                  const HumanForwardModel& m);

/// Drift, then move the mass of "fluent holds" to the transmitted marginal
/// while keeping relative proportions inside the event and its complement.
FactoredBelief jeffrey_update(const FactoredBelief& b_h, const Information& info,
                              const HumanForwardModel& m);

/// The rescaling half of jeffrey_update, applied to an already drifted
/// belief. Planners drift once per node and rescale per candidate.
FactoredBelief jeffrey_rescale(const FactoredBelief& drifted,
                               const Fluent& fluent, double target);

}  // namespace infoplan
