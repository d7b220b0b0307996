#pragma once

#include <concepts>
#include <stdexcept>
#include <string>
#include <vector>

#include "infoplan/belief.hpp"

namespace infoplan {

class PlanningFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class Observation>
struct StepResult {
  Observation observation;
  double reward = 0.0;
};

/// What the planners need from an environment model. `State` is the agent's
/// belief state (B_A plus fully observed bookkeeping such as its own pose).
template <class D>
concept PlanningDomain = requires(const D& d, const typename D::State& s,
                                  const typename D::Action& a,
                                  const typename D::Observation& o,
                                  typename D::World& w) {
  { d.initial_state(w) } -> std::same_as<typename D::State>;
  { d.is_terminal(s) } -> std::convertible_to<bool>;
  { d.update(s, a, o) } -> std::same_as<typename D::State>;
  { d.predict(s, a) } -> std::same_as<typename D::Observation>;
  { d.solve_acting(s) } -> std::same_as<std::vector<typename D::Action>>;
  { d.human_view(s) } -> std::same_as<FactoredBelief>;
  { d.human_prior() } -> std::same_as<FactoredBelief>;
  { d.info_space() } -> std::convertible_to<const std::vector<Fluent>&>;
  { d.step_limit() } -> std::convertible_to<std::size_t>;
  { d.describe(a) } -> std::convertible_to<std::string>;
  { d.describe(o) } -> std::convertible_to<std::string>;
  { d.describe(Fluent{}) } -> std::convertible_to<std::string>;
  { w.step(a) } -> std::same_as<StepResult<typename D::Observation>>;
  { w.terminal() } -> std::convertible_to<bool>;
  { o == o } -> std::convertible_to<bool>;
};

/// Extra model access used by the exact (enumerative) solver.
template <class D>
struct Outcome {
  double probability = 0.0;
  typename D::Observation observation;
};

template <class D>
concept EnumerableDomain =
    PlanningDomain<D> && requires(const D& d, const typename D::State& s,
                                  const typename D::Action& a) {
      { d.actions(s) } -> std::same_as<std::vector<typename D::Action>>;
      { d.expected_reward(s, a) } -> std::convertible_to<double>;
      { d.outcomes(s, a) } -> std::same_as<std::vector<Outcome<D>>>;
      { d.state_key(s) } -> std::convertible_to<std::string>;
    };

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax_lowest(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

}  // namespace infoplan
