#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "infoplan/belief.hpp"
#include "infoplan/domain.hpp"
#include "infoplan/scoring.hpp"

namespace infoplan {

/// Edge weight for the information DAG: the human's score (known R_H) or a
/// learned estimate of it.
struct EdgeScorer {
  std::function<double(const FactoredBelief& before, const FactoredBelief& after,
                       const Fluent& info, bool prev_transmitted)>
      fn;
  /// The weight depends only on the belief pair (and history flag), so
  /// informations reaching the same node share one evaluation.
  bool info_independent = false;
  /// Node identity must carry "transmitted on the previous step".
  bool uses_history = false;
};

EdgeScorer true_scorer(const ScoreFunctionSpec& spec);

/// Beliefs rounded to `quantum` for node identity.
struct DagKey {
  std::vector<std::int64_t> cells;
  bool prev_transmitted = false;

  bool operator==(const DagKey&) const = default;
};

struct DagKeyHash {
  std::size_t operator()(const DagKey& k) const noexcept;
};

DagKey make_dag_key(const FactoredBelief& b, bool prev_transmitted,
                    double quantum);

struct DagNode {
  FactoredBelief human_belief;
  std::size_t timestep = 0;
  bool prev_transmitted = false;
  DagKey key;
};

struct DagEdge {
  DagNode next;
  std::size_t info_index = 0;  // position in the info space
  Fluent info;
  double weight = 0.0;
};

struct DagConfig {
  HumanForwardModel forward{1e-3};
  /// Nodes kept per layer (highest cumulative weight); 0 keeps all.
  std::size_t beam_width = 64;
  double quantum = 1e-6;
};

/// One successor per supported information; informations landing on the
/// same quantized belief are merged, keeping the heaviest edge (Null first,
/// then lowest index, on ties).
std::vector<DagEdge> get_successors(const DagNode& node,
                                    std::span<const FactoredBelief> trajectory,
                                    std::span<const Fluent> info_space,
                                    const EdgeScorer& scorer,
                                    const DagConfig& config);

struct InfoPlan {
  std::vector<Fluent> infos;
  std::vector<std::size_t> info_indices;
  std::vector<double> weights;
  /// Predicted human belief before each step, plus the final one.
  std::vector<FactoredBelief> human_beliefs;
  double total = 0.0;
  std::size_t nodes_expanded = 0;
};

using SuccessorFn = std::function<std::vector<DagEdge>(const DagNode&)>;

/// Layered forward dynamic program over (human belief, timestep) nodes.
InfoPlan longest_weighted_path_dag(const DagNode& root,
                                   const SuccessorFn& successors,
                                   std::size_t horizon, std::size_t beam_width);

/// Acting plan, belief trajectory and information plan under the
/// maximum-likelihood determinization.
template <PlanningDomain D>
class Determinized {
 public:
  using State = typename D::State;
  using Action = typename D::Action;
  using Observation = typename D::Observation;

  explicit Determinized(const D& domain) : domain_(&domain) {}

  const D& domain() const { return *domain_; }
  Observation observe(const State& s, const Action& a) const {
    return domain_->predict(s, a);
  }
  State step(const State& s, const Action& a) const {
    return domain_->update(s, a, domain_->predict(s, a));
  }

 private:
  const D* domain_;
};

template <PlanningDomain D>
Determinized<D> determinize(const D& domain) {
  return Determinized<D>(domain);
}

template <PlanningDomain D>
std::vector<typename D::Action> solve_acting(const Determinized<D>& det,
                                             const typename D::State& b_a) {
  return det.domain().solve_acting(b_a);
}

template <PlanningDomain D>
std::vector<typename D::State> belief_trajectory(
    const Determinized<D>& det, std::span<const typename D::Action> plan,
    const typename D::State& b_a) {
  std::vector<typename D::State> out;
  out.reserve(plan.size() + 1);
  out.push_back(b_a);
  for (const auto& a : plan) out.push_back(det.step(out.back(), a));
  return out;
}

template <PlanningDomain D>
struct JointStep {
  typename D::Action action;
  Fluent info;
  typename D::Observation predicted_observation;
  FactoredBelief predicted_agent_view;  // B_A in the human's layout
  FactoredBelief predicted_human;       // B_H before this step
};

template <PlanningDomain D>
struct JointPlan {
  std::vector<JointStep<D>> steps;
  double info_value = 0.0;
};

struct PlannerConfig {
  DagConfig dag;
  /// Empty means the domain's full info space.
  std::vector<Fluent> info_space;
};

template <PlanningDomain D>
JointPlan<D> plan(const D& domain, const typename D::State& b_a,
                  const FactoredBelief& b_h, bool prev_transmitted,
                  const EdgeScorer& scorer, const PlannerConfig& config) {
  JointPlan<D> out;
  if (domain.is_terminal(b_a)) return out;

  const auto det = determinize(domain);
  const auto acting = solve_acting(det, b_a);
  const auto states = belief_trajectory<D>(det, acting, b_a);

  std::vector<FactoredBelief> views;
  views.reserve(states.size());
  for (const auto& s : states) views.push_back(domain.human_view(s));

  const std::span<const Fluent> infos =
      config.info_space.empty() ? std::span<const Fluent>(domain.info_space())
                                : std::span<const Fluent>(config.info_space);

  DagNode root{b_h, 0, scorer.uses_history && prev_transmitted,
               make_dag_key(b_h, scorer.uses_history && prev_transmitted,
                            config.dag.quantum)};
  SuccessorFn succ = [&](const DagNode& node) {
    return get_successors(node, views, infos, scorer, config.dag);
  };
  const InfoPlan info = longest_weighted_path_dag(root, succ, acting.size(),
                                                  config.dag.beam_width);

  out.info_value = info.total;
  out.steps.reserve(acting.size());
  for (std::size_t t = 0; t < acting.size(); ++t) {
    out.steps.push_back(JointStep<D>{acting[t], info.infos[t],
                                     det.observe(states[t], acting[t]),
                                     views[t], info.human_beliefs[t]});
  }
  return out;
}

struct TraceStep {
  std::size_t t = 0;
  std::string action;
  std::string observation;
  std::string info;
  std::optional<double> marginal;
  double clean_score = 0.0;
  double noisy_score = 0.0;
  double env_reward = 0.0;
  bool replanned = false;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  std::size_t replans = 0;
  std::size_t infos = 0;
  double env_return = 0.0;
  double clean_return = 0.0;
  double noisy_return = 0.0;
  double plan_seconds = 0.0;
  bool terminated = false;
  std::optional<std::string> error;

  double infos_per_timestep() const {
    return steps.empty() ? 0.0
                         : static_cast<double>(infos) / static_cast<double>(steps.size());
  }
};

/// Optional instrumentation used by the online learner.
struct ExecutionHooks {
  /// Re-read at every (re)plan so a learner can swap in its latest model.
  std::function<EdgeScorer()> scorer;
  /// Replace the planned information (exploration). Returning something
  /// other than the planned fluent forces the remaining plan to be re-solved.
  std::function<Fluent(const Fluent& planned)> choose_info;
  /// Called after every transmission with the human's response.
  std::function<void(const SimulatedHuman::Response&, const Fluent&,
                     bool prev_transmitted)>
      on_transmit;
};

/// Run one episode: plan, act, transmit, and re-plan whenever an observation
/// differs from its determinized prediction.
template <PlanningDomain D>
EpisodeTrace execute_with_replanning(const D& domain, typename D::World& world,
                                     SimulatedHuman& human,
                                     const PlannerConfig& config,
                                     const ExecutionHooks& hooks) {
  using Clock = std::chrono::steady_clock;
  EpisodeTrace trace;
  auto b_a = domain.initial_state(world);
  std::optional<JointPlan<D>> current;
  std::size_t cursor = 0;

  auto replan = [&]() {
    const auto start = Clock::now();
    current = plan(domain, b_a, human.belief(), human.last_transmitted(),
                   hooks.scorer(), config);
    cursor = 0;
    trace.plan_seconds +=
        std::chrono::duration<double>(Clock::now() - start).count();
  };

  const std::size_t limit = domain.step_limit();
  try {
    while (!domain.is_terminal(b_a)) {
      if (trace.steps.size() >= limit) {
        throw PlanningFailure("episode exceeded step limit");
      }
      if (!current || cursor >= current->steps.size()) replan();
      if (current->steps.empty()) {
        throw PlanningFailure("planner returned an empty plan for a live state");
      }
      const JointStep<D>& step = current->steps[cursor];

      Fluent info = step.info;
      bool deviated = false;
      if (hooks.choose_info) {
        info = hooks.choose_info(step.info);
        deviated = !(info == step.info);
      }

      const bool prev = human.last_transmitted();
      const FactoredBelief view = domain.human_view(b_a);
      Information sent = make_information(view, info);
      std::optional<SimulatedHuman::Response> received;
      try {
        received = human.receive(sent);
      } catch (const UnsupportedUpdate&) {
        // Only exploratory picks can land here; planned ones were screened.
        info = Fluent::null();
        sent = Information::null();
        deviated = !(info == step.info);
        received = human.receive(sent);
      }
      const SimulatedHuman::Response& response = *received;
      if (hooks.on_transmit) hooks.on_transmit(response, info, prev);

      const auto result = world.step(step.action);
      const bool mismatch = !(result.observation == step.predicted_observation);
      b_a = domain.update(b_a, step.action, result.observation);

      TraceStep rec;
      rec.t = trace.steps.size();
      rec.action = domain.describe(step.action);
      rec.observation = domain.describe(result.observation);
      rec.info = domain.describe(info);
      rec.marginal = sent.marginal;
      rec.clean_score = response.clean;
      rec.noisy_score = response.noisy;
      rec.env_reward = result.reward;
      rec.replanned = mismatch && !domain.is_terminal(b_a);
      trace.steps.push_back(rec);

      trace.env_return += result.reward;
      trace.clean_return += response.clean;
      trace.noisy_return += response.noisy;
      if (!info.is_null()) ++trace.infos;

      ++cursor;
      if (rec.replanned) {
        ++trace.replans;
        current.reset();
      } else if (deviated) {
        current.reset();
      }
    }
    trace.terminated = true;
  } catch (const PlanningFailure& e) {
    trace.error = std::string("planning failure: ") + e.what();
  } catch (const ContractViolation& e) {
    trace.error = std::string("contract violation: ") + e.what();
  }
  return trace;
}

}  // namespace infoplan
