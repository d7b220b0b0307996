#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "infoplan/belief.hpp"
#include "infoplan/domain.hpp"
#include "infoplan/scoring.hpp"

namespace infoplan {

class ProblemTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExactConfig {
  std::size_t horizon = 3;
  /// Must contain Null; at most six entries.
  std::vector<Fluent> info_space;
  HumanForwardModel forward{0.0};
  /// Cap on memoized (belief, timestep) entries across both stages.
  std::size_t max_states = 50'000;
};

inline std::string belief_key(const FactoredBelief& b) {
  std::string key;
  char buf[32];
  for (double p : b.flat()) {
    std::snprintf(buf, sizeof buf, "%.10f|", p);
    key += buf;
  }
  return key;
}

/// Decomposition solver for tiny instances, used as an oracle. Stage one
/// solves the agent-environment belief MDP by expectimax; stage two solves
/// the agent-human belief MDP over (B_A, B_H) with the environment action
/// restricted to the stage-one optimal set.
template <EnumerableDomain D>
class ExactSolver {
 public:
  using State = typename D::State;
  using Action = typename D::Action;

  struct Value {
    double env = 0.0;
    double human = 0.0;
  };

  struct Decision {
    Action action;
    Fluent info;
  };

  ExactSolver(const D& domain, ScoreFunctionSpec spec, ExactConfig config)
      : domain_(&domain), spec_(std::move(spec)), config_(std::move(config)) {
    if (config_.horizon > 4) {
      throw ProblemTooLarge("exact solver: horizon above 4");
    }
    if (config_.info_space.size() > 6) {
      throw ProblemTooLarge("exact solver: more than 6 informations");
    }
    bool has_null = false;
    for (const auto& f : config_.info_space) has_null = has_null || f.is_null();
    if (!has_null) throw ContractViolation("exact solver: info space needs Null");
  }

  Value solve(const State& b_a, const FactoredBelief& b_h) {
    Value v;
    v.env = env_value(b_a, 0);
    v.human = human_value(b_a, b_h, 0);
    return v;
  }

  /// pi(<B_A, B_H>) at timestep t; only valid for states reached by solve().
  Decision policy(const State& b_a, const FactoredBelief& b_h,
                  std::size_t t) const {
    auto it = info_memo_.find(joint_key(b_a, b_h, t));
    if (it == info_memo_.end() || !it->second.decision) {
      throw ContractViolation("exact solver: no decision stored for this state");
    }
    return *it->second.decision;
  }

  /// Env-optimal action set at (B_A, t).
  const std::vector<Action>& acting_options(const State& b_a, std::size_t t) {
    env_value(b_a, t);
    return env_memo_.at(env_key(b_a, t)).optimal;
  }

  std::size_t states() const { return env_memo_.size() + info_memo_.size(); }

 private:
  struct EnvEntry {
    double value = 0.0;
    std::vector<Action> optimal;
  };
  struct InfoEntry {
    double value = 0.0;
    std::optional<Decision> decision;
  };

  std::string env_key(const State& b_a, std::size_t t) const {
    return std::to_string(t) + "#" + domain_->state_key(b_a);
  }
  std::string joint_key(const State& b_a, const FactoredBelief& b_h,
                        std::size_t t) const {
    return env_key(b_a, t) + "#" + belief_key(b_h);
  }

  void check_size() const {
    if (states() > config_.max_states) {
      throw ProblemTooLarge("exact solver: state budget exceeded");
    }
  }

  double env_value(const State& b_a, std::size_t t) {
    if (t >= config_.horizon || domain_->is_terminal(b_a)) return 0.0;
    const auto key = env_key(b_a, t);
    if (auto it = env_memo_.find(key); it != env_memo_.end()) {
      return it->second.value;
    }
    std::vector<std::pair<Action, double>> scored;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& a : domain_->actions(b_a)) {
      double q = domain_->expected_reward(b_a, a);
      for (const auto& o : domain_->outcomes(b_a, a)) {
        q += o.probability * env_value(domain_->update(b_a, a, o.observation), t + 1);
      }
      scored.emplace_back(a, q);
      best = std::max(best, q);
    }
    EnvEntry entry{best, {}};
    for (const auto& [a, q] : scored) {
      if (q >= best - 1e-9) entry.optimal.push_back(a);
    }
    env_memo_.emplace(key, std::move(entry));
    check_size();
    return best;
  }

  double human_value(const State& b_a, const FactoredBelief& b_h, std::size_t t) {
    if (t >= config_.horizon || domain_->is_terminal(b_a)) return 0.0;
    const auto key = joint_key(b_a, b_h, t);
    if (auto it = info_memo_.find(key); it != info_memo_.end()) {
      return it->second.value;
    }
    env_value(b_a, t);
    const std::vector<Action> options = env_memo_.at(env_key(b_a, t)).optimal;
    const FactoredBelief view = domain_->human_view(b_a);

    InfoEntry entry{-std::numeric_limits<double>::infinity(), std::nullopt};
    for (const auto& info : config_.info_space) {
      std::optional<FactoredBelief> next_h;
      try {
        next_h = jeffrey_update(b_h, make_information(view, info), config_.forward);
      } catch (const UnsupportedUpdate&) {
        continue;
      }
      const double r = score(spec_, b_h, *next_h, info);
      for (const auto& a : options) {
        double q = r;
        for (const auto& o : domain_->outcomes(b_a, a)) {
          q += o.probability *
               human_value(domain_->update(b_a, a, o.observation), *next_h, t + 1);
        }
        if (q > entry.value + 1e-12) {
          entry.value = q;
          entry.decision = Decision{a, info};
        }
      }
    }
    info_memo_.insert_or_assign(key, std::move(entry));
    check_size();
    return info_memo_.at(key).value;
  }

  const D* domain_;
  ScoreFunctionSpec spec_;
  ExactConfig config_;
  std::unordered_map<std::string, EnvEntry> env_memo_;
  std::unordered_map<std::string, InfoEntry> info_memo_;
};

}  // namespace infoplan
