#pragma once

// Reference implementations used only by tests. They share the belief and
// scoring primitives with the library but none of its planning code.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "infoplan/belief.hpp"
#include "infoplan/exact.hpp"
#include "infoplan/gridworld.hpp"
#include "infoplan/planning.hpp"
#include "infoplan/scoring.hpp"

namespace oracle {

using namespace infoplan;

/// Best total weight over every information sequence of length `horizon`,
/// visiting all |I|^horizon sequences. Unsupported updates end a branch.
inline double brute_force_info_value(std::span<const FactoredBelief> views,
                                     const FactoredBelief& b_h,
                                     std::span<const Fluent> infos,
                                     const EdgeScorer& scorer,
                                     const HumanForwardModel& forward,
                                     std::size_t horizon) {
  const double none = -std::numeric_limits<double>::infinity();
  double best = none;
  struct Frame {
    FactoredBelief belief;
    double total;
    bool prev;
  };
  // Explicit odometer over sequences rather than recursion with memoization.
  std::vector<std::size_t> digits(horizon, 0);
  while (true) {
    Frame f{b_h, 0.0, false};
    bool ok = true;
    for (std::size_t t = 0; t < horizon && ok; ++t) {
      const Fluent& info = infos[digits[t]];
      try {
        const auto next = jeffrey_update(f.belief, make_information(views[t], info), forward);
        f.total += scorer.fn(f.belief, next, info, f.prev);
        f.prev = scorer.uses_history && !info.is_null();
        f.belief = next;
      } catch (const UnsupportedUpdate&) {
        ok = false;
      }
    }
    if (ok) best = std::max(best, f.total);
    std::size_t pos = 0;
    while (pos < horizon && ++digits[pos] == infos.size()) digits[pos++] = 0;
    if (pos == horizon) break;
  }
  return best;
}

/// Achievable (env, human) expected-return pairs, pruned to the Pareto front.
struct Pair {
  double env;
  double human;
};

inline std::vector<Pair> pareto(std::vector<Pair> pts) {
  std::sort(pts.begin(), pts.end(), [](const Pair& a, const Pair& b) {
    return a.env != b.env ? a.env > b.env : a.human > b.human;
  });
  std::vector<Pair> out;
  for (const auto& p : pts) {
    if (out.empty() || p.human > out.back().human + 1e-12) out.push_back(p);
  }
  return out;
}

/// Every deterministic history-dependent joint policy (action and
/// information per decision point), summarized by its Pareto front. The
/// front is closed under the combination rule, so no optimum is lost.
inline std::vector<Pair> joint_policy_front(const Gridworld& g,
                                            const ScoreFunctionSpec& spec,
                                            std::span<const Fluent> infos,
                                            const HumanForwardModel& forward,
                                            const GridState& b_a,
                                            const FactoredBelief& b_h,
                                            std::size_t steps_left) {
  if (steps_left == 0 || g.is_terminal(b_a)) return {Pair{0.0, 0.0}};
  std::vector<Pair> all;
  const FactoredBelief view = g.human_view(b_a);
  for (const auto& a : g.actions(b_a)) {
    const double env_r = g.expected_reward(b_a, a);
    const auto outs = g.outcomes(b_a, a);
    for (const auto& info : infos) {
      std::optional<FactoredBelief> next_h;
      try {
        next_h = jeffrey_update(b_h, make_information(view, info), forward);
      } catch (const UnsupportedUpdate&) {
        continue;
      }
      const double human_r = score(spec, b_h, *next_h, info);
      // Minkowski sum over observation branches.
      std::vector<Pair> acc{Pair{env_r, human_r}};
      for (const auto& o : outs) {
        const auto sub = joint_policy_front(g, spec, infos, forward,
                                            g.update(b_a, a, o.observation), *next_h,
                                            steps_left - 1);
        std::vector<Pair> combined;
        for (const auto& x : acc) {
          for (const auto& y : sub) {
            combined.push_back(Pair{x.env + o.probability * y.env,
                                    x.human + o.probability * y.human});
          }
        }
        acc = pareto(std::move(combined));
      }
      all.insert(all.end(), acc.begin(), acc.end());
    }
  }
  return pareto(std::move(all));
}

/// Lexicographic optimum: best env return, then best human return among
/// policies within `tol` of it.
inline Pair lexicographic_best(const std::vector<Pair>& front, double tol = 1e-9) {
  double env = -std::numeric_limits<double>::infinity();
  for (const auto& p : front) env = std::max(env, p.env);
  double human = -std::numeric_limits<double>::infinity();
  for (const auto& p : front) {
    if (p.env >= env - tol) human = std::max(human, p.human);
  }
  return {env, human};
}

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k,
                                          double zero_chance) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& x : p) {
    x = u(rng) < zero_chance ? 0.0 : 0.05 + u(rng);
    total += x;
  }
  if (total == 0.0) {
    p[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)] = 1.0;
    total = 1.0;
  }
  for (auto& x : p) x /= total;
  return p;
}

inline FactoredBelief random_belief(std::mt19937_64& rng, const LayoutPtr& layout,
                                    double zero_chance) {
  std::vector<double> flat;
  for (std::size_t f = 0; f < layout->factor_count(); ++f) {
    const auto p = random_simplex(rng, layout->dim(f), zero_chance);
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return FactoredBelief(layout, std::move(flat));
}

/// Null plus `count - 1` distinct random non-null fluents.
inline std::vector<Fluent> random_info_space(std::mt19937_64& rng,
                                             const BeliefLayout& layout,
                                             std::size_t count) {
  std::vector<Fluent> all;
  for (std::size_t f = 0; f < layout.factor_count(); ++f) {
    for (std::size_t v = 0; v < layout.dim(f); ++v) {
      all.push_back(Fluent::holds(f, v));
      all.push_back(Fluent::not_holds(f, v));
    }
  }
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<Fluent> out{Fluent::null()};
  for (std::size_t i = 0; i + 1 < count && i < all.size(); ++i) out.push_back(all[i]);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace oracle
