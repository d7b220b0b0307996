#include "infoplan/planning.hpp"

#include <algorithm>
#include <numeric>

namespace infoplan {

namespace {

constexpr double kTieTolerance = 1e-9;

// Lower rank wins ties: Null before everything, then info-space order.
std::size_t tie_rank(const Fluent& info, std::size_t index) {
  return info.is_null() ? 0 : index + 1;
}

}  // namespace

EdgeScorer true_scorer(const ScoreFunctionSpec& spec) {
  EdgeScorer s;
  s.fn = [spec](const FactoredBelief& before, const FactoredBelief& after,
                const Fluent& info, bool prev) {
    return score_with_history(spec, before, after, info, prev);
  };
  s.info_independent = false;
  s.uses_history = spec.history_penalty.has_value();
  return s;
}

std::size_t DagKeyHash::operator()(const DagKey& k) const noexcept {
  // FNV-1a over the quantized cells.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (auto c : k.cells) mix(static_cast<std::uint64_t>(c));
  mix(k.prev_transmitted ? 1u : 0u);
  return static_cast<std::size_t>(h);
}

DagKey make_dag_key(const FactoredBelief& b, bool prev_transmitted,
                    double quantum) {
  DagKey key;
  key.prev_transmitted = prev_transmitted;
  key.cells.reserve(b.flat().size());
  for (double p : b.flat()) {
    key.cells.push_back(static_cast<std::int64_t>(std::llround(p / quantum)));
  }
  return key;
}

std::vector<DagEdge> get_successors(const DagNode& node,
                                    std::span<const FactoredBelief> trajectory,
                                    std::span<const Fluent> info_space,
                                    const EdgeScorer& scorer,
                                    const DagConfig& config) {
  if (node.timestep >= trajectory.size()) {
    throw ContractViolation("get_successors: timestep beyond trajectory");
  }
  const FactoredBelief& agent_view = trajectory[node.timestep];
  const FactoredBelief drifted = human_forward_step(node.human_belief, config.forward);

  std::vector<DagEdge> edges;
  std::unordered_map<DagKey, std::size_t, DagKeyHash> by_key;

  for (std::size_t idx = 0; idx < info_space.size(); ++idx) {
    const Fluent& info = info_space[idx];
    std::optional<FactoredBelief> next;
    if (info.is_null()) {
      next = drifted;
    } else {
      try {
        next = jeffrey_rescale(drifted, info, marginal(agent_view, info));
      } catch (const UnsupportedUpdate&) {
        continue;
      }
    }
    const bool transmitted = !info.is_null();
    const bool prev_flag = scorer.uses_history && transmitted;
    DagKey key = make_dag_key(*next, prev_flag, config.quantum);

    auto it = by_key.find(key);
    if (it == by_key.end()) {
      const double w =
          scorer.fn(node.human_belief, *next, info, node.prev_transmitted);
      by_key.emplace(key, edges.size());
      edges.push_back(DagEdge{
          DagNode{std::move(*next), node.timestep + 1, prev_flag, std::move(key)},
          idx, info, w});
      continue;
    }

    DagEdge& existing = edges[it->second];
    // Weigh against the group's representative belief so that merged
    // informations are compared on identical inputs.
    const double w = scorer.info_independent
                         ? existing.weight
                         : scorer.fn(node.human_belief, existing.next.human_belief,
                                     info, node.prev_transmitted);
    const bool better =
        w > existing.weight + kTieTolerance ||
        (std::abs(w - existing.weight) <= kTieTolerance &&
         tie_rank(info, idx) < tie_rank(existing.info, existing.info_index));
    if (better) {
      existing.weight = w;
      existing.info = info;
      existing.info_index = idx;
    }
  }
  return edges;
}

InfoPlan longest_weighted_path_dag(const DagNode& root,
                                   const SuccessorFn& successors,
                                   std::size_t horizon, std::size_t beam_width) {
  struct Entry {
    DagNode node;
    double value = 0.0;
    long parent = -1;  // index into the previous layer
    Fluent via;
    std::size_t via_index = 0;
    double via_weight = 0.0;
  };

  InfoPlan out;
  std::vector<std::vector<Entry>> layers;
  layers.reserve(horizon + 1);
  layers.push_back({Entry{root, 0.0, -1, Fluent::null(), 0, 0.0}});

  for (std::size_t t = 0; t < horizon; ++t) {
    std::vector<Entry> next;
    std::unordered_map<DagKey, std::size_t, DagKeyHash> index;
    const auto& layer = layers.back();
    for (std::size_t u = 0; u < layer.size(); ++u) {
      auto edges = successors(layer[u].node);
      ++out.nodes_expanded;
      for (auto& e : edges) {
        const double value = layer[u].value + e.weight;
        auto it = index.find(e.next.key);
        if (it == index.end()) {
          index.emplace(e.next.key, next.size());
          next.push_back(Entry{std::move(e.next), value, static_cast<long>(u),
                               e.info, e.info_index, e.weight});
          continue;
        }
        Entry& cur = next[it->second];
        const bool better =
            value > cur.value + kTieTolerance ||
            (std::abs(value - cur.value) <= kTieTolerance &&
             tie_rank(e.info, e.info_index) < tie_rank(cur.via, cur.via_index));
        if (better) {
          // Keep the belief the winning path actually reaches.
          cur.node = std::move(e.next);
          cur.value = value;
          cur.parent = static_cast<long>(u);
          cur.via = e.info;
          cur.via_index = e.info_index;
          cur.via_weight = e.weight;
        }
      }
    }
    if (next.empty()) {
      throw PlanningFailure("information DAG has a dead end");
    }
    if (beam_width > 0 && next.size() > beam_width) {
      std::vector<std::size_t> order(next.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return next[a].value > next[b].value;
      });
      order.resize(beam_width);
      std::sort(order.begin(), order.end());
      std::vector<Entry> kept;
      kept.reserve(beam_width);
      for (auto i : order) kept.push_back(std::move(next[i]));
      next = std::move(kept);
    }
    layers.push_back(std::move(next));
  }

  const auto& last = layers.back();
  std::size_t best = 0;
  for (std::size_t i = 1; i < last.size(); ++i) {
    if (last[i].value > last[best].value + kTieTolerance) best = i;
  }
  out.total = last[best].value;

  out.infos.resize(horizon);
  out.info_indices.resize(horizon);
  out.weights.resize(horizon);
  out.human_beliefs.resize(horizon + 1, root.human_belief);
  std::size_t at = best;
  for (std::size_t t = horizon; t > 0; --t) {
    const Entry& e = layers[t][at];
    out.infos[t - 1] = e.via;
    out.info_indices[t - 1] = e.via_index;
    out.weights[t - 1] = e.via_weight;
    out.human_beliefs[t] = e.node.human_belief;
    at = static_cast<std::size_t>(e.parent);
  }
  return out;
}

}  // namespace infoplan
