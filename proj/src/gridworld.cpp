#include "infoplan/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace infoplan {

void GridworldConfig::validate() const {
  if (n < 1) throw ContractViolation("gridworld: n must be >= 1");
  if (m < 1 || m > n * n) throw ContractViolation("gridworld: need 1 <= m <= n^2");
  if (types.empty()) throw ContractViolation("gridworld: no object types");
  std::set<std::string> seen(types.begin(), types.end());
  if (seen.size() != types.size() || seen.count("nothing")) {
    throw ContractViolation("gridworld: type names must be unique and not 'nothing'");
  }
}

GridWorldSim::GridWorldSim(const GridworldConfig& config,
                           std::vector<int> contents, int agent)
    : config_(&config), contents_(std::move(contents)), agent_(agent) {
  const int cells = config.n * config.n;
  if (static_cast<int>(contents_.size()) != cells || agent_ < 0 ||
      agent_ >= cells) {
    throw ContractViolation("GridWorldSim: bad layout");
  }
  const int objects = static_cast<int>(std::count_if(
      contents_.begin(), contents_.end(), [](int c) { return c >= 0; }));
  if (objects != config.m) {
    throw ContractViolation("GridWorldSim: object count differs from m");
  }
}

StepResult<GridObservation> GridWorldSim::step(const GridAction& action) {
  const int n = config_->n;
  switch (action.kind) {
    case GridAction::Kind::Move: {
      int r = agent_ / n, c = agent_ % n;
      switch (static_cast<Dir>(action.arg)) {
        case Dir::North: r = std::max(0, r - 1); break;
        case Dir::South: r = std::min(n - 1, r + 1); break;
        case Dir::East: c = std::min(n - 1, c + 1); break;
        case Dir::West: c = std::max(0, c - 1); break;
      }
      agent_ = r * n + c;
      return {{GridObservation::Kind::None, false}, config_->move_reward};
    }
    case GridAction::Kind::Detect: {
      const bool present = contents_[agent_] == action.arg;
      return {{GridObservation::Kind::Presence, present}, config_->detect_reward};
    }
    case GridAction::Kind::Recover: {
      if (contents_[agent_] == action.arg) {
        contents_[agent_] = -1;
        ++recovered_;
        return {{GridObservation::Kind::RecoverResult, true},
                config_->recover_success};
      }
      return {{GridObservation::Kind::RecoverResult, false}, config_->recover_fail};
    }
  }
  throw ContractViolation("GridWorldSim: unknown action");
}

Gridworld::Gridworld(GridworldConfig config) : config_(std::move(config)) {
  config_.validate();
  std::vector<std::string> values = config_.types;
  values.push_back("nothing");
  std::vector<std::string> names;
  for (int r = 0; r < config_.n; ++r) {
    for (int c = 0; c < config_.n; ++c) {
      names.push_back("r" + std::to_string(r) + "c" + std::to_string(c));
    }
  }
  layout_ = make_uniform_layout(names, values);

  info_space_.push_back(Fluent::null());
  for (int cell = 0; cell < cell_count(); ++cell) {
    for (int t = 0; t < type_count(); ++t) {
      info_space_.push_back(Fluent::holds(cell, t));
      info_space_.push_back(Fluent::not_holds(cell, t));
    }
  }
}

GridWorldSim Gridworld::sample_world(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<int> cells(cell_count());
  std::iota(cells.begin(), cells.end(), 0);
  std::vector<int> contents(cell_count(), -1);
  std::uniform_int_distribution<int> type_dist(0, type_count() - 1);
  for (int k = 0; k < config_.m; ++k) {
    std::uniform_int_distribution<int> pick(k, cell_count() - 1);
    std::swap(cells[k], cells[pick(rng)]);
    contents[cells[k]] = type_dist(rng);
  }
  return GridWorldSim(config_, std::move(contents), 0);
}

GridWorldSim Gridworld::world_from_json(const nlohmann::json& scenario) const {
  std::vector<int> contents(cell_count(), -1);
  for (const auto& obj : scenario.at("objects")) {
    const int cell = obj.at("id").get<int>();
    const auto type = obj.at("type").get<std::string>();
    auto it = std::find(config_.types.begin(), config_.types.end(), type);
    if (cell < 0 || cell >= cell_count() || it == config_.types.end() ||
        contents[cell] != -1) {
      throw ContractViolation("scenario: invalid object entry");
    }
    contents[cell] = static_cast<int>(it - config_.types.begin());
  }
  int agent = 0;
  if (scenario.contains("agent")) {
    const auto& a = scenario.at("agent");
    agent = a.is_array() ? a.at(0).get<int>() * config_.n + a.at(1).get<int>()
                         : a.get<int>();
  }
  return GridWorldSim(config_, std::move(contents), agent);
}

FactoredBelief Gridworld::prior() const {
  std::vector<double> per_value(config_.types.size() + 1, 1.0);
  if (config_.m == cell_count()) per_value.back() = 0.0;
  std::vector<double> flat;
  flat.reserve(layout_->total_size());
  for (int c = 0; c < cell_count(); ++c) {
    flat.insert(flat.end(), per_value.begin(), per_value.end());
  }
  return FactoredBelief(layout_, std::move(flat));
}

GridState Gridworld::initial_state(const World& world) const {
  return initial_state(world.agent());
}

GridState Gridworld::initial_state(int agent_cell) const {
  return GridState{agent_cell, 0, prior()};
}

int Gridworld::neighbor(int cell, Dir d) const {
  const int n = config_.n;
  int r = cell / n, c = cell % n;
  switch (d) {
    case Dir::North: r = std::max(0, r - 1); break;
    case Dir::South: r = std::min(n - 1, r + 1); break;
    case Dir::East: c = std::min(n - 1, c + 1); break;
    case Dir::West: c = std::max(0, c - 1); break;
  }
  return r * n + c;
}

int Gridworld::manhattan(int a, int b) const {
  const int n = config_.n;
  return std::abs(a / n - b / n) + std::abs(a % n - b % n);
}

GridState Gridworld::update(const State& s, const Action& a,
                            const Observation& o) const {
  GridState next = s;
  const auto cell = static_cast<std::size_t>(s.agent);
  auto probs = s.belief.factor(cell);
  std::vector<double> p(probs.begin(), probs.end());
  auto zero_value = [&](std::size_t v) {
    p[v] = 0.0;
    if (std::all_of(p.begin(), p.end(), [](double x) { return x == 0.0; })) {
      throw ContractViolation("bayes update: observation has zero probability");
    }
  };
  auto set_degenerate = [&](std::size_t v, bool must_be_possible) {
    if (must_be_possible && p[v] <= 0.0) {
      throw ContractViolation("bayes update: observation has zero probability");
    }
    std::fill(p.begin(), p.end(), 0.0);
    p[v] = 1.0;
  };
  switch (a.kind) {
    case GridAction::Kind::Move:
      next.agent = neighbor(s.agent, static_cast<Dir>(a.arg));
      return next;
    case GridAction::Kind::Detect:
      if (o.kind != GridObservation::Kind::Presence) {
        throw ContractViolation("bayes update: Detect needs a presence reading");
      }
      if (o.flag) {
        set_degenerate(a.arg, true);
      } else {
        zero_value(a.arg);
      }
      break;
    case GridAction::Kind::Recover:
      if (o.kind != GridObservation::Kind::RecoverResult) {
        throw ContractViolation("bayes update: Recover needs a result reading");
      }
      if (o.flag) {
        if (p[a.arg] <= 0.0) {
          throw ContractViolation("bayes update: observation has zero probability");
        }
        set_degenerate(nothing_index(), false);
        ++next.recovered;
      } else {
        zero_value(a.arg);
      }
      break;
  }
  next.belief = s.belief.with_factor(cell, p);
  return next;
}

std::size_t Gridworld::ml_value(const State& s, int cell) const {
  return argmax_lowest(s.belief.factor(cell));
}

GridObservation Gridworld::predict(const State& s, const Action& a) const {
  switch (a.kind) {
    case GridAction::Kind::Move:
      return {GridObservation::Kind::None, false};
    case GridAction::Kind::Detect:
      return {GridObservation::Kind::Presence,
              ml_value(s, s.agent) == static_cast<std::size_t>(a.arg)};
    case GridAction::Kind::Recover:
      return {GridObservation::Kind::RecoverResult,
              ml_value(s, s.agent) == static_cast<std::size_t>(a.arg)};
  }
  return {};
}

GridState Gridworld::predicted_step(const State& s, const Action& a) const {
  return update(s, a, predict(s, a));
}

Gridworld::TargetCost Gridworld::target_cost(const State& s, int cell) const {
  const std::size_t v = ml_value(s, cell);
  const double p = s.belief.prob(cell, v);
  const double blind =
      -(config_.recover_success * p + config_.recover_fail * (1.0 - p));
  const double detect = -(config_.detect_reward + config_.recover_success);
  if (detect < blind) return {detect, true};
  return {blind, false};
}

void Gridworld::append_path(std::vector<Action>& plan, int from, int to) const {
  const int n = config_.n;
  int r = from / n, c = from % n;
  const int tr = to / n, tc = to % n;
  for (; r < tr; ++r) plan.push_back(Action::move(Dir::South));
  for (; r > tr; --r) plan.push_back(Action::move(Dir::North));
  for (; c < tc; ++c) plan.push_back(Action::move(Dir::East));
  for (; c > tc; --c) plan.push_back(Action::move(Dir::West));
}

std::vector<GridAction> Gridworld::solve_acting(const State& s) const {
  const int remaining = config_.m - s.recovered;
  if (remaining <= 0) return {};

  struct Candidate {
    int cell;
    TargetCost cost;
  };
  std::vector<Candidate> candidates;
  for (int cell = 0; cell < cell_count(); ++cell) {
    if (ml_value(s, cell) != nothing_index()) {
      candidates.push_back({cell, target_cost(s, cell)});
    }
  }
  if (static_cast<int>(candidates.size()) < remaining) {
    throw PlanningFailure("gridworld: fewer plausible object cells than objects left");
  }

  // Number of ordered target selections, saturating at the limit.
  double orderings = 1.0;
  for (int k = 0; k < remaining; ++k) {
    orderings *= static_cast<double>(candidates.size() - k);
  }

  std::vector<int> chosen;
  if (orderings <= static_cast<double>(config_.exhaustive_limit)) {
    double min_target = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) min_target = std::min(min_target, c.cost.cost);

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> current;
    std::vector<char> used(candidates.size(), 0);
    auto search = [&](auto&& self, int at, double cost) -> void {
      const int left = remaining - static_cast<int>(current.size());
      if (left == 0) {
        if (cost < best - 1e-12) {
          best = cost;
          chosen = current;
        }
        return;
      }
      if (cost + left * min_target >= best - 1e-12) return;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (used[i]) continue;
        used[i] = 1;
        current.push_back(static_cast<int>(i));
        self(self, candidates[i].cell,
             cost + manhattan(at, candidates[i].cell) + candidates[i].cost.cost);
        current.pop_back();
        used[i] = 0;
      }
    };
    search(search, s.agent, 0.0);
  } else {
    std::vector<char> used(candidates.size(), 0);
    int at = s.agent;
    for (int k = 0; k < remaining; ++k) {
      int pick = -1;
      double pick_cost = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (used[i]) continue;
        const double c = manhattan(at, candidates[i].cell) + candidates[i].cost.cost;
        if (c < pick_cost - 1e-12) {
          pick_cost = c;
          pick = static_cast<int>(i);
        }
      }
      used[pick] = 1;
      chosen.push_back(pick);
      at = candidates[pick].cell;
    }
  }

  std::vector<Action> plan;
  int at = s.agent;
  for (int idx : chosen) {
    const auto& target = candidates[idx];
    append_path(plan, at, target.cell);
    const int type = static_cast<int>(ml_value(s, target.cell));
    if (target.cost.detect_first) plan.push_back(Action::detect(type));
    plan.push_back(Action::recover(type));
    at = target.cell;
  }
  return plan;
}

std::size_t Gridworld::step_limit() const {
  // A cell can take one Detect per type before it is ruled out, plus a
  // couple of moves to reach it.
  const int cells = config_.n * config_.n;
  return static_cast<std::size_t>((type_count() + 2) * cells + 10 * config_.m);
}

std::vector<GridAction> Gridworld::actions(const State&) const {
  std::vector<Action> out;
  for (Dir d : {Dir::North, Dir::South, Dir::East, Dir::West}) {
    out.push_back(Action::move(d));
  }
  for (int t = 0; t < type_count(); ++t) out.push_back(Action::detect(t));
  for (int t = 0; t < type_count(); ++t) out.push_back(Action::recover(t));
  return out;
}

double Gridworld::expected_reward(const State& s, const Action& a) const {
  switch (a.kind) {
    case GridAction::Kind::Move: return config_.move_reward;
    case GridAction::Kind::Detect: return config_.detect_reward;
    case GridAction::Kind::Recover: {
      const double p = s.belief.prob(s.agent, a.arg);
      return config_.recover_success * p + config_.recover_fail * (1.0 - p);
    }
  }
  return 0.0;
}

std::vector<Outcome<Gridworld>> Gridworld::outcomes(const State& s,
                                                    const Action& a) const {
  if (a.kind == GridAction::Kind::Move) {
    return {{1.0, {GridObservation::Kind::None, false}}};
  }
  const auto kind = a.kind == GridAction::Kind::Detect
                        ? GridObservation::Kind::Presence
                        : GridObservation::Kind::RecoverResult;
  const double p = s.belief.prob(s.agent, a.arg);
  std::vector<Outcome<Gridworld>> out;
  if (p > 0.0) out.push_back({p, {kind, true}});
  if (p < 1.0) out.push_back({1.0 - p, {kind, false}});
  return out;
}

std::string Gridworld::state_key(const State& s) const {
  std::string key = std::to_string(s.agent) + "|" + std::to_string(s.recovered);
  char buf[32];
  for (double p : s.belief.flat()) {
    std::snprintf(buf, sizeof buf, "|%.12g", p);
    key += buf;
  }
  return key;
}

std::string Gridworld::describe(const Action& a) const {
  static constexpr const char* kDirs[] = {"N", "S", "E", "W"};
  switch (a.kind) {
    case GridAction::Kind::Move: return std::string("Move(") + kDirs[a.arg] + ")";
    case GridAction::Kind::Detect: return "Detect(" + config_.types.at(a.arg) + ")";
    case GridAction::Kind::Recover: return "Recover(" + config_.types.at(a.arg) + ")";
  }
  return "?";
}

std::string Gridworld::describe(const Observation& o) const {
  switch (o.kind) {
    case GridObservation::Kind::None: return "none";
    case GridObservation::Kind::Presence: return o.flag ? "present" : "absent";
    case GridObservation::Kind::RecoverResult: return o.flag ? "success" : "fail";
  }
  return "?";
}

std::string Gridworld::describe(const Fluent& f) const {
  if (f.is_null()) return "Null";
  const std::string args =
      "(" + layout_->value_name(f.factor, f.value) + "," +
      layout_->factor_name(f.factor) + ")";
  return (f.kind == FluentKind::Holds ? "At" : "NotAt") + args;
}

}  // namespace infoplan
