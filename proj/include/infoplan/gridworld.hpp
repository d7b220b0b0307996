#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "infoplan/domain.hpp"

namespace infoplan {

struct GridworldConfig {
  int n = 4;
  int m = 1;
  std::vector<std::string> types = {"T1", "T2", "T3", "T4"};
  double move_reward = -1.0;
  double detect_reward = -5.0;
  double recover_success = -20.0;
  double recover_fail = -100.0;
  /// Target orderings above this count fall back to greedy selection.
  std::size_t exhaustive_limit = 1'000'000;

  void validate() const;
};

enum class Dir { North, South, East, West };

struct GridAction {
  enum class Kind { Move, Detect, Recover };
  Kind kind = Kind::Move;
  int arg = 0;  // Dir for Move, type index otherwise

  static GridAction move(Dir d) { return {Kind::Move, static_cast<int>(d)}; }
  static GridAction detect(int type) { return {Kind::Detect, type}; }
  static GridAction recover(int type) { return {Kind::Recover, type}; }
  bool operator==(const GridAction&) const = default;
};

/// Move yields no reading; Detect reports presence; Recover reports success.
struct GridObservation {
  enum class Kind { None, Presence, RecoverResult };
  Kind kind = Kind::None;
  bool flag = false;
  bool operator==(const GridObservation&) const = default;
};

/// Agent belief state: own cell (observed), recovered count (observed) and
/// the factored belief over each cell's contents.
struct GridState {
  int agent = 0;
  int recovered = 0;
  FactoredBelief belief;
};

/// Ground truth for one episode.
class GridWorldSim {
 public:
  GridWorldSim(const GridworldConfig& config, std::vector<int> contents,
               int agent);

  StepResult<GridObservation> step(const GridAction& action);
  bool terminal() const { return recovered_ == config_->m; }

  int agent() const { return agent_; }
  int recovered() const { return recovered_; }
  /// Type index per cell, -1 for an empty cell.
  const std::vector<int>& contents() const { return contents_; }

 private:
  const GridworldConfig* config_;
  std::vector<int> contents_;
  int agent_;
  int recovered_ = 0;
};

class Gridworld {
 public:
  using State = GridState;
  using Action = GridAction;
  using Observation = GridObservation;
  using World = GridWorldSim;

  explicit Gridworld(GridworldConfig config);

  const GridworldConfig& config() const { return config_; }
  const LayoutPtr& layout() const { return layout_; }
  int cell_count() const { return config_.n * config_.n; }
  int type_count() const { return static_cast<int>(config_.types.size()); }
  std::size_t nothing_index() const { return config_.types.size(); }

  /// Objects on unique random cells with random types; agent at cell 0.
  World sample_world(std::uint64_t seed) const;
  /// {"objects": [{"id": cell, "type": "T1"}], "agent": cell | [row, col]}
  World world_from_json(const nlohmann::json& scenario) const;

  /// Uniform over types and "nothing"; "nothing" is excluded when every
  /// cell must hold an object.
  FactoredBelief prior() const;
  State initial_state(const World& world) const;
  State initial_state(int agent_cell) const;

  bool is_terminal(const State& s) const { return s.recovered >= config_.m; }
  State update(const State& s, const Action& a, const Observation& o) const;

  /// Maximum-likelihood contents of a cell (lowest index on ties).
  std::size_t ml_value(const State& s, int cell) const;
  /// Observation the maximum-likelihood world would produce.
  Observation predict(const State& s, const Action& a) const;
  /// State reached under the maximum-likelihood outcome of `a`.
  State predicted_step(const State& s, const Action& a) const;

  /// Branch-free plan reaching termination in the maximum-likelihood world,
  /// maximizing the sum of expected rewards along it.
  std::vector<Action> solve_acting(const State& s) const;

  FactoredBelief human_view(const State& s) const { return s.belief; }
  FactoredBelief human_prior() const { return prior(); }
  const std::vector<Fluent>& info_space() const { return info_space_; }
  std::size_t step_limit() const;

  // Enumerable belief-MDP access for the exact solver.
  std::vector<Action> actions(const State& s) const;
  double expected_reward(const State& s, const Action& a) const;
  std::vector<Outcome<Gridworld>> outcomes(const State& s, const Action& a) const;
  std::string state_key(const State& s) const;

  std::string describe(const Action& a) const;
  std::string describe(const Observation& o) const;
  std::string describe(const Fluent& f) const;

  int neighbor(int cell, Dir d) const;
  int manhattan(int a, int b) const;

 private:
  // Per-target cost (negated expected reward) of recovering the ML object
  // at `cell`, and whether a Detect should precede the Recover.
  struct TargetCost {
    double cost = 0.0;
    bool detect_first = false;
  };
  TargetCost target_cost(const State& s, int cell) const;
  void append_path(std::vector<Action>& plan, int from, int to) const;

  GridworldConfig config_;
  LayoutPtr layout_;
  std::vector<Fluent> info_space_;
};

}  // namespace infoplan
