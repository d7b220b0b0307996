#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "infoplan/domain.hpp"

namespace infoplan {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, 0 faces +x
  bool operator==(const Pose&) const = default;
};

/// Closed circular sector in front of a pose.
struct Cone {
  double half_angle = 0.0;
  double range = 0.0;

  bool contains(const Pose& from, Vec2 p) const;
};

/// Positions live in the unit square. The agent tracks each object on a
/// lattice of lattice x lattice cells; zones are vertical strips made of
/// whole cell columns, so every position falls in exactly one zone.
struct ZoneConfig {
  int zones = 5;
  int objects = 5;
  int lattice = 20;
  Cone visibility{0.785398163397448, 0.5};
  Cone reach{0.523598775694449, 0.15};
  double min_separation = 0.05;
  double move_reward = -1.0;
  double detect_reward = -5.0;
  double recover_success = -20.0;
  double recover_fail = -100.0;

  void validate() const;
};

struct ZoneAction {
  enum class Kind { Move, Detect, Recover };
  Kind kind = Kind::Move;
  Pose target;  // Move only

  static ZoneAction move(Pose p) { return {Kind::Move, p}; }
  static ZoneAction detect() { return {Kind::Detect, {}}; }
  static ZoneAction recover() { return {Kind::Recover, {}}; }
  bool operator==(const ZoneAction&) const = default;
};

struct Sighting {
  int object = 0;
  Vec2 position;
  int cell = 0;
};

/// Detect returns every visible object; Recover returns the removed one (or
/// nothing). Observations compare by object ids and lattice cells, so a
/// prediction made from cell centers matches the exact reading.
struct ZoneObservation {
  enum class Kind { None, Seen, Recovered };
  Kind kind = Kind::None;
  std::vector<Sighting> sightings;  // sorted by object id

  bool operator==(const ZoneObservation& o) const;
};

struct ZoneState {
  Pose pose;
  std::vector<bool> recovered;
  std::vector<std::optional<Vec2>> known;
  int recovered_count = 0;
  FactoredBelief belief;  // per object, over lattice cells
};

class ZoneWorldSim {
 public:
  ZoneWorldSim(const ZoneConfig& config, std::vector<Vec2> objects, Pose agent);

  StepResult<ZoneObservation> step(const ZoneAction& action);
  bool terminal() const { return recovered_count_ == config_->objects; }

  const Pose& pose() const { return pose_; }
  const std::vector<Vec2>& objects() const { return objects_; }
  const std::vector<bool>& recovered() const { return recovered_; }

 private:
  const ZoneConfig* config_;
  std::vector<Vec2> objects_;
  std::vector<bool> recovered_;
  int recovered_count_ = 0;
  Pose pose_;
};

/// Sum per-cell probabilities into zone totals.
std::vector<double> abstraction_map(std::span<const double> cell_probs,
                                    std::span<const int> cell_zone, int zone_count);

class Zones {
 public:
  using State = ZoneState;
  using Action = ZoneAction;
  using Observation = ZoneObservation;
  using World = ZoneWorldSim;

  explicit Zones(ZoneConfig config);

  const ZoneConfig& config() const { return config_; }
  int cell_count() const { return config_.lattice * config_.lattice; }
  int cell_of(Vec2 p) const;
  Vec2 cell_center(int cell) const;
  int zone_of(Vec2 p) const;
  int zone_of_cell(int cell) const { return cell_zone_[static_cast<std::size_t>(cell)]; }
  Vec2 zone_center(int zone) const;

  /// Objects uniform in the square, pairwise apart by min_separation; the
  /// agent starts at the centre facing +x.
  World sample_world(std::uint64_t seed) const;
  /// {"objects": [{"id": k, "pos": [x, y]}], "agent": [x, y, heading]}
  World world_from_json(const nlohmann::json& scenario) const;

  State initial_state(const World& world) const;
  State initial_state(Pose agent) const;

  bool is_terminal(const State& s) const {
    return s.recovered_count >= config_.objects;
  }
  State update(const State& s, const Action& a, const Observation& o) const;

  /// Each unrecovered object at its known position, or else at the centre
  /// of its most likely cell (lowest index on ties).
  Vec2 ml_position(const State& s, int object) const;
  Observation predict(const State& s, const Action& a) const;

  /// Greedy nearest-target plan under the maximum-likelihood world: look at
  /// unlocated objects, approach located ones and recover them.
  std::vector<Action> solve_acting(const State& s) const;

  Pose viewing_pose(Vec2 target, Vec2 preferred_from) const;
  Pose approach_pose(Vec2 target) const;

  FactoredBelief human_view(const State& s) const;
  FactoredBelief human_prior() const;
  const LayoutPtr& human_layout() const { return human_layout_; }
  const std::vector<Fluent>& info_space() const { return info_space_; }
  std::size_t step_limit() const;

  std::string describe(const Action& a) const;
  std::string describe(const Observation& o) const;
  std::string describe(const Fluent& f) const;

 private:
  // Fraction of each cell inside the cone: 1 when all corners are inside,
  // else the share of a 4x4 grid of sample points.
  std::vector<double> coverage(const Pose& from, const Cone& cone) const;
  void apply_miss(State& s, const Pose& from, const Cone& cone,
                  const std::vector<int>& seen) const;

  ZoneConfig config_;
  LayoutPtr cell_layout_;
  LayoutPtr human_layout_;
  std::vector<int> cell_zone_;
  std::vector<Fluent> info_space_;
};

}  // namespace infoplan
