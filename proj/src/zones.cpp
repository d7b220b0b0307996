#include "infoplan/zones.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

namespace infoplan {

namespace {

constexpr double kGeomEps = 1e-12;
// Partially covered cells keep at least this likelihood after a miss.
constexpr double kMinMissLikelihood = 1.0 / 32.0;
// Distance band for looking at a cell: near enough that its far corner is in
// range, far enough that the whole cell fits inside the cone's angle.
constexpr double kMinViewDistance = 0.15;
constexpr double kMaxViewFraction = 0.8;

double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool in_bounds(Vec2 p) {
  return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0;
}

Vec2 unit_or(Vec2 from, Vec2 to, Vec2 fallback) {
  const double d = dist(from, to);
  if (d < kGeomEps) return fallback;
  return {(to.x - from.x) / d, (to.y - from.y) / d};
}

Pose facing(Vec2 at, Vec2 target) {
  const double dx = target.x - at.x, dy = target.y - at.y;
  const double h = (std::abs(dx) < kGeomEps && std::abs(dy) < kGeomEps)
                       ? 0.0
                       : std::atan2(dy, dx);
  return {at.x, at.y, h};
}

}  // namespace

bool Cone::contains(const Pose& from, Vec2 p) const {
  const double dx = p.x - from.x, dy = p.y - from.y;
  const double r = std::hypot(dx, dy);
  if (r > range + kGeomEps) return false;
  if (r < kGeomEps) return true;
  return std::abs(wrap_angle(std::atan2(dy, dx) - from.heading)) <= half_angle + kGeomEps;
}

void ZoneConfig::validate() const {
  if (lattice < 1) throw ContractViolation("zones: lattice must be >= 1");
  if (zones < 1 || zones > lattice) {
    throw ContractViolation("zones: need 1 <= zones <= lattice");
  }
  if (objects < 1) throw ContractViolation("zones: need at least one object");
  if (!(visibility.range > 0.0) || !(reach.range > 0.0) ||
      !(visibility.half_angle > 0.0) || !(reach.half_angle > 0.0) ||
      visibility.half_angle > std::numbers::pi / 2 ||
      reach.half_angle > std::numbers::pi / 2) {
    throw ContractViolation("zones: cones need positive range and half-angle <= pi/2");
  }
  if (min_separation < 0.0) throw ContractViolation("zones: negative separation");
  // Rough packing check so rejection sampling can finish.
  if (objects * min_separation * min_separation > 0.5) {
    throw ContractViolation("zones: too many objects for the separation");
  }
}

bool ZoneObservation::operator==(const ZoneObservation& o) const {
  if (kind != o.kind || sightings.size() != o.sightings.size()) return false;
  for (std::size_t i = 0; i < sightings.size(); ++i) {
    if (sightings[i].object != o.sightings[i].object ||
        sightings[i].cell != o.sightings[i].cell) {
      return false;
    }
  }
  return true;
}

ZoneWorldSim::ZoneWorldSim(const ZoneConfig& config, std::vector<Vec2> objects,
                           Pose agent)
    : config_(&config),
      objects_(std::move(objects)),
      recovered_(objects_.size(), false),
      pose_(agent) {
  if (static_cast<int>(objects_.size()) != config.objects) {
    throw ContractViolation("ZoneWorldSim: object count differs from config");
  }
  for (const auto& p : objects_) {
    if (!in_bounds(p)) throw ContractViolation("ZoneWorldSim: object out of bounds");
  }
  if (!in_bounds({agent.x, agent.y})) {
    throw ContractViolation("ZoneWorldSim: agent out of bounds");
  }
}

StepResult<ZoneObservation> ZoneWorldSim::step(const ZoneAction& action) {
  const int g = config_->lattice;
  auto cell = [g](Vec2 p) {
    const int c = std::min(g - 1, static_cast<int>(p.x * g));
    const int r = std::min(g - 1, static_cast<int>(p.y * g));
    return r * g + c;
  };
  switch (action.kind) {
    case ZoneAction::Kind::Move:
      if (in_bounds({action.target.x, action.target.y})) pose_ = action.target;
      return {{}, config_->move_reward};
    case ZoneAction::Kind::Detect: {
      ZoneObservation obs{ZoneObservation::Kind::Seen, {}};
      for (std::size_t k = 0; k < objects_.size(); ++k) {
        if (!recovered_[k] && config_->visibility.contains(pose_, objects_[k])) {
          obs.sightings.push_back({static_cast<int>(k), objects_[k], cell(objects_[k])});
        }
      }
      return {obs, config_->detect_reward};
    }
    case ZoneAction::Kind::Recover: {
      ZoneObservation obs{ZoneObservation::Kind::Recovered, {}};
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < objects_.size(); ++k) {
        if (recovered_[k] || !config_->reach.contains(pose_, objects_[k])) continue;
        const double d = dist({pose_.x, pose_.y}, objects_[k]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(k);
        }
      }
      if (best < 0) return {obs, config_->recover_fail};
      recovered_[static_cast<std::size_t>(best)] = true;
      ++recovered_count_;
      const Vec2 p = objects_[static_cast<std::size_t>(best)];
      obs.sightings.push_back({best, p, cell(p)});
      return {obs, config_->recover_success};
    }
  }
  throw ContractViolation("ZoneWorldSim: unknown action");
}

std::vector<double> abstraction_map(std::span<const double> cell_probs,
                                    std::span<const int> cell_zone, int zone_count) {
  if (cell_probs.size() != cell_zone.size() || zone_count < 1) {
    throw ContractViolation("abstraction_map: mismatched inputs");
  }
  std::vector<double> out(static_cast<std::size_t>(zone_count), 0.0);
  for (std::size_t i = 0; i < cell_probs.size(); ++i) {
    const int z = cell_zone[i];
    if (z < 0 || z >= zone_count) {
      throw ContractViolation("abstraction_map: cell zone out of range");
    }
    out[static_cast<std::size_t>(z)] += cell_probs[i];
  }
  return out;
}

Zones::Zones(ZoneConfig config) : config_(std::move(config)) {
  config_.validate();
  const int g = config_.lattice;
  std::vector<std::string> cells, objects, zone_names;
  for (int i = 0; i < g * g; ++i) cells.push_back("c" + std::to_string(i));
  for (int k = 0; k < config_.objects; ++k) objects.push_back("o" + std::to_string(k));
  for (int z = 0; z < config_.zones; ++z) zone_names.push_back("z" + std::to_string(z));
  cell_layout_ = make_uniform_layout(objects, cells);
  human_layout_ = make_uniform_layout(objects, zone_names);

  cell_zone_.resize(static_cast<std::size_t>(g * g));
  for (int i = 0; i < g * g; ++i) {
    cell_zone_[static_cast<std::size_t>(i)] = (i % g) * config_.zones / g;
  }

  info_space_.push_back(Fluent::null());
  for (int k = 0; k < config_.objects; ++k) {
    for (int z = 0; z < config_.zones; ++z) {
      info_space_.push_back(Fluent::holds(k, z));
      info_space_.push_back(Fluent::not_holds(k, z));
    }
  }
}

int Zones::cell_of(Vec2 p) const {
  const int g = config_.lattice;
  const int c = std::clamp(static_cast<int>(p.x * g), 0, g - 1);
  const int r = std::clamp(static_cast<int>(p.y * g), 0, g - 1);
  return r * g + c;
}

Vec2 Zones::cell_center(int cell) const {
  const int g = config_.lattice;
  return {((cell % g) + 0.5) / g, ((cell / g) + 0.5) / g};
}

int Zones::zone_of(Vec2 p) const { return zone_of_cell(cell_of(p)); }

Vec2 Zones::zone_center(int zone) const {
  // Mean of the zone's cell-column centres.
  const int g = config_.lattice;
  double lo = 1.0, hi = 0.0;
  for (int c = 0; c < g; ++c) {
    if (cell_zone_[static_cast<std::size_t>(c)] == zone) {
      lo = std::min(lo, static_cast<double>(c) / g);
      hi = std::max(hi, static_cast<double>(c + 1) / g);
    }
  }
  return {(lo + hi) / 2.0, 0.5};
}

ZoneWorldSim Zones::sample_world(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> objects;
  while (static_cast<int>(objects.size()) < config_.objects) {
    const Vec2 p{u(rng), u(rng)};
    bool ok = true;
    for (const auto& q : objects) ok = ok && dist(p, q) >= config_.min_separation;
    if (ok) objects.push_back(p);
  }
  return ZoneWorldSim(config_, std::move(objects), Pose{0.5, 0.5, 0.0});
}

ZoneWorldSim Zones::world_from_json(const nlohmann::json& scenario) const {
  std::vector<std::optional<Vec2>> slots(static_cast<std::size_t>(config_.objects));
  for (const auto& obj : scenario.at("objects")) {
    const int id = obj.at("id").get<int>();
    const auto& pos = obj.at("pos");
    if (id < 0 || id >= config_.objects || slots[static_cast<std::size_t>(id)]) {
      throw ContractViolation("scenario: invalid object entry");
    }
    slots[static_cast<std::size_t>(id)] = Vec2{pos.at(0).get<double>(), pos.at(1).get<double>()};
  }
  std::vector<Vec2> objects;
  for (const auto& s : slots) {
    if (!s) throw ContractViolation("scenario: missing object position");
    objects.push_back(*s);
  }
  Pose agent{0.5, 0.5, 0.0};
  if (scenario.contains("agent")) {
    const auto& a = scenario.at("agent");
    agent = {a.at(0).get<double>(), a.at(1).get<double>(),
             a.size() > 2 ? a.at(2).get<double>() : 0.0};
  }
  return ZoneWorldSim(config_, std::move(objects), agent);
}

ZoneState Zones::initial_state(const World& world) const {
  return initial_state(world.pose());
}

ZoneState Zones::initial_state(Pose agent) const {
  const auto n = static_cast<std::size_t>(config_.objects);
  return ZoneState{agent, std::vector<bool>(n, false),
                   std::vector<std::optional<Vec2>>(n), 0,
                   FactoredBelief::uniform(cell_layout_)};
}

std::vector<double> Zones::coverage(const Pose& from, const Cone& cone) const {
  const int g = config_.lattice;
  const double h = 1.0 / g;
  std::vector<double> out(static_cast<std::size_t>(g * g), 0.0);
  for (int cell = 0; cell < g * g; ++cell) {
    const double x0 = (cell % g) * h, y0 = (cell / g) * h;
    // Skip cells that cannot touch the cone.
    const Vec2 c{x0 + h / 2, y0 + h / 2};
    if (dist({from.x, from.y}, c) > cone.range + h) continue;
    const bool all_corners = cone.contains(from, {x0, y0}) &&
                             cone.contains(from, {x0 + h, y0}) &&
                             cone.contains(from, {x0, y0 + h}) &&
                             cone.contains(from, {x0 + h, y0 + h});
    if (all_corners) {
      out[static_cast<std::size_t>(cell)] = 1.0;
      continue;
    }
    int inside = 0;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        inside += cone.contains(from, {x0 + (i + 0.5) * h / 4, y0 + (j + 0.5) * h / 4});
      }
    }
    out[static_cast<std::size_t>(cell)] = inside / 16.0;
  }
  return out;
}

void Zones::apply_miss(State& s, const Pose& from, const Cone& cone,
                       const std::vector<int>& seen) const {
  const auto cover = coverage(from, cone);
  std::vector<double> flat(s.belief.flat().begin(), s.belief.flat().end());
  const auto cells = static_cast<std::size_t>(cell_count());
  for (int k = 0; k < config_.objects; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    if (s.recovered[ku] || s.known[ku]) continue;
    if (std::find(seen.begin(), seen.end(), k) != seen.end()) continue;
    for (std::size_t c = 0; c < cells; ++c) {
      const double f = cover[c];
      if (f <= 0.0) continue;
      const double like = f >= 1.0 ? 0.0 : std::max(kMinMissLikelihood, 1.0 - f);
      flat[ku * cells + c] *= like;
    }
  }
  s.belief = FactoredBelief(cell_layout_, std::move(flat));
}

ZoneState Zones::update(const State& s, const Action& a, const Observation& o) const {
  State next = s;
  const auto cells = static_cast<std::size_t>(cell_count());
  auto pin = [&](State& st, const Sighting& seen) {
    const auto k = static_cast<std::size_t>(seen.object);
    std::vector<double> flat(st.belief.flat().begin(), st.belief.flat().end());
    if (flat[k * cells + static_cast<std::size_t>(seen.cell)] <= 0.0) {
      throw ContractViolation("zones update: sighting in a ruled-out cell");
    }
    std::fill(flat.begin() + static_cast<long>(k * cells),
              flat.begin() + static_cast<long>((k + 1) * cells), 0.0);
    flat[k * cells + static_cast<std::size_t>(seen.cell)] = 1.0;
    st.belief = FactoredBelief(cell_layout_, std::move(flat));
    st.known[k] = seen.position;
  };

  switch (a.kind) {
    case ZoneAction::Kind::Move:
      if (in_bounds({a.target.x, a.target.y})) next.pose = a.target;
      return next;
    case ZoneAction::Kind::Detect: {
      std::vector<int> seen;
      for (const auto& sg : o.sightings) {
        if (sg.object < 0 || sg.object >= config_.objects ||
            s.recovered[static_cast<std::size_t>(sg.object)]) {
          throw ContractViolation("zones update: sighting of an unknown object");
        }
        seen.push_back(sg.object);
      }
      apply_miss(next, next.pose, config_.visibility, seen);
      for (const auto& sg : o.sightings) pin(next, sg);
      return next;
    }
    case ZoneAction::Kind::Recover: {
      if (o.sightings.empty()) {
        apply_miss(next, next.pose, config_.reach, {});
        return next;
      }
      const auto& sg = o.sightings.front();
      const auto k = static_cast<std::size_t>(sg.object);
      if (sg.object < 0 || sg.object >= config_.objects || s.recovered[k]) {
        throw ContractViolation("zones update: recovered an unknown object");
      }
      pin(next, sg);
      next.recovered[k] = true;
      ++next.recovered_count;
      return next;
    }
  }
  throw ContractViolation("zones update: unknown action");
}

Vec2 Zones::ml_position(const State& s, int object) const {
  const auto k = static_cast<std::size_t>(object);
  if (s.known[k]) return *s.known[k];
  return cell_center(static_cast<int>(argmax_lowest(s.belief.factor(k))));
}

ZoneObservation Zones::predict(const State& s, const Action& a) const {
  switch (a.kind) {
    case ZoneAction::Kind::Move:
      return {};
    case ZoneAction::Kind::Detect: {
      ZoneObservation obs{ZoneObservation::Kind::Seen, {}};
      for (int k = 0; k < config_.objects; ++k) {
        if (s.recovered[static_cast<std::size_t>(k)]) continue;
        const Vec2 p = ml_position(s, k);
        if (config_.visibility.contains(s.pose, p)) obs.sightings.push_back({k, p, cell_of(p)});
      }
      return obs;
    }
    case ZoneAction::Kind::Recover: {
      ZoneObservation obs{ZoneObservation::Kind::Recovered, {}};
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < config_.objects; ++k) {
        if (s.recovered[static_cast<std::size_t>(k)]) continue;
        const Vec2 p = ml_position(s, k);
        if (!config_.reach.contains(s.pose, p)) continue;
        const double d = dist({s.pose.x, s.pose.y}, p);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (best >= 0) {
        const Vec2 p = ml_position(s, best);
        obs.sightings.push_back({best, p, cell_of(p)});
      }
      return obs;
    }
  }
  throw ContractViolation("zones predict: unknown action");
}

Pose Zones::viewing_pose(Vec2 target, Vec2 preferred_from) const {
  const Vec2 mid{0.5, 0.5};
  const double hi = kMaxViewFraction * config_.visibility.range;
  const double lo = std::min(kMinViewDistance, hi);
  Vec2 u = unit_or(target, preferred_from, unit_or(target, mid, {1.0, 0.0}));
  const double d = std::clamp(dist(target, preferred_from), lo, hi);
  Vec2 at{target.x + d * u.x, target.y + d * u.y};
  if (!in_bounds(at)) {
    u = unit_or(target, mid, {1.0, 0.0});
    at = {target.x + lo * u.x, target.y + lo * u.y};
    at = {std::clamp(at.x, 0.0, 1.0), std::clamp(at.y, 0.0, 1.0)};
  }
  return facing(at, target);
}

Pose Zones::approach_pose(Vec2 target) const {
  const Vec2 u = unit_or(target, {0.5, 0.5}, {-1.0, 0.0});
  const double d = 0.5 * config_.reach.range;
  Vec2 at{target.x + d * u.x, target.y + d * u.y};
  at = {std::clamp(at.x, 0.0, 1.0), std::clamp(at.y, 0.0, 1.0)};
  return facing(at, target);
}

std::vector<ZoneAction> Zones::solve_acting(const State& start) const {
  std::vector<Action> plan;
  State s = start;
  auto push = [&](const Action& a) {
    s = update(s, a, predict(s, a));
    plan.push_back(a);
  };
  const std::size_t cap = step_limit();
  while (!is_terminal(s)) {
    if (plan.size() > cap) throw PlanningFailure("zones: acting plan did not terminate");
    // Nearest remaining object by distance to the pose we would act from.
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    Pose best_pose;
    for (int k = 0; k < config_.objects; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      if (s.recovered[ku]) continue;
      const Vec2 p = ml_position(s, k);
      const Pose target = s.known[ku] ? approach_pose(p)
                                      : viewing_pose(p, zone_center(zone_of(p)));
      const double d = dist({s.pose.x, s.pose.y}, {target.x, target.y});
      if (d < best_d - kGeomEps) {
        best_d = d;
        best = k;
        best_pose = target;
      }
    }
    const auto bu = static_cast<std::size_t>(best);
    if (s.known[bu]) {
      if (!config_.reach.contains(s.pose, *s.known[bu])) push(ZoneAction::move(best_pose));
      push(ZoneAction::recover());
    } else {
      if (!(s.pose == best_pose)) push(ZoneAction::move(best_pose));
      push(ZoneAction::detect());
    }
  }
  return plan;
}

FactoredBelief Zones::human_view(const State& s) const {
  std::vector<double> flat;
  flat.reserve(human_layout_->total_size());
  for (int k = 0; k < config_.objects; ++k) {
    const auto z = abstraction_map(s.belief.factor(static_cast<std::size_t>(k)),
                                   cell_zone_, config_.zones);
    flat.insert(flat.end(), z.begin(), z.end());
  }
  return FactoredBelief(human_layout_, std::move(flat));
}

FactoredBelief Zones::human_prior() const {
  return human_view(initial_state(Pose{0.5, 0.5, 0.0}));
}

std::size_t Zones::step_limit() const {
  // Every look rules out at least one whole cell per unlocated object.
  return static_cast<std::size_t>(2 * cell_count() + 4 * config_.objects);
}

std::string Zones::describe(const Action& a) const {
  char buf[96];
  switch (a.kind) {
    case ZoneAction::Kind::Move:
      std::snprintf(buf, sizeof buf, "Move(%.3f,%.3f,%.3f)", a.target.x, a.target.y,
                    a.target.heading);
      return buf;
    case ZoneAction::Kind::Detect:
      return "Detect";
    case ZoneAction::Kind::Recover:
      return "Recover";
  }
  return "?";
}

std::string Zones::describe(const Observation& o) const {
  if (o.kind == ZoneObservation::Kind::None) return "none";
  if (o.kind == ZoneObservation::Kind::Recovered && o.sightings.empty()) return "missed";
  std::string out = o.kind == ZoneObservation::Kind::Seen ? "seen[" : "removed[";
  char buf[64];
  for (std::size_t i = 0; i < o.sightings.size(); ++i) {
    const auto& sg = o.sightings[i];
    std::snprintf(buf, sizeof buf, "%so%d@%.3f,%.3f", i ? ";" : "", sg.object,
                  sg.position.x, sg.position.y);
    out += buf;
  }
  return out + "]";
}

std::string Zones::describe(const Fluent& f) const {
  if (f.is_null()) return "Null";
  const std::string args =
      "(o" + std::to_string(f.factor) + ",z" + std::to_string(f.value) + ")";
  return (f.kind == FluentKind::Holds ? "In" : "NotIn") + args;
}

}  // namespace infoplan
