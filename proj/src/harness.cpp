#include "infoplan/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <stdexcept>

#include "infoplan/gridworld.hpp"
#include "infoplan/planning.hpp"
#include "infoplan/zones.hpp"

namespace infoplan {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

namespace {

const std::set<std::string> kTopKeys = {
    "domain", "n", "m", "lattice", "f", "weights", "threshold", "penalty",
    "null_reward", "history_penalty", "drift_epsilon", "noise_sigma", "trials",
    "seed", "mode", "beam_width", "out", "write_traces", "scenario", "train",
    "episodes", "seeds", "preference_changes"};

const std::set<std::string> kTrainKeys = {
    "learning_rate", "min_learning_rate", "l2_scale", "batch_size",
    "replay_capacity", "epsilon_start", "epsilon_end", "epsilon_decay_episodes",
    "hidden", "init_scale", "history_feature", "steps_per_timestep"};

const std::set<std::string> kChangeKeys = {"episode", "weights", "f", "epsilon_reset",
                                              "clear_replay"};

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ContractViolation(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ContractViolation(where + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// Resolve a weights spec against a factor's value names.
std::vector<double> resolve_weights(const json& spec,
                                    const std::vector<std::string>& names) {
  std::vector<double> w(names.size(), 1.0);
  if (spec.is_null()) return w;
  if (spec.is_array()) {
    if (spec.size() != names.size()) {
      throw ContractViolation("weights: expected " + std::to_string(names.size()) +
                              " entries");
    }
    for (std::size_t i = 0; i < names.size(); ++i) w[i] = spec.at(i).get<double>();
    return w;
  }
  if (!spec.is_object()) throw ContractViolation("weights: expected array or object");
  for (const auto& [key, value] : spec.items()) {
    auto it = std::find(names.begin(), names.end(), key);
    if (it == names.end()) throw ContractViolation("weights: unknown value '" + key + "'");
    w[static_cast<std::size_t>(it - names.begin())] = value.get<double>();
  }
  return w;
}

std::vector<std::string> value_names(const BeliefLayout& layout) {
  std::vector<std::string> out;
  for (std::size_t v = 0; v < layout.dim(0); ++v) out.push_back(layout.value_name(0, v));
  return out;
}

ScoreFunctionSpec make_spec(const ExperimentConfig& c, const BeliefLayout& layout) {
  ScoreFunctionSpec spec(Weights::shared(layout, resolve_weights(c.weights, value_names(layout))));
  spec.f_kind = c.f_kind;
  spec.threshold = c.threshold;
  spec.penalty = c.penalty;
  spec.null_reward = c.null_reward;
  spec.history_penalty = c.history_penalty;
  spec.validate();
  return spec;
}

PlannerConfig make_planner(const ExperimentConfig& c) {
  PlannerConfig p;
  p.dag.forward = HumanForwardModel(c.drift_epsilon);
  p.dag.beam_width = c.beam_width;
  return p;
}

ordered_json step_json(const TraceStep& s) {
  ordered_json j;
  j["t"] = s.t;
  j["action"] = s.action;
  j["observation"] = s.observation;
  j["info"] = s.info;
  j["marginal"] = s.marginal ? ordered_json(*s.marginal) : ordered_json(nullptr);
  j["clean_score"] = s.clean_score;
  j["noisy_score"] = s.noisy_score;
  j["env_reward"] = s.env_reward;
  j["replanned"] = s.replanned;
  return j;
}

void write_trace(const fs::path& path, const EpisodeTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& s : trace.steps) out << step_json(s).dump() << '\n';
  if (trace.error) out << ordered_json{{"error", *trace.error}}.dump() << '\n';
}

template <class D>
typename D::World make_world(const D& domain, const ExperimentConfig& c,
                             std::uint64_t seed) {
  return c.scenario ? domain.world_from_json(*c.scenario) : domain.sample_world(seed);
}

template <class D>
ExperimentResult run_trials(const D& domain, const ExperimentConfig& c) {
  const FactoredBelief prior = domain.human_prior();
  const ScoreFunctionSpec spec = make_spec(c, prior.layout());
  const PlannerConfig planner = make_planner(c);
  if (!c.out.empty()) fs::create_directories(c.out);

  ExperimentResult result;
  for (std::size_t t = 0; t < c.trials; ++t) {
    const std::uint64_t seed = splitmix64(c.seed + t);
    auto world = make_world(domain, c, seed);
    SimulatedHuman human(prior, HumanForwardModel(c.drift_epsilon), spec,
                         c.noise_sigma, splitmix64(seed ^ 0x5bd1e995ull));
    ExecutionHooks hooks;
    hooks.scorer = [&spec] { return true_scorer(spec); };
    const EpisodeTrace trace = execute_with_replanning(domain, world, human, planner, hooks);

    TrialSummary s;
    s.trial = t;
    s.seed = seed;
    s.human_score = trace.clean_return;
    s.noisy_score = trace.noisy_return;
    s.infos_per_timestep = trace.infos_per_timestep();
    s.env_reward = trace.env_return;
    s.plan_seconds = trace.plan_seconds;
    s.steps = trace.steps.size();
    s.infos = trace.infos;
    s.replans = trace.replans;
    s.failed = trace.error.has_value();
    if (trace.error) s.error = *trace.error;
    result.trials.push_back(s);

    if (!c.out.empty() && c.write_traces) {
      write_trace(fs::path(c.out) / ("trace_" + std::to_string(t) + ".jsonl"), trace);
    }
  }
  result.summary = aggregate(result.trials);

  if (!c.out.empty()) {
    std::ofstream agg(fs::path(c.out) / "aggregate.csv");
    agg << aggregate_csv_header() << '\n' << aggregate_csv_row(c, result.summary) << '\n';
    // Wall-clock numbers differ run to run, so they live apart from the
    // deterministic outputs.
    std::ofstream timing(fs::path(c.out) / "timing.csv");
    timing << "trial,plan_seconds\n";
    for (const auto& s : result.trials) timing << s.trial << ',' << fmt(s.plan_seconds) << '\n';
  }
  return result;
}

template <class D>
LearningExperimentResult run_learning(const D& domain, const ExperimentConfig& c,
                                      bool with_baseline) {
  const FactoredBelief prior = domain.human_prior();
  const ScoreFunctionSpec spec = make_spec(c, prior.layout());
  const PlannerConfig planner = make_planner(c);
  if (!c.out.empty()) fs::create_directories(c.out);

  LearningExperimentResult result;
  for (std::size_t k = 0; k < c.seeds; ++k) {
    const std::uint64_t seed = splitmix64(c.seed + k);
    auto world_seed = [seed](std::size_t ep) { return splitmix64(seed ^ ((ep + 1) * 0x9e3779b97f4a7c15ull)); };
    std::function<typename D::World(std::size_t)> worlds = [&](std::size_t ep) {
      return make_world(domain, c, world_seed(ep));
    };

    SimulatedHuman human(prior, HumanForwardModel(c.drift_epsilon), spec, c.noise_sigma,
                         splitmix64(seed ^ 0x5bd1e995ull));
    LearningConfig lc;
    lc.train = c.train;
    lc.episodes = c.episodes;
    lc.changes = c.preference_changes;
    lc.seed = seed;
    auto learned = train_loop(domain, human, planner, lc, worlds);
    result.per_seed.push_back(learned.curve);

    if (with_baseline) {
      SimulatedHuman oracle(prior, HumanForwardModel(c.drift_epsilon), spec,
                            c.noise_sigma, splitmix64(seed ^ 0x5bd1e995ull));
      std::vector<double> scores;
      for (std::size_t ep = 0; ep < c.episodes; ++ep) {
        for (const auto& change : c.preference_changes) {
          if (change.episode == ep) {
            oracle.set_spec(apply_preference_change(oracle.spec(), prior.layout(), change));
          }
        }
        auto world = worlds(ep);
        oracle.reset(prior);
        ExecutionHooks hooks;
        hooks.scorer = [&oracle] { return true_scorer(oracle.spec()); };
        scores.push_back(
            execute_with_replanning(domain, world, oracle, planner, hooks).clean_return);
      }
      result.baseline.push_back(std::move(scores));
    }

    if (!c.out.empty()) {
      std::ofstream out(fs::path(c.out) / ("curve_seed" + std::to_string(k) + ".csv"));
      out << seed_curve_csv_header() << '\n';
      for (const auto& r : learned.curve) {
        out << r.episode << ',' << fmt(r.true_score) << ',' << fmt(r.noisy_score) << ','
            << fmt(r.epsilon) << ',' << fmt(r.mean_loss) << '\n';
      }
    }
  }

  for (std::size_t ep = 0; ep < c.episodes; ++ep) {
    std::vector<double> truth, noisy;
    CurveRow row;
    row.episode = ep;
    for (const auto& curve : result.per_seed) {
      truth.push_back(curve[ep].true_score);
      noisy.push_back(curve[ep].noisy_score);
      row.epsilon += curve[ep].epsilon;
      row.mean_loss += curve[ep].mean_loss;
    }
    const double n = static_cast<double>(result.per_seed.size());
    row.true_score = mean_std(truth);
    row.noisy_score = mean_std(noisy);
    row.epsilon /= n;
    row.mean_loss /= n;
    result.curve.push_back(row);
  }

  if (!c.out.empty()) {
    std::ofstream out(fs::path(c.out) / "curve.csv");
    out << curve_csv_header() << '\n';
    for (const auto& r : result.curve) {
      out << r.episode << ',' << fmt(r.true_score.mean) << ',' << fmt(r.true_score.std) << ','
          << fmt(r.noisy_score.mean) << ',' << fmt(r.noisy_score.std) << ','
          << fmt(r.epsilon) << ',' << fmt(r.mean_loss) << '\n';
    }
  }
  return result;
}

template <class Fn>
auto with_domain(const ExperimentConfig& c, Fn&& fn) {
  if (c.domain == "grid") {
    GridworldConfig g;
    g.n = c.n;
    g.m = c.m;
    return fn(Gridworld(g));
  }
  ZoneConfig z;
  z.zones = c.n;
  z.objects = c.m;
  z.lattice = c.lattice;
  return fn(Zones(z));
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j, kTopKeys, "config");
  ExperimentConfig c;
  read(j, "domain", c.domain);
  read(j, "n", c.n);
  read(j, "m", c.m);
  read(j, "lattice", c.lattice);
  if (j.contains("f")) c.f_kind = parse_f_kind(j.at("f").get<std::string>());
  if (j.contains("weights")) c.weights = j.at("weights");
  read(j, "threshold", c.threshold);
  read(j, "penalty", c.penalty);
  read(j, "null_reward", c.null_reward);
  if (j.contains("history_penalty") && !j.at("history_penalty").is_null()) {
    c.history_penalty = j.at("history_penalty").get<double>();
  }
  read(j, "drift_epsilon", c.drift_epsilon);
  read(j, "noise_sigma", c.noise_sigma);
  read(j, "trials", c.trials);
  read(j, "seed", c.seed);
  read(j, "mode", c.mode);
  read(j, "beam_width", c.beam_width);
  read(j, "out", c.out);
  read(j, "write_traces", c.write_traces);
  if (j.contains("scenario") && !j.at("scenario").is_null()) c.scenario = j.at("scenario");
  read(j, "episodes", c.episodes);
  read(j, "seeds", c.seeds);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown(t, kTrainKeys, "train");
    read(t, "learning_rate", c.train.learning_rate);
    read(t, "min_learning_rate", c.train.min_learning_rate);
    read(t, "l2_scale", c.train.l2_scale);
    read(t, "batch_size", c.train.batch_size);
    read(t, "replay_capacity", c.train.replay_capacity);
    read(t, "epsilon_start", c.train.epsilon_start);
    read(t, "epsilon_end", c.train.epsilon_end);
    read(t, "epsilon_decay_episodes", c.train.epsilon_decay_episodes);
    read(t, "hidden", c.train.hidden);
    read(t, "init_scale", c.train.init_scale);
    read(t, "history_feature", c.train.history_feature);
    read(t, "steps_per_timestep", c.train.steps_per_timestep);
  }
  if (j.contains("preference_changes")) {
    for (const auto& pc : j.at("preference_changes")) {
      reject_unknown(pc, kChangeKeys, "preference_changes");
      PreferenceChange change;
      change.episode = pc.at("episode").get<std::size_t>();
      // Names resolve once the domain is known; keep raw arrays here.
      if (pc.contains("weights")) change.weights = pc.at("weights").get<std::vector<double>>();
      if (pc.contains("f")) change.f_kind = parse_f_kind(pc.at("f").get<std::string>());
      read(pc, "epsilon_reset", change.epsilon_reset);
      read(pc, "clear_replay", change.clear_replay);
      c.preference_changes.push_back(std::move(change));
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ContractViolation(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  j["domain"] = domain;
  j["n"] = n;
  j["m"] = m;
  j["lattice"] = lattice;
  j["f"] = std::string(to_string(f_kind));
  j["weights"] = weights;
  j["threshold"] = threshold;
  j["penalty"] = penalty;
  j["null_reward"] = null_reward;
  j["history_penalty"] = history_penalty ? ordered_json(*history_penalty) : ordered_json(nullptr);
  j["drift_epsilon"] = drift_epsilon;
  j["noise_sigma"] = noise_sigma;
  j["trials"] = trials;
  j["seed"] = seed;
  j["mode"] = mode;
  j["beam_width"] = beam_width;
  j["out"] = out;
  j["write_traces"] = write_traces;
  if (scenario) j["scenario"] = *scenario;
  j["train"] = ordered_json{{"learning_rate", train.learning_rate},
                            {"min_learning_rate", train.min_learning_rate},
                            {"l2_scale", train.l2_scale},
                            {"batch_size", train.batch_size},
                            {"replay_capacity", train.replay_capacity},
                            {"epsilon_start", train.epsilon_start},
                            {"epsilon_end", train.epsilon_end},
                            {"epsilon_decay_episodes", train.epsilon_decay_episodes},
                            {"hidden", train.hidden},
                            {"init_scale", train.init_scale},
                            {"history_feature", train.history_feature},
                            {"steps_per_timestep", train.steps_per_timestep}};
  j["episodes"] = episodes;
  j["seeds"] = seeds;
  auto changes = ordered_json::array();
  for (const auto& c : preference_changes) {
    ordered_json pc{{"episode", c.episode}};
    if (!c.weights.empty()) pc["weights"] = c.weights;
    if (c.f_kind) pc["f"] = std::string(to_string(*c.f_kind));
    pc["epsilon_reset"] = c.epsilon_reset;
    pc["clear_replay"] = c.clear_replay;
    changes.push_back(std::move(pc));
  }
  j["preference_changes"] = std::move(changes);
  return j;
}

void ExperimentConfig::validate() const {
  if (domain != "grid" && domain != "zones") {
    throw ContractViolation("config: domain must be 'grid' or 'zones'");
  }
  if (mode != "plan_known_rh" && mode != "learn") {
    throw ContractViolation("config: mode must be 'plan_known_rh' or 'learn'");
  }
  if (n < 1 || m < 1) throw ContractViolation("config: n and m must be positive");
  if (domain == "grid" && m > n * n) throw ContractViolation("config: m exceeds n*n");
  if (noise_sigma < 0.0) throw ContractViolation("config: negative noise_sigma");
  if (!(drift_epsilon >= 0.0 && drift_epsilon < 1.0)) {
    throw ContractViolation("config: drift_epsilon must be in [0, 1)");
  }
  if (mode == "learn") {
    train.validate();
    if (episodes == 0 || seeds == 0) {
      throw ContractViolation("config: learning needs episodes and seeds");
    }
  }
}

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

Aggregate aggregate(const std::vector<TrialSummary>& trials) {
  Aggregate a;
  a.trials = trials.size();
  std::vector<double> score, noisy, ipt, env, steps, replans;
  for (const auto& t : trials) {
    if (t.failed) {
      ++a.failed;
      continue;
    }
    ++a.completed;
    score.push_back(t.human_score);
    noisy.push_back(t.noisy_score);
    ipt.push_back(t.infos_per_timestep);
    env.push_back(t.env_reward);
    steps.push_back(static_cast<double>(t.steps));
    replans.push_back(static_cast<double>(t.replans));
  }
  a.human_score = mean_std(score);
  a.noisy_score = mean_std(noisy);
  a.infos_per_timestep = mean_std(ipt);
  a.env_reward = mean_std(env);
  a.steps = mean_std(steps);
  a.replans = mean_std(replans);
  return a;
}

std::string aggregate_csv_header() {
  return "domain,n,m,f,trials,completed,failed,partial,"
         "mean_score,std_score,mean_noisy_score,std_noisy_score,"
         "mean_infos_per_timestep,std_infos_per_timestep,"
         "mean_env_reward,std_env_reward,mean_steps,std_steps,"
         "mean_replans,std_replans";
}

std::string aggregate_csv_row(const ExperimentConfig& c, const Aggregate& a) {
  std::string row = c.domain + ',' + std::to_string(c.n) + ',' + std::to_string(c.m) +
                    ',' + std::string(to_string(c.f_kind)) + ',' +
                    std::to_string(a.trials) + ',' + std::to_string(a.completed) + ',' +
                    std::to_string(a.failed) + ',' + (a.failed ? "1" : "0");
  for (const MeanStd* ms : {&a.human_score, &a.noisy_score, &a.infos_per_timestep,
                            &a.env_reward, &a.steps, &a.replans}) {
    row += ',' + fmt(ms->mean) + ',' + fmt(ms->std);
  }
  return row;
}

std::string seed_curve_csv_header() {
  return "episode,cumulative_true_score,cumulative_noisy_score,epsilon,mean_loss";
}

std::string curve_csv_header() {
  return "episode,mean_true_score,std_true_score,mean_noisy_score,std_noisy_score,"
         "epsilon,mean_loss";
}

bool LearningExperimentResult::ok() const {
  for (const auto& curve : per_seed) {
    for (const auto& r : curve) {
      if (r.failed) return false;
    }
  }
  return true;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  return with_domain(config, [&](const auto& domain) { return run_trials(domain, config); });
}

LearningExperimentResult run_learning_experiment(const ExperimentConfig& config,
                                                 bool with_baseline) {
  config.validate();
  config.train.validate();
  return with_domain(config, [&](const auto& domain) {
    return run_learning(domain, config, with_baseline);
  });
}

double window_mean(const std::vector<EpisodeRecord>& episodes, std::size_t begin, std::size_t end) {
  std::vector<double> scores;
  for (const auto& e : episodes) scores.push_back(e.true_score);
  return window_mean(scores, begin, end);
}

double window_mean(const std::vector<double>& scores, std::size_t begin, std::size_t end) {
  end = std::min(end, scores.size());
  if (begin >= end) throw ContractViolation("empty episode window");
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += scores[i];
  return sum / static_cast<double>(end - begin);
}

}  // namespace infoplan
