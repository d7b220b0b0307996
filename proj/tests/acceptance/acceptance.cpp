// One PASS/FAIL line per primary criterion. Usage:
//   acceptance [criteria...] [--expect-fail k]...
// With no criteria listed, all run. Exit status is nonzero only for a
// failure not listed with --expect-fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "../support/oracles.hpp"
#include "infoplan/exact.hpp"
#include "infoplan/gridworld.hpp"
#include "infoplan/harness.hpp"
#include "infoplan/planning.hpp"
#include "infoplan/zones.hpp"

using namespace infoplan;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double shannon(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

Verdict entropy_suite() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  double worst_shannon = 0.0, worst_linear = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = oracle::random_simplex(rng, 2 + trial % 7, 0.2);
    const std::vector<double> ones(p.size(), 1.0);
    worst_shannon = std::max(worst_shannon, std::abs(weighted_entropy(p, ones) - shannon(p)));
    std::vector<double> w1(p.size()), w2(p.size()), mix(p.size());
    const double a = u(rng), b = u(rng);
    for (std::size_t i = 0; i < p.size(); ++i) {
      w1[i] = u(rng);
      w2[i] = u(rng);
      mix[i] = a * w1[i] + b * w2[i];
    }
    worst_linear = std::max(worst_linear, std::abs(weighted_entropy(p, mix) -
                                                   a * weighted_entropy(p, w1) -
                                                   b * weighted_entropy(p, w2)));
  }
  bool endpoints = weighted_entropy(std::vector<double>{0, 0.5, 0.5}, std::vector<double>{1, 0, 0}) == 0.0;
  for (const auto& w : std::vector<std::vector<double>>{{1, 1, 1}, {1, 0, 0}, {0, 1, 1}, {3, 1, 2}}) {
    endpoints = endpoints && weighted_entropy(std::vector<double>{1, 0, 0}, w) == 0.0;
  }
  const double half = weighted_entropy(std::vector<double>{0, 0.5, 0.5}, std::vector<double>{0, 1, 1});
  endpoints = endpoints && std::abs(half - std::log(2.0)) < 1e-15;
  return {worst_shannon < 1e-12 && worst_linear < 1e-9 && endpoints,
          fmt("shannon gap %.2e, linearity gap %.2e, endpoints %s", worst_shannon, worst_linear,
              endpoints ? "exact" : "wrong")};
}

Verdict jeffrey_suite() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> md(0.0, 1.0);
  double worst_target = 0.0, worst_ratio = 0.0, worst_other = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<FactorSpec> specs;
    const int nf = 1 + trial % 3;
    for (int f = 0; f < nf; ++f) {
      FactorSpec fs{"f" + std::to_string(f), {}};
      for (int v = 0, k = 2 + (trial + f) % 4; v < k; ++v) fs.values.push_back("v" + std::to_string(v));
      specs.push_back(fs);
    }
    auto layout = make_layout(specs);
    const auto b = oracle::random_belief(rng, layout, 0.0);
    const std::size_t factor = rng() % layout->factor_count();
    const std::size_t value = rng() % layout->dim(factor);
    const Fluent fluent = rng() % 2 ? Fluent::holds(factor, value) : Fluent::not_holds(factor, value);
    const double m = trial % 10 == 0 ? static_cast<double>(trial % 20 == 0) : md(rng);
    const HumanForwardModel forward(trial % 2 ? 1e-3 : 0.0);
    const auto drifted = human_forward_step(b, forward);
    const auto next = jeffrey_update(b, Information{fluent, m}, forward);
    ++checked;

    worst_target = std::max(worst_target, std::abs(marginal(next, fluent) - m));
    // Within the event and within its complement, ratios to the drifted
    // belief are constant.
    const auto before = drifted.factor(factor);
    const auto after = next.factor(factor);
    const double in_event = m, out_event = 1.0 - m;
    const double mass_in = marginal(drifted, fluent);
    for (std::size_t v = 0; v < before.size(); ++v) {
      const bool in = fluent.kind == FluentKind::Holds ? v == value : v != value;
      const double scale = in ? in_event / mass_in : out_event / (1.0 - mass_in);
      worst_ratio = std::max(worst_ratio, std::abs(after[v] - scale * before[v]));
    }
    for (std::size_t f = 0; f < layout->factor_count(); ++f) {
      if (f == factor) continue;
      const auto x = drifted.factor(f), y = next.factor(f);
      for (std::size_t v = 0; v < x.size(); ++v) worst_other = std::max(worst_other, std::abs(x[v] - y[v]));
    }
  }
  const bool pass = checked == 1000 && worst_target < 1e-9 && worst_ratio < 1e-9 && worst_other < 1e-9;
  return {pass, fmt("%d triples: target gap %.2e, ratio gap %.2e, other factors %.2e", checked,
                    worst_target, worst_ratio, worst_other)};
}

Verdict exact_vs_enumeration() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.0, 3.0), thr(0.05, 0.6);
  int instances = 0, matched = 0;
  double worst_env = 0.0, worst_human = 0.0;
  for (int trial = 0; trial < 24; ++trial) {
    GridworldConfig gc;
    gc.n = 1 + trial % 2;
    gc.m = 1;
    gc.types = trial % 3 == 0 ? std::vector<std::string>{"A"} : std::vector<std::string>{"A", "B"};
    Gridworld g(gc);
    const std::size_t horizon = 2 + trial % 3;
    std::vector<double> weights(g.layout()->total_size());
    for (auto& x : weights) x = w(rng);
    ScoreFunctionSpec spec{Weights(weights)};
    spec.threshold = thr(rng);
    spec.f_kind = static_cast<FKind>(trial % 3);
    ExactConfig ec;
    ec.horizon = horizon;
    ec.info_space = oracle::random_info_space(rng, *g.layout(), 3 + trial % 4);
    const auto s0 = g.initial_state(static_cast<int>(rng() % g.cell_count()));
    ExactSolver<Gridworld> solver(g, spec, ec);
    const auto v = solver.solve(s0, g.human_prior());
    const auto front = oracle::joint_policy_front(g, spec, ec.info_space, ec.forward, s0,
                                                  g.human_prior(), horizon);
    const auto best = oracle::lexicographic_best(front);
    ++instances;
    const double de = std::abs(v.env - best.env), dh = std::abs(v.human - best.human);
    worst_env = std::max(worst_env, de);
    worst_human = std::max(worst_human, dh);
    matched += de < 1e-9 && dh < 1e-9;
  }
  return {matched == instances && instances >= 20,
          fmt("%d/%d instances match; env gap %.2e, human gap %.2e", matched, instances,
              worst_env, worst_human)};
}

Verdict dag_vs_brute_force() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> dim(2, 3), factors(1, 2), kind(0, 2);
  std::uniform_real_distribution<double> w(0.0, 4.0), thr(0.05, 0.8);
  int matched = 0;
  double worst = 0.0;
  const int cases = 50;
  for (int trial = 0; trial < cases; ++trial) {
    const std::size_t horizon = 1 + trial % 6;
    const std::size_t info_count = 2 + trial % 5;
    std::vector<FactorSpec> specs;
    for (int f = 0, nf = factors(rng); f < nf; ++f) {
      FactorSpec fs{"f" + std::to_string(f), {}};
      for (int v = 0, k = dim(rng); v < k; ++v) fs.values.push_back("v" + std::to_string(v));
      specs.push_back(fs);
    }
    auto layout = make_layout(specs);
    std::vector<FactoredBelief> views;
    for (std::size_t t = 0; t <= horizon; ++t) views.push_back(oracle::random_belief(rng, layout, 0.25));
    std::vector<double> weights(layout->total_size());
    for (auto& x : weights) x = w(rng);
    ScoreFunctionSpec spec{Weights(weights)};
    spec.f_kind = static_cast<FKind>(kind(rng));
    spec.threshold = thr(rng);
    if (rng() % 3 == 0) spec.history_penalty = -0.5;
    const auto infos = oracle::random_info_space(rng, *layout, info_count);
    const auto b_h = oracle::random_belief(rng, layout, 0.0);

    DagConfig cfg;
    cfg.beam_width = 0;
    cfg.forward = HumanForwardModel(0.0);
    const auto scorer = true_scorer(spec);
    DagNode root{b_h, 0, false, make_dag_key(b_h, false, cfg.quantum)};
    SuccessorFn succ = [&](const DagNode& n) {
      return get_successors(n, views, infos, scorer, cfg);
    };
    const double got = longest_weighted_path_dag(root, succ, horizon, 0).total;
    const double want = oracle::brute_force_info_value(views, b_h, infos, scorer, cfg.forward, horizon);
    const double gap = std::abs(got - want) / std::max(1.0, std::abs(want));
    worst = std::max(worst, gap);
    matched += gap < 1e-9;
  }
  return {matched == cases, fmt("%d/%d instances match, worst relative gap %.2e", matched, cases, worst)};
}

ScoreFunctionSpec grid_spec(const Gridworld& g, FKind kind) {
  ScoreFunctionSpec spec(Weights::shared(*g.layout(), std::vector<double>{10, 5, 1, 1, 1}));
  spec.f_kind = kind;
  return spec;
}

// A fact is "not at" whether phrased as NotAt or as At with marginal 0.
bool says_not_at(const TraceStep& s, const std::string& type) {
  if (s.info.rfind("NotAt(" + type + ",", 0) == 0) return true;
  return s.info.rfind("At(" + type + ",", 0) == 0 && s.marginal && *s.marginal == 0.0;
}

Verdict worked_trace() {
  GridworldConfig one;
  one.n = 1;
  one.m = 1;
  Gridworld g(one);
  const auto prior = g.human_prior();
  const auto next = jeffrey_update(prior, Information{Fluent::not_holds(0, 2), 1.0},
                                   HumanForwardModel(0.0));
  const double gain = weighted_gain(prior, next, grid_spec(g, FKind::Identity).weights);

  PlannerConfig pc;
  bool leaked = false;
  std::map<FKind, std::size_t> sent;
  auto run = [&](const Gridworld& domain, FKind kind, std::uint64_t seed, bool watch) {
    auto world = domain.sample_world(seed);
    const auto spec = grid_spec(domain, kind);
    SimulatedHuman human(domain.human_prior(), HumanForwardModel(1e-3), spec, 0.1, seed);
    ExecutionHooks hooks;
    hooks.scorer = [&spec] { return true_scorer(spec); };
    const auto trace = execute_with_replanning(domain, world, human, pc, hooks);
    sent[kind] += trace.infos;
    if (watch) {
      for (const auto& s : trace.steps) leaked = leaked || says_not_at(s, "T3");
    }
  };
  GridworldConfig two;
  two.n = 2;
  two.m = 1;
  Gridworld g2(two);
  for (auto kind : {FKind::Identity, FKind::Square, FKind::Log}) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) run(g, kind, seed, true);
    for (std::uint64_t seed = 0; seed < 10; ++seed) run(g2, kind, seed, false);
  }
  const bool pass = std::abs(gain - 0.03) <= 0.015 && !leaked && sent[FKind::Log] >= sent[FKind::Square];
  return {pass, fmt("NotAt(T3) gain %.4f, transmitted %s; transmissions log %zu, id %zu, sq %zu",
                    gain, leaked ? "yes" : "never", sent[FKind::Log], sent[FKind::Identity],
                    sent[FKind::Square])};
}

struct Ordering {
  bool pass = false;
  std::string detail;
};

Ordering ordering(ExperimentConfig base) {
  std::map<FKind, MeanStd> rates;
  std::size_t failed = 0;
  for (auto kind : {FKind::Log, FKind::Identity, FKind::Square}) {
    auto c = base;
    c.f_kind = kind;
    const auto r = run_experiment(c);
    rates[kind] = r.summary.infos_per_timestep;
    failed += r.summary.failed;
  }
  const double n = static_cast<double>(base.trials);
  auto separated = [&](FKind hi, FKind lo) {
    const double se = std::sqrt((rates[hi].std * rates[hi].std + rates[lo].std * rates[lo].std) / n);
    return rates[hi].mean - rates[lo].mean > 2.0 * se;
  };
  const bool pass = failed == 0 && separated(FKind::Log, FKind::Identity) &&
                    separated(FKind::Identity, FKind::Square);
  return {pass, fmt("%s log %.4f, id %.4f, sq %.4f (%s)", base.domain.c_str(),
                    rates[FKind::Log].mean, rates[FKind::Identity].mean,
                    rates[FKind::Square].mean, pass ? "ordered" : "not ordered")};
}

Verdict table_ordering() {
  const auto grid = ordering(ExperimentConfig::from_json(nlohmann::json{
      {"domain", "grid"}, {"n", 4}, {"m", 1}, {"trials", 100},
      {"weights", {{"T1", 10}, {"T2", 5}, {"T3", 1}, {"T4", 1}}}}));
  const auto zones = ordering(ExperimentConfig::from_json(nlohmann::json{
      {"domain", "zones"}, {"n", 5}, {"m", 5}, {"trials", 100},
      {"weights", {10, 5, 1, 1, 1}}}));
  return {grid.pass && zones.pass, grid.detail + "; " + zones.detail};
}

// Learning setup shared by the convergence and preference-change checks.
nlohmann::json learning_json() {
  return nlohmann::json{{"domain", "grid"},
                        {"n", 2},
                        {"m", 2},
                        {"mode", "learn"},
                        {"seeds", 5},
                        {"episodes", 40},
                        {"weights", {{"T1", 10}, {"T2", 5}, {"T3", 1}, {"T4", 1}}},
                        {"train", {{"init_scale", 1.0}, {"steps_per_timestep", 5}}}};
}

Verdict learning_convergence() {
  const auto c = ExperimentConfig::from_json(learning_json());
  const auto r = run_learning_experiment(c, true);
  const std::size_t end = c.episodes, begin = end - 5;
  double first = 0.0, last = 0.0, baseline = 0.0;
  for (std::size_t k = 0; k < c.seeds; ++k) {
    first += window_mean(r.per_seed[k], 0, 5);
    last += window_mean(r.per_seed[k], begin, end);
    baseline += window_mean(r.baseline[k], begin, end);
  }
  const double n = static_cast<double>(c.seeds);
  first /= n;
  last /= n;
  baseline /= n;
  const bool pass = last >= 0.8 * baseline && last > first;
  return {pass, fmt("final-5 mean %.3f vs baseline %.3f (ratio %.3f), first-5 mean %.3f", last,
                    baseline, last / baseline, first)};
}

Verdict gradient_check() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t dim = 6 + trial % 5;
    ScoreModel model(dim, {12, 7}, 100 + trial, 1.0);
    std::vector<std::vector<double>> xs(8, std::vector<double>(dim));
    ScoreModel::Batch batch;
    for (auto& x : xs) {
      for (auto& v : x) v = g(rng);
      batch.inputs.emplace_back(x);
      batch.targets.push_back(3.0 * g(rng));
    }
    const double l2 = 1e-3;
    const auto analytic = model.gradient(batch, l2);
    auto params = model.parameters();
    const double h = 1e-5;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double keep = params[i];
      params[i] = keep + h;
      const double up = model.loss(batch, l2);
      params[i] = keep - h;
      const double down = model.loss(batch, l2);
      params[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return {worst < 1e-4, fmt("10 batches, max relative error %.2e", worst)};
}

Verdict preference_change() {
  const std::size_t change_at = 25, episodes = 40;
  auto j = learning_json();
  j["episodes"] = episodes;
  j["preference_changes"] = nlohmann::json::array(
      {{{"episode", change_at}, {"weights", {1, 1, 10, 5, 1}}, {"epsilon_reset", 0.5}, {"clear_replay", true}}});
  const auto c = ExperimentConfig::from_json(j);
  const auto r = run_learning_experiment(c, false);
  int good = 0;
  std::string per_seed;
  for (std::size_t k = 0; k < c.seeds; ++k) {
    const double pre = window_mean(r.per_seed[k], change_at - 5, change_at);
    const double before = window_mean(r.per_seed[k], change_at - 3, change_at);
    const double dip = window_mean(r.per_seed[k], change_at, change_at + 3);
    bool recovered = false;
    for (std::size_t e = change_at + 3; e + 3 <= std::min(episodes, change_at + 15); ++e) {
      recovered = recovered || window_mean(r.per_seed[k], e, e + 3) >= 0.8 * pre;
    }
    const bool ok = dip < before && recovered;
    good += ok;
    per_seed += fmt(" [pre %.2f dip %.2f %s]", pre, dip, recovered ? "recovered" : "not recovered");
  }
  return {good >= 4, fmt("%d/5 seeds dip and recover:", good) + per_seed};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only, expected;
  app.add_option("criteria", only, "Criteria to run (default: all)");
  app.add_option("--expect-fail", expected, "Criteria known not to be attainable");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<int, std::function<Verdict()>>> checks = {
      {1, entropy_suite},       {2, jeffrey_suite},     {3, exact_vs_enumeration},
      {4, dag_vs_brute_force},  {5, worked_trace},      {6, table_ordering},
      {7, learning_convergence}, {8, gradient_check},   {9, preference_change}};
  const std::set<int> run(only.begin(), only.end()), tolerated(expected.begin(), expected.end());
  int unexpected = 0;
  for (const auto& [id, check] : checks) {
    if (!run.empty() && !run.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d: %s  %s  (%.1fs)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass && !tolerated.count(id)) ++unexpected;
  }
  return unexpected ? 1 : 0;
}
