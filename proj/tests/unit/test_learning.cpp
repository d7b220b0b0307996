#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "../support/oracles.hpp"
#include "infoplan/gridworld.hpp"
#include "infoplan/learning.hpp"

using namespace infoplan;

namespace {

// Largest relative gap between analytic and central-difference gradients.
double worst_gradient_error(ScoreModel& model, const ScoreModel::Batch& batch, double l2) {
  const auto analytic = model.gradient(batch, l2);
  auto params = model.parameters();
  const double h = 1e-5;
  double worst = 0.0;
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
  return worst;
}

struct OwnedBatch {
  std::vector<std::vector<double>> xs;
  ScoreModel::Batch view;
};

OwnedBatch random_batch(std::mt19937_64& rng, std::size_t dim, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  OwnedBatch b;
  b.xs.resize(n, std::vector<double>(dim));
  for (auto& x : b.xs) {
    for (auto& v : x) v = g(rng);
  }
  for (const auto& x : b.xs) {
    b.view.inputs.emplace_back(x);
    b.view.targets.push_back(3.0 * g(rng));
  }
  return b;
}

}  // namespace

TEST_CASE("featurize examples") {
  auto layout = make_uniform_layout({"a", "b"}, {"x", "y"});
  const auto u = FactoredBelief::uniform(layout);
  for (double v : featurize(u, u)) CHECK(v == 0.0);

  const FactoredBelief sharp(layout, {1.0, 0.0, 0.5, 0.5});
  const auto f = featurize(u, sharp);
  CHECK(f[0] == doctest::Approx(-0.5 * std::log(0.5)));
  CHECK(f[0] == doctest::Approx(0.346574).epsilon(1e-6));
  CHECK(f[1] == doctest::Approx(-0.5 * std::log(0.5)));
  CHECK(f[2] == 0.0);
  CHECK(f[3] == 0.0);

  // The weighted gain is the dot product with the weights.
  const Weights w(std::vector<double>{2.0, 1.0, 3.0, 4.0});
  double dot = 0.0;
  for (std::size_t i = 0; i < 4; ++i) dot += w.values()[i] * f[i];
  CHECK(dot == doctest::Approx(weighted_gain(u, sharp, w)));

  auto other = make_uniform_layout({"a"}, {"x", "y"});
  CHECK_THROWS_AS(featurize(u, FactoredBelief::uniform(other)), ContractViolation);
}

TEST_CASE("model forward pass") {
  ScoreModel m(6, {5, 4}, 1);
  CHECK(m.parameter_count() == 6 * 5 + 5 + 5 * 4 + 4 + 4 + 1);
  const std::vector<double> x{0.1, -0.2, 0.3, 0.0, 1.0, -1.0};
  ScoreModel twin(6, {5, 4}, 1);
  CHECK(m.predict(x) == twin.predict(x));
  m.zero_output_layer();
  CHECK(m.predict(x) == 0.0);
  CHECK_THROWS_AS(m.predict(std::vector<double>{1.0}), ContractViolation);
}

TEST_CASE("analytic gradient matches finite differences") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    ScoreModel m(7, {9, 6}, 10 + trial, 0.8);
    auto b = random_batch(rng, 7, 5);
    CHECK(worst_gradient_error(m, b.view, 1e-3) < 1e-4);
  }
}

TEST_CASE("train_step never raises the batch loss") {
  std::mt19937_64 rng(5);
  // Linearly realizable targets.
  auto b = random_batch(rng, 4, 40);
  for (std::size_t k = 0; k < b.xs.size(); ++k) {
    b.view.targets[k] = 0.5 * b.xs[k][0] - 0.25 * b.xs[k][2] + 0.1;
  }
  ScoreModel m(4, {8}, 2, 0.5);
  TrainConfig tc;
  tc.learning_rate = 5.0;  // large enough to need backoff
  Optimizer opt(tc);
  double prev = m.loss(b.view, tc.l2_scale);
  const double first = prev;
  for (int i = 0; i < 200; ++i) {
    const double before = train_step(m, b.view, opt);
    CHECK(before == doctest::Approx(prev));
    const double after = m.loss(b.view, tc.l2_scale);
    CHECK(after <= before);
    prev = after;
  }
  CHECK(prev < 0.5 * first);
}

TEST_CASE("matching targets leave only the l2 pull") {
  ScoreModel m(3, {4}, 3);
  const std::vector<double> x{0.2, 0.4, -0.1};
  ScoreModel::Batch b{{x}, {m.predict(x)}};
  CHECK(m.loss(b, 0.0) == 0.0);
  const auto g = m.gradient(b, 1e-2);
  auto p = m.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(g[i] == doctest::Approx(2e-2 * p[i]));
}

TEST_CASE("a linear probe recovers identity-f scores from features") {
  // Noiseless gains on random single-factor updates, threshold out of play.
  auto layout = make_uniform_layout({"a", "b", "c"}, {"x", "y", "z"});
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> wd(0.5, 3.0), md(0.0, 1.0);
  std::vector<double> wv(layout->total_size());
  for (auto& x : wv) x = wd(rng);
  const Weights w(wv);
  auto sample = [&](std::vector<std::vector<double>>& xs, std::vector<double>& ys, int n) {
    for (int k = 0; k < n; ++k) {
      const auto b = oracle::random_belief(rng, layout, 0.0);
      const auto f = Fluent::holds(rng() % 3, rng() % 3);
      const auto next = jeffrey_update(b, Information{f, md(rng)}, HumanForwardModel(0.0));
      xs.push_back(featurize(b, next));
      ys.push_back(weighted_gain(b, next, w));
    }
  };
  std::vector<std::vector<double>> train_x, test_x;
  std::vector<double> train_y, test_y;
  sample(train_x, train_y, 300);
  sample(test_x, test_y, 200);
  const auto probe = LinearProbe::fit(train_x, train_y);
  double mse = 0.0;
  for (std::size_t k = 0; k < test_x.size(); ++k) {
    const double e = probe.predict(test_x[k]) - test_y[k];
    mse += e * e;
  }
  CHECK(mse / static_cast<double>(test_x.size()) < 1e-4);
  for (std::size_t i = 0; i < wv.size(); ++i) {
    CHECK(probe.coefficients()[i] == doctest::Approx(wv[i]).epsilon(1e-4));
  }
}

TEST_CASE("epsilon-greedy choice") {
  const std::vector<Fluent> infos{Fluent::null(), Fluent::holds(0, 0), Fluent::not_holds(0, 0),
                                  Fluent::holds(0, 1)};
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    CHECK(epsilon_greedy_info(infos[1], infos, 0.0, rng) == infos[1]);
  }
  std::map<int, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto f = epsilon_greedy_info(infos[1], infos, 1.0, rng);
    for (int k = 0; k < 4; ++k) {
      if (f == infos[k]) ++counts[k];
    }
  }
  // Each bin is Binomial(n, 1/4): within three standard deviations.
  const double sd = std::sqrt(n * 0.25 * 0.75);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(counts[k] - n / 4.0) < 3.0 * sd);

  std::mt19937_64 a(9), b(9);
  for (int i = 0; i < 50; ++i) {
    CHECK(epsilon_greedy_info(infos[0], infos, 0.5, a) == epsilon_greedy_info(infos[0], infos, 0.5, b));
  }
}

TEST_CASE("epsilon schedule") {
  TrainConfig c;
  CHECK(epsilon_at(c, 0, 0, 1.0) == 1.0);
  CHECK(epsilon_at(c, 20, 0, 1.0) == doctest::Approx(0.01));
  CHECK(epsilon_at(c, 10, 0, 1.0) == doctest::Approx(0.1));
  CHECK(epsilon_at(c, 35, 0, 1.0) == doctest::Approx(0.01));
  // A reset restarts the decay from its own value at the anchor.
  CHECK(epsilon_at(c, 30, 30, 0.5) == 0.5);
  CHECK(epsilon_at(c, 31, 30, 0.5) < 0.5);
}

TEST_CASE("replay dataset is a FIFO with distinct samples") {
  auto layout = make_uniform_layout({"a"}, {"x", "y"});
  const auto u = FactoredBelief::uniform(layout);
  ReplayDataset d(3);
  for (int i = 0; i < 5; ++i) d.push(Transition{u, u, static_cast<double>(i), false, {0.0, 0.0}});
  CHECK(d.size() == 3);
  CHECK(d.at(0).noisy_score == 2.0);
  CHECK(d.at(2).noisy_score == 4.0);

  std::mt19937_64 rng(1);
  auto idx = d.sample_indices(10, rng);
  CHECK(idx.size() == 3);
  std::sort(idx.begin(), idx.end());
  CHECK(std::unique(idx.begin(), idx.end()) == idx.end());

  std::mt19937_64 a(3), b(3);
  ReplayDataset big(100);
  for (int i = 0; i < 100; ++i) big.push(Transition{u, u, 1.0 * i, false, {0.0, 0.0}});
  CHECK(big.sample_indices(10, a) == big.sample_indices(10, b));
}

TEST_CASE("learned scorer leaves Null at the fixed reward") {
  auto layout = make_uniform_layout({"a"}, {"x", "y"});
  ScoreModel m(2, {3}, 1);
  const auto s = model_scorer(m, false, 1e-3);
  const auto u = FactoredBelief::uniform(layout);
  CHECK(s.fn(u, u, Fluent::null(), false) == 1e-3);
  const FactoredBelief sharp(layout, {1.0, 0.0});
  CHECK(s.fn(u, sharp, Fluent::holds(0, 0), false) == m.predict(featurize(u, sharp)));
}

TEST_CASE("preference change swaps weights and f") {
  GridworldConfig gc;
  gc.n = 2;
  Gridworld g(gc);
  ScoreFunctionSpec spec(Weights::ones(*g.layout()));
  PreferenceChange change;
  change.weights = {1, 1, 1, 10, 5};
  change.f_kind = FKind::Log;
  const auto next = apply_preference_change(spec, *g.layout(), change);
  CHECK(next.f_kind == FKind::Log);
  CHECK(next.weights.values()[3] == 10.0);
  CHECK(next.weights.values()[5 + 4] == 5.0);
  change.weights = {1, 2};
  CHECK_THROWS_AS(apply_preference_change(spec, *g.layout(), change), ContractViolation);
}
