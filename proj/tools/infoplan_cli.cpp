// Experiment runner: known-score planning trials or online learning runs.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "infoplan/harness.hpp"

using namespace infoplan;

int main(int argc, char** argv) {
  CLI::App app{"Plan and transmit information to a simulated human teammate"};
  std::string config_path;
  std::string domain, f, mode, out;
  int n = 0, m = 0;
  long long trials = -1, seed = -1;
  bool baseline = false;

  app.add_option("config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--domain", domain, "grid | zones");
  app.add_option("--n", n, "Grid side or zone count");
  app.add_option("--m", m, "Number of objects");
  app.add_option("--f", f, "Score transform: id | sq | log");
  app.add_option("--trials", trials, "Independent trials");
  app.add_option("--seed", seed, "Base seed");
  app.add_option("--mode", mode, "plan_known_rh | learn");
  app.add_option("--out", out, "Output directory");
  app.add_flag("--baseline", baseline, "Learning mode: also run the known-score planner");
  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      in >> j;
    }
    if (!domain.empty()) j["domain"] = domain;
    if (n > 0) j["n"] = n;
    if (m > 0) j["m"] = m;
    if (!f.empty()) j["f"] = f;
    if (trials >= 0) j["trials"] = trials;
    if (seed >= 0) j["seed"] = seed;
    if (!mode.empty()) j["mode"] = mode;
    if (!out.empty()) j["out"] = out;
    const ExperimentConfig config = ExperimentConfig::from_json(j);

    if (config.mode == "learn") {
      const auto result = run_learning_experiment(config, baseline);
      const auto& last = result.curve.back();
      std::printf("episodes=%zu seeds=%zu final_mean_score=%.4f final_std=%.4f\n",
                  config.episodes, config.seeds, last.true_score.mean, last.true_score.std);
      const std::size_t end = config.episodes;
      const std::size_t begin = end >= 5 ? end - 5 : 0;
      for (std::size_t k = 0; k < result.baseline.size(); ++k) {
        std::printf("seed %zu final-5 learned %.4f baseline %.4f\n", k,
                    window_mean(result.per_seed[k], begin, end),
                    window_mean(result.baseline[k], begin, end));
      }
      return result.ok() ? 0 : 1;
    }

    const auto result = run_experiment(config);
    const auto& a = result.summary;
    std::printf("%s N=%d M=%d f=%s trials=%zu failed=%zu\n", config.domain.c_str(), config.n,
                config.m, std::string(to_string(config.f_kind)).c_str(), a.trials, a.failed);
    std::printf("score %.4f +- %.4f  infos/step %.4f +- %.4f  env %.2f +- %.2f\n",
                a.human_score.mean, a.human_score.std, a.infos_per_timestep.mean,
                a.infos_per_timestep.std, a.env_reward.mean, a.env_reward.std);
    for (const auto& t : result.trials) {
      if (t.failed) std::fprintf(stderr, "trial %zu failed: %s\n", t.trial, t.error.c_str());
    }
    return result.ok() ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
