#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "infoplan/learning.hpp"
#include "infoplan/scoring.hpp"

namespace infoplan {

std::uint64_t splitmix64(std::uint64_t x);

/// Everything one experiment needs. Loaded from JSON; unknown keys are
/// rejected so typos fail loudly.
struct ExperimentConfig {
  std::string domain = "grid";  // grid | zones
  int n = 4;                    // grid side or zone count
  int m = 1;                    // objects
  int lattice = 20;             // zones only
  FKind f_kind = FKind::Identity;
  /// Per-value weights: an array in value order or {"name": weight}; values
  /// not named get 1. Null means all ones.
  nlohmann::json weights;
  double threshold = 1.0;
  double penalty = -10.0;
  double null_reward = 1e-3;
  std::optional<double> history_penalty;
  double drift_epsilon = 1e-3;
  double noise_sigma = 0.1;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::string mode = "plan_known_rh";  // plan_known_rh | learn
  std::size_t beam_width = 64;
  std::string out;  // empty: write nothing
  bool write_traces = true;
  /// Optional fixed initial layout used for every trial.
  std::optional<nlohmann::json> scenario;

  // Learning mode.
  TrainConfig train;
  std::size_t episodes = 40;
  std::size_t seeds = 5;
  std::vector<PreferenceChange> preference_changes;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  nlohmann::ordered_json to_json() const;
  void validate() const;
};

struct TrialSummary {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double human_score = 0.0;
  double noisy_score = 0.0;
  double infos_per_timestep = 0.0;
  double env_reward = 0.0;
  double plan_seconds = 0.0;
  std::size_t steps = 0;
  std::size_t infos = 0;
  std::size_t replans = 0;
  bool failed = false;
  std::string error;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

MeanStd mean_std(const std::vector<double>& xs);

struct Aggregate {
  std::size_t trials = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  MeanStd human_score;
  MeanStd noisy_score;
  MeanStd infos_per_timestep;
  MeanStd env_reward;
  MeanStd steps;
  MeanStd replans;
};

/// Means and standard deviations over completed trials.
Aggregate aggregate(const std::vector<TrialSummary>& trials);

std::string aggregate_csv_header();
std::string aggregate_csv_row(const ExperimentConfig& config, const Aggregate& a);

struct ExperimentResult {
  std::vector<TrialSummary> trials;
  Aggregate summary;
  bool ok() const { return summary.failed == 0; }
};

/// Seeded independent trials with the true score function. Writes
/// trace_<trial>.jsonl, aggregate.csv and timing.csv under config.out.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct CurveRow {
  std::size_t episode = 0;
  MeanStd true_score;
  MeanStd noisy_score;
  double epsilon = 0.0;
  double mean_loss = 0.0;
};

struct LearningExperimentResult {
  std::vector<std::vector<EpisodeRecord>> per_seed;
  std::vector<CurveRow> curve;
  /// Per seed and episode: score of the known-score planner on the same
  /// worlds and preference schedule, no exploration (empty unless requested).
  std::vector<std::vector<double>> baseline;
  bool ok() const;
};

/// Online learning over config.seeds independent seeds. Writes
/// curve_seed<k>.csv and curve.csv under config.out.
LearningExperimentResult run_learning_experiment(const ExperimentConfig& config,
                                                 bool with_baseline = false);

/// curve.csv: per-episode mean and std over seeds.
std::string curve_csv_header();
/// curve_seed<k>.csv: one seed's episode scores.
std::string seed_curve_csv_header();

/// Mean true score of one seed over episodes [begin, end).
double window_mean(const std::vector<EpisodeRecord>& episodes, std::size_t begin, std::size_t end);
/// Same for a plain per-episode score list.
double window_mean(const std::vector<double>& scores, std::size_t begin, std::size_t end);

}  // namespace infoplan
