#include "infoplan/scoring.hpp"

#include <cmath>

namespace infoplan {

FKind parse_f_kind(std::string_view name) {
  if (name == "id" || name == "identity") return FKind::Identity;
  if (name == "sq" || name == "square") return FKind::Square;
  if (name == "log") return FKind::Log;
  throw ContractViolation("unknown f kind '" + std::string(name) + "'");
}

std::string_view to_string(FKind kind) {
  switch (kind) {
    case FKind::Identity: return "id";
    case FKind::Square: return "sq";
    case FKind::Log: return "log";
  }
  return "?";
}

void ScoreFunctionSpec::validate() const {
  if (!(threshold > 0.0)) {
    throw ContractViolation("ScoreFunctionSpec: threshold must be > 0");
  }
  if (!(penalty < 0.0 && null_reward >= 0.0)) {
    throw ContractViolation("ScoreFunctionSpec: need penalty < 0 <= null_reward");
  }
}

double apply_f(const ScoreFunctionSpec& spec, double gain, bool is_null) {
  if (is_null) return spec.null_reward;
  if (gain < spec.threshold) return spec.penalty;
  switch (spec.f_kind) {
    case FKind::Identity: return gain;
    case FKind::Square: return gain * gain;
    case FKind::Log: return std::log(gain);
  }
  return spec.penalty;
}

double score(const ScoreFunctionSpec& spec, const FactoredBelief& b_h,
             const FactoredBelief& b_h_next, const Fluent& info) {
  return apply_f(spec, weighted_gain(b_h, b_h_next, spec.weights),
                 info.is_null());
}

double score_with_history(const ScoreFunctionSpec& spec,
                          const FactoredBelief& b_h,
                          const FactoredBelief& b_h_next, const Fluent& info,
                          bool prev_transmitted) {
  double s = score(spec, b_h, b_h_next, info);
  if (spec.history_penalty && prev_transmitted && !info.is_null()) {
    s += *spec.history_penalty;
  }
  return s;
}

SimulatedHuman::SimulatedHuman(FactoredBelief initial, HumanForwardModel forward,
                               ScoreFunctionSpec spec, double noise_sigma,
                               std::uint64_t seed)
    : belief_(std::move(initial)),
      forward_(forward),
      spec_(std::move(spec)),
      noise_sigma_(noise_sigma),
      rng_(seed) {
  spec_.validate();
  if (!(noise_sigma_ >= 0.0)) {
    throw ContractViolation("SimulatedHuman: noise_sigma must be >= 0");
  }
  if (spec_.weights.size() != belief_.layout().total_size()) {
    throw ContractViolation("SimulatedHuman: weights do not match belief layout");
  }
}

SimulatedHuman::Response SimulatedHuman::receive(const Information& info) {
  FactoredBelief next = jeffrey_update(belief_, info, forward_);
  Response r{0.0, 0.0, belief_, next};
  r.clean = score_with_history(spec_, belief_, next, info.fluent,
                               last_transmitted_);
  r.noisy = r.clean;
  if (noise_sigma_ > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma_);
    r.noisy += noise(rng_);
  }
  belief_ = std::move(next);
  last_transmitted_ = !info.is_null();
  return r;
}

void SimulatedHuman::reset(FactoredBelief initial) {
  if (!initial.same_layout(belief_)) {
    throw ContractViolation("SimulatedHuman::reset: layout mismatch");
  }
  belief_ = std::move(initial);
  last_transmitted_ = false;
}

void SimulatedHuman::set_spec(ScoreFunctionSpec spec) {
  spec.validate();
  if (spec.weights.size() != belief_.layout().total_size()) {
    throw ContractViolation("SimulatedHuman::set_spec: weights do not match layout");
  }
  spec_ = std::move(spec);
}

}  // namespace infoplan
