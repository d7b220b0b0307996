#include <algorithm>
#include <set>
#include "infoplan/belief.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace infoplan {

namespace {

void normalize_in_place(std::span<double> probs, const char* what) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ContractViolation(std::string(what) +
                              ": probabilities must be finite and >= 0");
    }
    total += p;
  }
  if (!(total > 0.0)) {
    throw ContractViolation(std::string(what) + ": distribution has zero mass");
  }
  for (double& p : probs) p /= total;
}

}  // namespace

CategoricalDist::CategoricalDist(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty()) throw ContractViolation("CategoricalDist: empty");
  normalize_in_place(probs_, "CategoricalDist");
}

CategoricalDist CategoricalDist::uniform(std::size_t n) {
  return CategoricalDist(std::vector<double>(n, 1.0));
}

CategoricalDist CategoricalDist::degenerate(std::size_t n, std::size_t at) {
  if (at >= n) throw ContractViolation("CategoricalDist: index out of range");
  std::vector<double> p(n, 0.0);
  p[at] = 1.0;
  return CategoricalDist(std::move(p));
}

double weighted_entropy(std::span<const double> probs,
                        std::span<const double> weights) {
  if (probs.size() != weights.size()) {
    throw ContractViolation("weighted_entropy: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (weights[i] < 0.0) {
      throw ContractViolation("weighted_entropy: negative weight");
    }
    if (probs[i] > 0.0) s -= weights[i] * probs[i] * std::log(probs[i]);
  }
  return s;
}

double weighted_entropy(const CategoricalDist& dist,
                        std::span<const double> weights) {
  return weighted_entropy(dist.probs(), weights);
}

BeliefLayout::BeliefLayout(std::vector<FactorSpec> factors)
    : factors_(std::move(factors)) {
  offsets_.reserve(factors_.size());
  std::set<std::string> names;
  for (const auto& f : factors_) {
    if (!names.insert(f.name).second) {
      throw ContractViolation("BeliefLayout: duplicate factor '" + f.name + "'");
    }
    if (f.values.empty()) {
      throw ContractViolation("BeliefLayout: factor '" + f.name +
                              "' has no values");
    }
    offsets_.push_back(total_);
    total_ += f.values.size();
  }
}

std::size_t BeliefLayout::dim(std::size_t factor) const {
  return factors_.at(factor).values.size();
}

std::size_t BeliefLayout::offset(std::size_t factor) const {
  return offsets_.at(factor);
}

const std::string& BeliefLayout::factor_name(std::size_t factor) const {
  return factors_.at(factor).name;
}

const std::string& BeliefLayout::value_name(std::size_t factor,
                                            std::size_t value) const {
  return factors_.at(factor).values.at(value);
}

bool BeliefLayout::operator==(const BeliefLayout& other) const {
  if (factors_.size() != other.factors_.size()) return false;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i].name != other.factors_[i].name ||
        factors_[i].values != other.factors_[i].values) {
      return false;
    }
  }
  return true;
}

LayoutPtr make_layout(std::vector<FactorSpec> factors) {
  return std::make_shared<const BeliefLayout>(std::move(factors));
}

LayoutPtr make_uniform_layout(const std::vector<std::string>& factor_names,
                              const std::vector<std::string>& values) {
  std::vector<FactorSpec> specs;
  specs.reserve(factor_names.size());
  for (const auto& name : factor_names) specs.push_back({name, values});
  return make_layout(std::move(specs));
}

FactoredBelief::FactoredBelief(LayoutPtr layout, std::vector<double> flat)
    : layout_(std::move(layout)), flat_(std::move(flat)) {
  if (!layout_) throw ContractViolation("FactoredBelief: null layout");
  if (flat_.size() != layout_->total_size()) {
    throw ContractViolation("FactoredBelief: entry count does not match layout");
  }
  for (std::size_t f = 0; f < layout_->factor_count(); ++f) {
    normalize_in_place(
        std::span<double>(flat_).subspan(layout_->offset(f), layout_->dim(f)),
        "FactoredBelief");
  }
}

FactoredBelief FactoredBelief::uniform(LayoutPtr layout) {
  std::vector<double> flat(layout->total_size(), 1.0);
  return FactoredBelief(std::move(layout), std::move(flat));
}

std::span<const double> FactoredBelief::factor(std::size_t f) const {
  return std::span<const double>(flat_).subspan(layout_->offset(f),
                                                layout_->dim(f));
}

double FactoredBelief::prob(std::size_t f, std::size_t v) const {
  if (v >= layout_->dim(f)) throw ContractViolation("prob: value out of range");
  return flat_[layout_->offset(f) + v];
}

FactoredBelief FactoredBelief::with_factor(std::size_t f,
                                           std::span<const double> probs) const {
  if (f >= layout_->factor_count() || probs.size() != layout_->dim(f)) {
    throw ContractViolation("with_factor: shape mismatch");
  }
  std::vector<double> flat = flat_;
  std::copy(probs.begin(), probs.end(), flat.begin() + layout_->offset(f));
  return FactoredBelief(layout_, std::move(flat));
}

bool FactoredBelief::same_layout(const FactoredBelief& other) const {
  return layout_ == other.layout_ || *layout_ == *other.layout_;
}

nlohmann::ordered_json FactoredBelief::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t f = 0; f < factor_count(); ++f) {
    auto probs = factor(f);
    j[layout_->factor_name(f)] = std::vector<double>(probs.begin(), probs.end());
  }
  return j;
}

FactoredBelief FactoredBelief::from_json(LayoutPtr layout,
                                         const nlohmann::ordered_json& j) {
  std::vector<double> flat;
  flat.reserve(layout->total_size());
  for (std::size_t f = 0; f < layout->factor_count(); ++f) {
    const auto& name = layout->factor_name(f);
    if (!j.contains(name)) {
      throw ContractViolation("FactoredBelief::from_json: missing factor " + name);
    }
    auto probs = j.at(name).get<std::vector<double>>();
    if (probs.size() != layout->dim(f)) {
      throw ContractViolation("FactoredBelief::from_json: bad size for " + name);
    }
    flat.insert(flat.end(), probs.begin(), probs.end());
  }
  return FactoredBelief(std::move(layout), std::move(flat));
}

Weights::Weights(std::vector<double> w) : w_(std::move(w)) {
  for (double x : w_) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw ContractViolation("Weights: entries must be finite and >= 0");
    }
  }
}

Weights Weights::shared(const BeliefLayout& layout,
                        std::span<const double> per_value) {
  std::vector<double> w;
  w.reserve(layout.total_size());
  for (std::size_t f = 0; f < layout.factor_count(); ++f) {
    if (layout.dim(f) != per_value.size()) {
      throw ContractViolation("Weights::shared: per-value weight count " +
                              std::to_string(per_value.size()) +
                              " does not match factor dimension " +
                              std::to_string(layout.dim(f)));
    }
    w.insert(w.end(), per_value.begin(), per_value.end());
  }
  return Weights(std::move(w));
}

Weights Weights::ones(const BeliefLayout& layout) {
  return Weights(std::vector<double>(layout.total_size(), 1.0));
}

double factored_weighted_entropy(const FactoredBelief& b, const Weights& w) {
  if (w.size() != b.layout().total_size()) {
    throw ContractViolation("factored_weighted_entropy: layout mismatch");
  }
  return weighted_entropy(b.flat(), w.values());
}

double weighted_gain(const FactoredBelief& b, const FactoredBelief& b_next,
                     const Weights& w) {
  if (!b.same_layout(b_next)) {
    throw ContractViolation("weighted_gain: layout mismatch");
  }
  return factored_weighted_entropy(b, w) - factored_weighted_entropy(b_next, w);
}

void validate_fluent(const BeliefLayout& layout, const Fluent& fluent) {
  if (fluent.is_null()) return;
  if (fluent.factor >= layout.factor_count() ||
      fluent.value >= layout.dim(fluent.factor)) {
    std::ostringstream os;
    os << "fluent references factor " << fluent.factor << " value "
       << fluent.value << " outside the layout";
    throw ContractViolation(os.str());
  }
}

namespace {

// Mass of the event "fluent holds", summed so that holds + not-holds == 1
// exactly matches how jeffrey_rescale partitions the factor.
double event_mass(std::span<const double> probs, const Fluent& fluent) {
  if (fluent.kind == FluentKind::Holds) return probs[fluent.value];
  double m = 0.0;
  for (std::size_t v = 0; v < probs.size(); ++v) {
    if (v != fluent.value) m += probs[v];
  }
  return m;
}

bool in_event(std::size_t v, const Fluent& fluent) {
  return fluent.kind == FluentKind::Holds ? v == fluent.value
                                          : v != fluent.value;
}

}  // namespace

double marginal(const FactoredBelief& b, const Fluent& fluent) {
  if (fluent.is_null()) {
    throw ContractViolation("marginal: Null information has no marginal");
  }
  validate_fluent(b.layout(), fluent);
  // Summing a normalized factor can overshoot 1 by an ulp.
  return std::clamp(event_mass(b.factor(fluent.factor), fluent), 0.0, 1.0);
}

Information make_information(const FactoredBelief& b, const Fluent& fluent) {
  if (fluent.is_null()) return Information::null();
  return Information{fluent, marginal(b, fluent)};
}

HumanForwardModel::HumanForwardModel(double eps) : drift_epsilon(eps) {
  if (!(eps >= 0.0 && eps < 1.0)) {
    throw ContractViolation("HumanForwardModel: drift_epsilon must be in [0,1)");
  }
}

FactoredBelief human_forward_step(const FactoredBelief& b,
                                  const HumanForwardModel& m) {
  const double eps = m.drift_epsilon;
  if (eps == 0.0) return b;
  std::vector<double> flat(b.flat().begin(), b.flat().end());
  const auto& layout = b.layout();
  for (std::size_t f = 0; f < layout.factor_count(); ++f) {
    const std::size_t k = layout.dim(f);
    if (k < 2) continue;
    const double spread = eps / static_cast<double>(k - 1);
    double* p = flat.data() + layout.offset(f);
    for (std::size_t v = 0; v < k; ++v) {
      p[v] = (1.0 - eps) * p[v] + spread * (1.0 - p[v]);
    }
  }
  return FactoredBelief(b.layout_ptr(), std::move(flat));
}

FactoredBelief jeffrey_rescale(const FactoredBelief& drifted,
                               const Fluent& fluent, double target) {
  if (fluent.is_null()) return drifted;
  validate_fluent(drifted.layout(), fluent);
  if (!(target >= 0.0 && target <= 1.0)) {
    throw ContractViolation("jeffrey_update: marginal must lie in [0,1]");
  }
  auto probs = drifted.factor(fluent.factor);
  // Sum both sides: 1 - in_mass can be a rounding crumb when the complement
  // is truly empty.
  double in_mass = 0.0, out_mass = 0.0;
  for (std::size_t v = 0; v < probs.size(); ++v) {
    (in_event(v, fluent) ? in_mass : out_mass) += probs[v];
  }

  // Singular cases: one side of the partition has no mass. Asking for mass
  // there is unsupported; otherwise the factor is already at the target.
  if (in_mass <= 0.0) {
    if (target > 0.0) {
      throw UnsupportedUpdate("information asserts an event the receiver rules out");
    }
    return drifted;
  }
  if (out_mass <= 0.0) {
    if (target < 1.0) {
      throw UnsupportedUpdate("information denies an event the receiver is certain of");
    }
    return drifted;
  }

  const double in_scale = target / in_mass;
  const double out_scale = (1.0 - target) / out_mass;
  std::vector<double> next(probs.begin(), probs.end());
  for (std::size_t v = 0; v < next.size(); ++v) {
    next[v] *= in_event(v, fluent) ? in_scale : out_scale;
  }
  return drifted.with_factor(fluent.factor, next);
}

FactoredBelief jeffrey_update(const FactoredBelief& b_h, const Information& info,
                              const HumanForwardModel& m) {
  FactoredBelief drifted = human_forward_step(b_h, m);
  if (info.is_null()) return drifted;
  if (!info.marginal) {
    throw ContractViolation("jeffrey_update: non-null information needs a marginal");
  }
  return jeffrey_rescale(drifted, info.fluent, *info.marginal);
}

}  // namespace infoplan
