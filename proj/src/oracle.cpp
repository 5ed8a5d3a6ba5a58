#include "hsbc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hsbc/errors.hpp"

namespace hsbc {

GroundTruth::GroundTruth(StepReward step_reward) : step_reward_(std::move(step_reward)) {}

GroundTruth GroundTruth::from_env(const EnvSpec& env) {
  return GroundTruth([env](const State& s, const Action& a) { return ground_truth_reward(env, s, a); });
}

GroundTruth GroundTruth::from_model(const RewardModel& model, const RewardParams& theta) {
  model.check_params(theta);
  return GroundTruth([model, theta](const State& s, const Action& a) {
    return reward(model, theta, s, a);
  });
}

double GroundTruth::segment_return(const Segment& seg) const {
  double total = 0.0;
  for (std::size_t t = 0; t < seg.length(); ++t)
    total += step_reward(seg.data.states[t], seg.data.actions[t]);
  return total;
}

double GroundTruth::discounted_return(const Segment& seg, double discount) const {
  const std::size_t n = seg.length();
  double total = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    total += std::pow(discount, static_cast<double>(n - 1 - t)) *
             step_reward(seg.data.states[t], seg.data.actions[t]);
  return total;
}

std::string to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::Rational: return "rational";
    case OracleKind::BatchFlip: return "batch-flip";
    case OracleKind::BernoulliFlip: return "bernoulli-flip";
    case OracleKind::Stoc: return "stoc";
    case OracleKind::Mistake: return "mistake";
    case OracleKind::Myopic: return "myopic";
    case OracleKind::Human: return "human";
  }
  return "rational";
}

OracleKind oracle_kind_from_string(const std::string& name) {
  for (auto k : {OracleKind::Rational, OracleKind::BatchFlip, OracleKind::BernoulliFlip,
                 OracleKind::Stoc, OracleKind::Mistake, OracleKind::Myopic, OracleKind::Human})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown oracle kind '" + name + "'");
}

void OracleSpec::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("oracle rate must lie in [0, 1]");
  if (!(stoc_beta > 0.0)) throw ConfigError("stoc beta must be positive");
  if (!(mistake_eps >= 0.0 && mistake_eps <= 1.0))
    throw ConfigError("mistake epsilon must lie in [0, 1]");
  if (!(myopic_gamma > 0.0 && myopic_gamma <= 1.0))
    throw ConfigError("myopic discount must lie in (0, 1]");
}

int rational_label(const GroundTruth& truth, const Segment& seg0, const Segment& seg1) {
  return truth.segment_return(seg0) <= truth.segment_return(seg1) ? 1 : 0;
}

std::vector<bool> batch_flip_mask(std::size_t n, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidInput("flip rate must lie in [0, 1]");
  const auto flips = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first `flips` entries are a uniform sample without replacement.
  for (std::size_t i = 0; i < flips; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < flips; ++i) mask[order[i]] = true;
  return mask;
}

std::vector<int> batch_flip_labels(const std::vector<int>& true_labels, double rate, Rng& rng) {
  const auto mask = batch_flip_mask(true_labels.size(), rate, rng);
  std::vector<int> out(true_labels);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (mask[i]) out[i] = 1 - out[i];
  return out;
}

double stoc_probability(double beta, double return0, double return1) {
  // exp(b J1) / (exp(b J0) + exp(b J1)) written as a logistic of the gap.
  const double z = beta * (return1 - return0);
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

int stoc_label(const GroundTruth& truth, double beta, const Segment& seg0, const Segment& seg1,
               Rng& rng) {
  const double p = stoc_probability(beta, truth.segment_return(seg0), truth.segment_return(seg1));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < p ? 1 : 0;
}

int mistake_label(const GroundTruth& truth, double eps, const Segment& seg0, const Segment& seg1,
                  Rng& rng) {
  const int y = rational_label(truth, seg0, seg1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < eps ? 1 - y : y;
}

int myopic_label(const GroundTruth& truth, double discount, const Segment& seg0,
                 const Segment& seg1) {
  return truth.discounted_return(seg0, discount) <= truth.discounted_return(seg1, discount) ? 1
                                                                                            : 0;
}

SimulatedOracle::SimulatedOracle(OracleSpec spec, GroundTruth truth)
    : spec_(spec), truth_(std::move(truth)), rng_(spec.seed) {
  spec_.validate();
  if (spec_.kind == OracleKind::Human)
    throw ConfigError("a simulated oracle cannot have kind 'human'");
}

LabelResult SimulatedOracle::label(const QueryRequest& q) {
  if (q.seg0 == nullptr || q.seg1 == nullptr) throw InvalidInput("query without segments");
  const Segment& s0 = *q.seg0;
  const Segment& s1 = *q.seg1;
  LabelResult out;
  out.source = LabelSource::Simulated;
  out.rational_label = rational_label(truth_, s0, s1);
  const int y = *out.rational_label;
  std::uniform_real_distribution<double> u(0.0, 1.0);

  switch (spec_.kind) {
    case OracleKind::Rational:
    case OracleKind::Human:
      out.label = y;
      break;
    case OracleKind::BatchFlip:
      if (q.batch_index != mask_batch_) {
        flip_mask_ = batch_flip_mask(static_cast<std::size_t>(q.batch_size), spec_.rate, rng_);
        mask_batch_ = q.batch_index;
      }
      if (q.position < 0 || q.position >= static_cast<int>(flip_mask_.size()))
        throw InvalidInput("query position outside the batch");
      out.label = flip_mask_[static_cast<std::size_t>(q.position)] ? 1 - y : y;
      break;
    case OracleKind::BernoulliFlip:
      out.label = u(rng_) < spec_.rate ? 1 - y : y;
      break;
    case OracleKind::Stoc:
      out.label = stoc_label(truth_, spec_.stoc_beta, s0, s1, rng_);
      break;
    case OracleKind::Mistake:
      out.label = u(rng_) < spec_.mistake_eps ? 1 - y : y;
      break;
    case OracleKind::Myopic:
      out.label = myopic_label(truth_, spec_.myopic_gamma, s0, s1);
      break;
  }
  return out;
}

}  // namespace hsbc
