#include "hsbc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "hsbc/adam.hpp"
#include "hsbc/errors.hpp"

namespace hsbc {

void SamplerConfig::validate() const {
  if (ensemble_size < 2) throw ConfigError("ensemble size must be at least 2");
  if (!(learning_rate > 0.0)) throw ConfigError("sampler learning rate must be positive");
  if (steps < 0) throw ConfigError("sampler step count must be nonnegative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be nonnegative");
  if (!(init_scale >= 0.0)) throw ConfigError("init_scale must be nonnegative");
  if (!(densify_noise >= 0.0)) throw ConfigError("densify noise must be nonnegative");
  if (!(fresh_fraction >= 0.0 && fresh_fraction <= 1.0))
    throw ConfigError("fresh_fraction must lie in [0, 1]");
  smoothing.validate();
}

Ensemble initialize_ensemble(const RewardModel& model, const SamplerConfig& config, Rng& rng) {
  Ensemble e;
  e.members.reserve(static_cast<std::size_t>(config.ensemble_size));
  for (int k = 0; k < config.ensemble_size; ++k)
    e.members.push_back(random_params(model, config.init_scale, rng));
  if (config.init_scale == 0.0) {
    e.degenerate = true;
    std::cerr << "warning: init_scale is 0, every ensemble member starts at zero\n";
  }
  return e;
}

namespace {

bool finite(const ObjectiveValue& v) { return std::isfinite(v.value) && v.gradient.allFinite(); }

/// Returns false if the member never produced a finite objective.
bool ascend(const CompiledHistory& history, const SamplerConfig& config, RewardParams& theta,
            Rng& rng, int& restarts) {
  int local_restarts = 0;
  Adam adam(theta.size());
  for (int step = 0; step < config.steps; ++step) {
    const ObjectiveValue obj = history.objective(theta, config.smoothing);
    if (!finite(obj)) {
      if (local_restarts++ >= config.max_restarts) return false;
      ++restarts;
      theta = random_params(history.model(), config.init_scale, rng);
      adam.reset();
      step = -1;
      continue;
    }
    adam.step(theta, obj.gradient - config.weight_decay * theta, config.learning_rate);
  }
  return theta.allFinite();
}

}  // namespace

SampleResult sample_ensemble(const CompiledHistory& history, const SamplerConfig& config,
                             const Ensemble& warm_start, Rng& rng) {
  SampleResult out;
  out.ensemble = warm_start.empty() ? initialize_ensemble(history.model(), config, rng) : warm_start;
  out.failed.assign(out.ensemble.size(), false);
  if (history.batch_count() == 0) return out;
  for (std::size_t k = 0; k < out.ensemble.size(); ++k)
    out.failed[k] = !ascend(history, config, out.ensemble.members[k], rng, out.restarts);
  return out;
}

SampleResult sample_ensemble(const RewardModel& model, const BatchHistory& history,
                             const SamplerConfig& config, const Ensemble& warm_start, Rng& rng) {
  if (history.empty()) {
    SampleResult out;
    out.ensemble = warm_start.empty() ? initialize_ensemble(model, config, rng) : warm_start;
    out.failed.assign(out.ensemble.size(), false);
    return out;
  }
  return sample_ensemble(CompiledHistory(model, history), config, warm_start, rng);
}

std::vector<RewardParams> filter_ensemble(const CompiledHistory& history,
                                          const std::vector<RewardParams>& members) {
  std::vector<RewardParams> kept;
  for (const auto& theta : members)
    if (theta.allFinite() && history.contains(theta)) kept.push_back(theta);
  return kept;
}

std::vector<RewardParams> filter_ensemble(const RewardModel& model, const BatchHistory& history,
                                          const Ensemble& ensemble) {
  std::vector<RewardParams> kept;
  for (const auto& theta : ensemble.members)
    if (in_hypothesis_space(model, history, theta)) kept.push_back(theta);
  return kept;
}

Ensemble densify(const std::vector<RewardParams>& kept, int size, double noise_stddev, Rng& rng) {
  if (kept.empty()) throw SamplerFailure("densify: no members survived the exact filter");
  Ensemble out;
  out.members = kept;
  std::uniform_int_distribution<std::size_t> pick(0, kept.size() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  while (static_cast<int>(out.members.size()) < size) {
    RewardParams copy = kept[pick(rng)];
    if (noise_stddev > 0.0)
      for (Eigen::Index i = 0; i < copy.size(); ++i) copy(i) += noise_stddev * normal(rng);
    out.members.push_back(std::move(copy));
  }
  return out;
}

Ensemble densify_within(const CompiledHistory& history, const std::vector<RewardParams>& kept,
                        int size, double noise_fraction, Rng& rng) {
  if (kept.empty()) throw SamplerFailure("densify: no members survived the exact filter");
  constexpr int kTries = 5;
  Ensemble out;
  out.members = kept;
  std::uniform_int_distribution<std::size_t> pick(0, kept.size() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  while (static_cast<int>(out.members.size()) < size) {
    const RewardParams& base = kept[pick(rng)];
    const double stddev = noise_fraction * base.norm();
    RewardParams candidate = base;
    if (stddev > 0.0) {
      for (int attempt = 0; attempt < kTries; ++attempt) {
        RewardParams noised = base;
        for (Eigen::Index i = 0; i < noised.size(); ++i) noised(i) += stddev * normal(rng);
        if (history.contains(noised)) {
          candidate = std::move(noised);
          break;
        }
      }
    }
    out.members.push_back(std::move(candidate));
  }
  return out;
}

Ensemble with_fresh_restarts(const RewardModel& model, const Ensemble& ensemble,
                             const SamplerConfig& config, Rng& rng) {
  Ensemble out = ensemble;
  const auto m = out.members.size();
  const auto fresh = std::min(
      m, static_cast<std::size_t>(std::ceil(config.fresh_fraction * static_cast<double>(m))));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < fresh; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  for (std::size_t i = 0; i < fresh; ++i)
    out.members[order[i]] = random_params(model, config.init_scale, rng);
  return out;
}

RefreshResult refresh_ensemble(const CompiledHistory& history, const Ensemble& previous,
                               const SamplerConfig& config, Rng& rng) {
  RefreshResult out;
  const RewardModel& model = history.model();
  const int m = config.ensemble_size;

  if (history.batch_count() == 0) {
    out.ensemble = previous.empty() ? initialize_ensemble(model, config, rng) : previous;
    out.passed_filter = static_cast<int>(out.ensemble.size());
    return out;
  }

  auto survivors = [&](const SampleResult& sampled) {
    std::vector<RewardParams> alive;
    for (std::size_t k = 0; k < sampled.ensemble.size(); ++k)
      if (!sampled.failed[k]) alive.push_back(sampled.ensemble.members[k]);
    return filter_ensemble(history, alive);
  };

  const Ensemble warm = previous.empty() ? initialize_ensemble(model, config, rng)
                                         : with_fresh_restarts(model, previous, config, rng);
  SampleResult sampled = sample_ensemble(history, config, warm, rng);
  std::vector<RewardParams> kept = survivors(sampled);

  if (kept.empty()) {
    out.fallback = 1;
    SamplerConfig longer = config;
    longer.steps = 2 * config.steps;
    sampled = sample_ensemble(history, longer, initialize_ensemble(model, config, rng), rng);
    kept = survivors(sampled);
  }

  if (kept.empty()) {
    // Keep the members with the highest vote totals across all batches.
    out.fallback = 2;
    out.degraded = true;
    std::vector<std::pair<int, std::size_t>> scored;
    for (std::size_t k = 0; k < sampled.ensemble.size(); ++k) {
      const auto& theta = sampled.ensemble.members[k];
      if (!theta.allFinite()) continue;
      const auto v = history.votes(theta);
      scored.emplace_back(std::accumulate(v.begin(), v.end(), 0), k);
    }
    if (scored.empty()) throw SamplerFailure("every ensemble member diverged");
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    const auto keep = std::min(scored.size(),
                               static_cast<std::size_t>(std::ceil(m * config.fresh_fraction)) + 1);
    for (std::size_t i = 0; i < keep; ++i) kept.push_back(sampled.ensemble.members[scored[i].second]);
    out.passed_filter = 0;
    out.ensemble = densify(kept, m, 0.0, rng);
    return out;
  }

  out.passed_filter = static_cast<int>(kept.size());
  out.ensemble = densify_within(history, kept, m, config.densify_noise, rng);
  return out;
}

}  // namespace hsbc
