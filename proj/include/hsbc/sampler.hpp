#pragma once

#include <vector>

#include "hsbc/cut.hpp"
#include "hsbc/reward.hpp"

namespace hsbc {

struct Ensemble {
  std::vector<RewardParams> members;
  int iteration = 0;
  bool degenerate = false;  ///< all members identical at initialization (init_scale == 0)

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
};

struct SamplerConfig {
  int ensemble_size = 16;
  double learning_rate = 0.005;
  int steps = 100;
  double weight_decay = 0.001;
  double init_scale = 1.0;
  /// Densification noise as a fraction of each duplicated member's norm.
  double densify_noise = 0.01;
  /// Share of warm starts replaced by fresh initializations each iteration.
  double fresh_fraction = 0.25;
  int max_restarts = 2;
  SmoothingConfig smoothing;

  void validate() const;
};

Ensemble initialize_ensemble(const RewardModel& model, const SamplerConfig& config, Rng& rng);

struct SampleResult {
  Ensemble ensemble;
  std::vector<bool> failed;  ///< members whose ascent never produced finite values
  int restarts = 0;
};

/// Gradient ascent (Adam with L2 weight decay) on the smoothed log objective,
/// one independent run per warm-start member. An empty warm start means fresh
/// initializations; an empty history returns the warm start unchanged.
SampleResult sample_ensemble(const CompiledHistory& history, const SamplerConfig& config,
                             const Ensemble& warm_start, Rng& rng);

SampleResult sample_ensemble(const RewardModel& model, const BatchHistory& history,
                             const SamplerConfig& config, const Ensemble& warm_start, Rng& rng);

/// Members inside the exact hypothesis space, order preserved.
std::vector<RewardParams> filter_ensemble(const CompiledHistory& history,
                                          const std::vector<RewardParams>& members);

std::vector<RewardParams> filter_ensemble(const RewardModel& model, const BatchHistory& history,
                                          const Ensemble& ensemble);

/// Pads `kept` to `size` members with uniformly chosen originals plus N(0, noise_stddev^2)
/// noise. Throws SamplerFailure when `kept` is empty.
Ensemble densify(const std::vector<RewardParams>& kept, int size, double noise_stddev, Rng& rng);

/// As densify, with noise relative to each member's norm; noised copies that
/// leave the hypothesis space are redrawn up to five times, then duplicated exactly.
Ensemble densify_within(const CompiledHistory& history, const std::vector<RewardParams>& kept,
                        int size, double noise_fraction, Rng& rng);

/// Replaces ceil(fraction * M) uniformly chosen members with fresh initializations.
Ensemble with_fresh_restarts(const RewardModel& model, const Ensemble& ensemble,
                             const SamplerConfig& config, Rng& rng);

struct RefreshResult {
  Ensemble ensemble;
  int passed_filter = 0;  ///< members kept by the exact filter before densification
  int fallback = 0;       ///< 0 none, 1 re-run with fresh starts, 2 best-vote members kept
  bool degraded = false;
};

/// One hypothesis-sampling step: warm-started ascent, exact filter, densification,
/// with the fresh-restart and best-vote fallbacks when nothing survives.
RefreshResult refresh_ensemble(const CompiledHistory& history, const Ensemble& previous,
                               const SamplerConfig& config, Rng& rng);

}  // namespace hsbc
