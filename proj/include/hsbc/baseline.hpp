#pragma once

#include "hsbc/cut.hpp"
#include "hsbc/reward.hpp"
#include "hsbc/sampler.hpp"

namespace hsbc {

/// Bradley-Terry reward learner: a small ensemble fit by cross-entropy on all
/// accumulated preferences.
struct BaselineConfig {
  int models = 3;
  double alpha = 3.0;  ///< Bradley-Terry temperature
  double learning_rate = 0.005;
  int steps = 100;     ///< optimizer steps per model after each batch
  double weight_decay = 0.001;
  double init_scale = 1.0;
  double disagreement_threshold = 0.8;

  void validate() const;
};

/// P(seg1 preferred over seg0) = sigmoid(alpha (J(seg1) - J(seg0))).
double bt_probability(const RewardModel& model, const RewardParams& params, double alpha,
                      const Segment& seg0, const Segment& seg1);

/// Summed cross-entropy -[y log P(1 > 0) + (1 - y) log P(0 > 1)] and its gradient.
ObjectiveValue bradley_terry_loss(const CompiledHistory& history, double alpha,
                                  const RewardParams& params, bool with_gradient = true);

Ensemble initialize_bt_models(const RewardModel& model, const BaselineConfig& config, Rng& rng);

/// Continues training every model from its current parameters (Adam, L2 decay).
/// An empty history leaves the models untouched.
void train_bt_models(const CompiledHistory& history, const BaselineConfig& config,
                     Ensemble& models);

}  // namespace hsbc
