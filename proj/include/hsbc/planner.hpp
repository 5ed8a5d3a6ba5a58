#pragma once

#include <cstdint>
#include <functional>

#include "hsbc/env.hpp"
#include "hsbc/reward.hpp"
#include "hsbc/sampler.hpp"

namespace hsbc {

struct ExplorationConfig {
  bool enabled = true;
  double scale = 0.0;        ///< initial noise stddev; 0 means the planner's std
  double decay = 0.9;        ///< per-iteration multiplier
  double probability = 0.5;  ///< chance of perturbing each executed action
};

struct PlannerConfig {
  int num_samples = 256;
  int horizon = 20;
  double lambda = 0.01;
  double std = 1.0;
  ExplorationConfig exploration;

  void validate() const;
};

/// Rewards of K state-action columns: states (state_dim x K), actions (action_dim x K).
using BatchReward = std::function<Eigen::VectorXd(const Eigen::MatrixXd&, const Eigen::MatrixXd&)>;

/// Mean of the members' rewards at (s, a).
double ensemble_reward(const RewardModel& model, const Ensemble& ensemble, const State& s,
                       const Action& a);

/// Batched ensemble-mean reward. MLP members run in single precision.
BatchReward make_ensemble_reward(const RewardModel& model, const Ensemble& ensemble);
BatchReward make_ground_truth_reward(const EnvSpec& env);
/// Zero everywhere; planning under it averages unweighted noise.
BatchReward make_zero_reward();

/// w_k proportional to exp((R_k - max R) / lambda), normalized.
Eigen::VectorXd softmax_weights(const Eigen::VectorXd& returns, double lambda);

struct PlanResult {
  Eigen::MatrixXd nominal;  ///< action_dim x horizon, weighted average of the sampled sequences
  Action action;            ///< first column of `nominal`
  double mean_return = 0.0;
  double max_return = 0.0;
};

/// One MPPI update from `state` around `nominal` (action_dim x horizon).
/// Accepts a single sample, in which case the result is that perturbed sequence.
PlanResult mppi_plan(const EnvSpec& env, const BatchReward& reward_fn, const PlannerConfig& config,
                     const State& state, const Eigen::MatrixXd& nominal, Rng& rng);

struct PlannerStats {
  double mean_rollout_return = 0.0;
  double max_rollout_return = 0.0;
};

/// Receding-horizon episode. With `random_policy` actions are uniform in the
/// action box and the planner is not used.
Trajectory generate_trajectory(const EnvSpec& env, const BatchReward& reward_fn,
                               const PlannerConfig& config, int episode_length,
                               int iteration_index, Rng& rng, bool random_policy = false,
                               PlannerStats* stats = nullptr);

/// Exploration noise stddev at an iteration: scale * decay^iteration.
double exploration_scale(const PlannerConfig& config, int iteration_index);

}  // namespace hsbc
