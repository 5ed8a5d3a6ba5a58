#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "hsbc/baseline.hpp"
#include "hsbc/env.hpp"
#include "hsbc/oracle.hpp"
#include "hsbc/planner.hpp"
#include "hsbc/query.hpp"
#include "hsbc/reward.hpp"
#include "hsbc/sampler.hpp"

namespace hsbc {

struct RewardModelSpec {
  ModelKind kind = ModelKind::Linear;
  std::string features;  ///< empty means the environment's default feature map
  std::vector<int> hidden{32, 32};
  Activation activation = Activation::Tanh;
  bool squash = false;

  RewardModel build(const EnvSpec& env) const;
};

struct EvalConfig {
  int episodes = 5;
  int episode_length = 100;  // T_eval
  int every = 5;             ///< checkpoint cadence in iterations
  int correlation_trajectories = 5;
  int correlation_length = 200;
  std::uint64_t seed = 1000;  ///< evaluation episodes use seed, seed + 1, ...
};

struct RunConfig {
  std::string name = "pointmass";
  EnvSpec env = EnvSpec::make_pointmass();
  RewardModelSpec reward;
  SamplerConfig sampler;
  QueryConfig query;
  PlannerConfig planner;       ///< data collection
  PlannerConfig eval_planner;  ///< evaluation and oracle scoring
  OracleSpec oracle;
  BaselineConfig baseline;
  EvalConfig eval;
  double gamma = 0.0;
  int iterations = 20;               // I
  int bootstrap_iterations = 1;      ///< iterations whose trajectories come from a random policy
  int trajectories_per_iteration = 1;
  int partial_batch_retries = 3;     ///< extra trajectories generated before a best-effort fill
  int bootstrap_labels = 0;          ///< simulated labels answered before a human takes over
  /// Cartpole: pick I from the false-rate band (50 below 20%, else 80).
  bool iterations_from_false_rate = false;
  std::uint64_t seed = 0;
  std::string output_dir;

  void validate() const;
};

/// Named starting points: pointmass, pointmass-mlp, cartpole, cartpole-human.
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Reads a config object. A "preset" key selects the base; remaining keys
/// override it. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::string& path);

/// Switches the oracle to batch flipping at `rate` (rational at 0) and applies
/// the iteration band when enabled.
void apply_false_rate(RunConfig& config, double rate);

/// Iteration budget of the cartpole bands: 50 for rates below 20%, otherwise 80.
int cartpole_iterations_for_rate(double rate);

}  // namespace hsbc
