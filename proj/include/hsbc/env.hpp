#pragma once

#include <string>

#include <Eigen/Dense>

#include "hsbc/reward.hpp"

namespace hsbc {

enum class EnvKind { Pointmass, Cartpole };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

struct CartpoleConstants {
  double cart_mass = 1.0;    // kg
  double pole_mass = 0.1;    // kg
  double half_length = 0.5;  // m
  double gravity = 9.81;     // m/s^2
  double force_scale = 10.0; // N per unit of normalized action
};

/// Frictionless double integrator regulated towards the origin.
struct PointmassConstants {
  double accel_scale = 1.0;     // m/s^2 per unit action
  double start_position = 0.0;  // m, mean initial position
  /// Weights of (-p^2, -v^2, -a^2) in the ground-truth reward.
  Eigen::Vector3d true_weights{1.0, 0.5, 0.25};
};

/// Cartpole state: (x, phi, xdot, phidot) with phi = 0 upright, phi = pi hanging.
/// Pointmass state: (p, v). Actions are normalized to [action_low, action_high].
struct EnvSpec {
  EnvKind kind = EnvKind::Pointmass;
  double dt = 0.1;       ///< physics timestep in seconds
  int action_repeat = 1;  ///< physics steps per control step
  double action_low = -1.0;
  double action_high = 1.0;
  double init_noise = 0.01;
  int episode_length = 60;
  CartpoleConstants cartpole;
  PointmassConstants pointmass;

  static EnvSpec make_pointmass();
  static EnvSpec make_cartpole();

  int state_dim() const;
  int action_dim() const { return 1; }
  FeatureMap feature_map() const;
  double control_dt() const { return dt * action_repeat; }
  void validate() const;
};

State reset(const EnvSpec& env, Rng& rng);

/// One control step: `action_repeat` semi-implicit Euler steps holding the
/// action, which is clamped to the action box.
State step(const EnvSpec& env, const State& state, const Action& action);

/// Steps K states in place: states (state_dim x K), actions (action_dim x K), pre-clamped.
void step_batch(const EnvSpec& env, Eigen::MatrixXd& states, const Eigen::MatrixXd& actions);

Action clamp_action(const EnvSpec& env, const Action& action);

double ground_truth_reward(const EnvSpec& env, const State& state, const Action& action);

/// Ground-truth rewards of K state-action columns.
Eigen::VectorXd ground_truth_reward_batch(const EnvSpec& env, const Eigen::MatrixXd& states,
                                          const Eigen::MatrixXd& actions);

/// The environment's default feature map applied to (state, action).
Eigen::VectorXd features(const EnvSpec& env, const State& state, const Action& action);

/// Total mechanical energy of an unactuated cartpole, zero with the pole hanging at rest.
double cartpole_energy(const EnvSpec& env, const State& state);

}  // namespace hsbc
