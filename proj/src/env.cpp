#include "hsbc/env.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "hsbc/errors.hpp"

namespace hsbc {

std::string to_string(EnvKind kind) { return kind == EnvKind::Cartpole ? "cartpole" : "pointmass"; }

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "cartpole") return EnvKind::Cartpole;
  if (name == "pointmass") return EnvKind::Pointmass;
  throw ConfigError("unknown environment '" + name + "'");
}

EnvSpec EnvSpec::make_pointmass() {
  EnvSpec env;
  env.kind = EnvKind::Pointmass;
  env.dt = 0.1;
  env.episode_length = 60;
  return env;
}

EnvSpec EnvSpec::make_cartpole() {
  EnvSpec env;
  env.kind = EnvKind::Cartpole;
  env.dt = 0.01;
  env.action_repeat = 5;
  env.episode_length = 100;
  return env;
}

int EnvSpec::state_dim() const { return kind == EnvKind::Cartpole ? 4 : 2; }

FeatureMap EnvSpec::feature_map() const {
  if (kind == EnvKind::Cartpole) return {FeatureMapId::CartpoleObservation, 4, 1};
  return {FeatureMapId::PointmassQuadratic, 2, 1};
}

void EnvSpec::validate() const {
  if (!(dt > 0.0)) throw ConfigError("environment dt must be positive");
  if (!std::isfinite(action_low) || !std::isfinite(action_high) || !(action_low < action_high))
    throw ConfigError("environment action bounds must be finite with low < high");
  if (!(init_noise >= 0.0)) throw ConfigError("init_noise must be nonnegative");
  if (episode_length < 1) throw ConfigError("episode_length must be positive");
  if (action_repeat < 1) throw ConfigError("action_repeat must be positive");
  if (kind == EnvKind::Cartpole) {
    const auto& c = cartpole;
    if (!(c.cart_mass > 0 && c.pole_mass > 0 && c.half_length > 0 && c.gravity >= 0))
      throw ConfigError("cartpole constants must be positive");
  }
}

State reset(const EnvSpec& env, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  auto jitter = [&] { return env.init_noise > 0.0 ? env.init_noise * noise(rng) : 0.0; };
  if (env.kind == EnvKind::Cartpole) {
    State s(4);
    s << jitter(), std::numbers::pi + jitter(), jitter(), jitter();
    return s;
  }
  State s(2);
  s << env.pointmass.start_position + jitter(), jitter();
  return s;
}

Action clamp_action(const EnvSpec& env, const Action& action) {
  return action.cwiseMax(env.action_low).cwiseMin(env.action_high);
}

namespace {

template <class S, class A>
void cartpole_step(const EnvSpec& env, S&& x, S&& phi, S&& xdot, S&& phidot, const A& u) {
  const auto& c = env.cartpole;
  const double total = c.cart_mass + c.pole_mass;
  const double ml = c.pole_mass * c.half_length;
  const Eigen::ArrayXXd sin_phi = phi.array().sin();
  const Eigen::ArrayXXd cos_phi = phi.array().cos();
  const Eigen::ArrayXXd temp =
      (c.force_scale * u.array() + ml * phidot.array().square() * sin_phi) / total;
  const Eigen::ArrayXXd phi_acc =
      (c.gravity * sin_phi - cos_phi * temp) /
      (c.half_length * (4.0 / 3.0 - c.pole_mass * cos_phi.square() / total));
  const Eigen::ArrayXXd x_acc = temp - ml * phi_acc * cos_phi / total;
  xdot.array() += env.dt * x_acc;
  phidot.array() += env.dt * phi_acc;
  x.array() += env.dt * xdot.array();
  phi.array() += env.dt * phidot.array();
}

}  // namespace

void step_batch(const EnvSpec& env, Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
  if (states.rows() != env.state_dim() || actions.rows() != env.action_dim() ||
      states.cols() != actions.cols())
    throw ConfigError("step_batch dimension mismatch");
  for (int k = 0; k < env.action_repeat; ++k) {
    if (env.kind == EnvKind::Cartpole) {
      cartpole_step(env, states.row(0), states.row(1), states.row(2), states.row(3), actions.row(0));
    } else {
      states.row(1).array() += env.dt * env.pointmass.accel_scale * actions.row(0).array();
      states.row(0).array() += env.dt * states.row(1).array();
    }
  }
}

State step(const EnvSpec& env, const State& state, const Action& action) {
  if (state.size() != env.state_dim() || action.size() != env.action_dim())
    throw ConfigError("step dimension mismatch");
  Eigen::MatrixXd s = state;
  const Eigen::MatrixXd a = clamp_action(env, action);
  step_batch(env, s, a);
  if (!s.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite state after step from [" << state.transpose() << "] with action ["
        << action.transpose() << "]";
    throw NumericalError(msg.str());
  }
  return s.col(0);
}

double ground_truth_reward(const EnvSpec& env, const State& state, const Action& action) {
  if (env.kind == EnvKind::Cartpole) {
    const double x = state(0), phi = state(1), xdot = state(2), a = action(0);
    const double upright = (std::cos(phi) + 1.0) / 2.0;
    const double middle = std::exp(-x * x);
    const double small_ctrl = (4.0 + std::exp(-4.0 * a * a)) / 5.0;
    const double small_vel = (1.0 + std::exp(-0.5 * xdot * xdot)) / 2.0;
    return upright * middle * small_ctrl * small_vel;
  }
  return env.pointmass.true_weights.dot(features(env, state, action));
}

Eigen::VectorXd ground_truth_reward_batch(const EnvSpec& env, const Eigen::MatrixXd& states,
                                          const Eigen::MatrixXd& actions) {
  if (env.kind == EnvKind::Cartpole) {
    const Eigen::ArrayXd x = states.row(0).transpose();
    const Eigen::ArrayXd phi = states.row(1).transpose();
    const Eigen::ArrayXd xdot = states.row(2).transpose();
    const Eigen::ArrayXd a = actions.row(0).transpose();
    const Eigen::ArrayXd upright = (phi.cos() + 1.0) / 2.0;
    const Eigen::ArrayXd middle = (-x.square()).exp();
    const Eigen::ArrayXd small_ctrl = (4.0 + (-4.0 * a.square()).exp()) / 5.0;
    const Eigen::ArrayXd small_vel = (1.0 + (-0.5 * xdot.square()).exp()) / 2.0;
    return (upright * middle * small_ctrl * small_vel).matrix();
  }
  return env.feature_map().batch(states, actions).transpose() * env.pointmass.true_weights;
}

Eigen::VectorXd features(const EnvSpec& env, const State& state, const Action& action) {
  return env.feature_map()(state, action);
}

double cartpole_energy(const EnvSpec& env, const State& s) {
  const auto& c = env.cartpole;
  const double xdot = s(2), phi = s(1), phidot = s(3), l = c.half_length;
  const double cart = 0.5 * c.cart_mass * xdot * xdot;
  // Pole centre of mass at (x + l sin phi, l cos phi); uniform rod inertia m l^2 / 3.
  const double vx = xdot + l * phidot * std::cos(phi);
  const double vy = -l * phidot * std::sin(phi);
  const double pole = 0.5 * c.pole_mass * (vx * vx + vy * vy) +
                      0.5 * (c.pole_mass * l * l / 3.0) * phidot * phidot;
  const double potential = c.pole_mass * c.gravity * l * (1.0 + std::cos(phi));
  return cart + pole + potential;
}

}  // namespace hsbc
