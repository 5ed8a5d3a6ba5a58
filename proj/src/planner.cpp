#include "hsbc/planner.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "hsbc/errors.hpp"

namespace hsbc {

void PlannerConfig::validate() const {
  if (num_samples < 2) throw ConfigError("planner needs at least two samples");
  if (horizon < 1) throw ConfigError("planner horizon must be positive");
  if (!(lambda > 0.0)) throw ConfigError("planner lambda must be positive");
  if (!(std > 0.0)) throw ConfigError("planner std must be positive");
  if (!(exploration.scale >= 0.0)) throw ConfigError("exploration scale must be nonnegative");
  if (!(exploration.decay > 0.0 && exploration.decay <= 1.0))
    throw ConfigError("exploration decay must lie in (0, 1]");
  if (!(exploration.probability >= 0.0 && exploration.probability <= 1.0))
    throw ConfigError("exploration probability must lie in [0, 1]");
}

double ensemble_reward(const RewardModel& model, const Ensemble& ensemble, const State& s,
                       const Action& a) {
  if (ensemble.empty()) throw InvalidInput("ensemble_reward on an empty ensemble");
  double total = 0.0;
  for (const auto& theta : ensemble.members) total += reward(model, theta, s, a);
  return total / static_cast<double>(ensemble.size());
}

namespace {

struct FloatLayer {
  Eigen::MatrixXf w;
  Eigen::VectorXf b;
};

std::vector<FloatLayer> to_float_layers(const RewardModel& model, const RewardParams& theta) {
  const auto sizes = model.layer_sizes();
  std::vector<FloatLayer> layers;
  const double* p = theta.data();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    FloatLayer layer;
    layer.w = Eigen::Map<const Eigen::MatrixXd>(p, out, in).cast<float>();
    layer.b = Eigen::Map<const Eigen::VectorXd>(p + out * in, out).cast<float>();
    p += out * in + out;
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

BatchReward make_ensemble_reward(const RewardModel& model, const Ensemble& ensemble) {
  if (ensemble.empty()) throw InvalidInput("ensemble reward needs at least one member");
  for (const auto& theta : ensemble.members) model.check_params(theta);

  if (model.kind == ModelKind::Linear) {
    // Linear in theta: the mean reward is the reward of the mean parameters.
    RewardParams mean = RewardParams::Zero(model.param_count());
    for (const auto& theta : ensemble.members) mean += theta;
    mean /= static_cast<double>(ensemble.size());
    return [features = model.features, mean](const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
      return Eigen::VectorXd(features.batch(s, a).transpose() * mean);
    };
  }

  auto members = std::make_shared<std::vector<std::vector<FloatLayer>>>();
  for (const auto& theta : ensemble.members) members->push_back(to_float_layers(model, theta));
  const bool relu = model.activation == Activation::Relu;
  const bool squash = model.squash;
  return [features = model.features, members, relu, squash](const Eigen::MatrixXd& s,
                                                            const Eigen::MatrixXd& a) {
    const Eigen::MatrixXf x = features.batch(s, a).cast<float>();
    Eigen::ArrayXf total = Eigen::ArrayXf::Zero(x.cols());
    Eigen::MatrixXf h, z;
    for (const auto& layers : *members) {
      const Eigen::MatrixXf* in = &x;
      for (std::size_t l = 0; l < layers.size(); ++l) {
        z.noalias() = layers[l].w * *in;
        z.colwise() += layers[l].b;
        if (l + 1 == layers.size()) break;
        h = relu ? Eigen::MatrixXf(z.array().max(0.0f).matrix())
                 : Eigen::MatrixXf(z.array().tanh().matrix());
        in = &h;
      }
      if (squash)
        total += z.row(0).transpose().array().tanh();
      else
        total += z.row(0).transpose().array();
    }
    total /= static_cast<float>(members->size());
    return Eigen::VectorXd(total.cast<double>().matrix());
  };
}

BatchReward make_ground_truth_reward(const EnvSpec& env) {
  return [env](const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
    return ground_truth_reward_batch(env, s, a);
  };
}

BatchReward make_zero_reward() {
  return [](const Eigen::MatrixXd& s, const Eigen::MatrixXd&) {
    return Eigen::VectorXd(Eigen::VectorXd::Zero(s.cols()));
  };
}

Eigen::VectorXd softmax_weights(const Eigen::VectorXd& returns, double lambda) {
  if (!(lambda > 0.0)) throw InvalidInput("softmax temperature must be positive");
  const double top = returns.maxCoeff();
  Eigen::VectorXd w = ((returns.array() - top) / lambda).exp().matrix();
  return w / w.sum();
}

PlanResult mppi_plan(const EnvSpec& env, const BatchReward& reward_fn, const PlannerConfig& config,
                     const State& state, const Eigen::MatrixXd& nominal, Rng& rng) {
  const int adim = env.action_dim();
  const int h = config.horizon;
  const int k = config.num_samples;
  if (k < 1 || h < 1) throw ConfigError("planner needs a positive sample count and horizon");
  if (nominal.rows() != adim || nominal.cols() != h)
    throw InvalidInput("nominal action sequence must be action_dim x horizon");
  if (state.size() != env.state_dim()) throw InvalidInput("planner state has the wrong dimension");

  // sequences[t] holds the actions of every sample at step t (action_dim x K).
  std::normal_distribution<double> normal(0.0, config.std);
  std::vector<Eigen::MatrixXd> sequences(static_cast<std::size_t>(h), Eigen::MatrixXd(adim, k));
  for (int j = 0; j < k; ++j)
    for (int t = 0; t < h; ++t)
      for (int d = 0; d < adim; ++d) sequences[t](d, j) = nominal(d, t) + normal(rng);
  for (auto& u : sequences) u = u.cwiseMax(env.action_low).cwiseMin(env.action_high);

  Eigen::MatrixXd states = state.replicate(1, k);
  Eigen::VectorXd returns = Eigen::VectorXd::Zero(k);
  for (int t = 0; t < h; ++t) {
    returns += reward_fn(states, sequences[t]);
    step_batch(env, states, sequences[t]);
  }

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  int finite = 0;
  double sum = 0.0;
  for (int j = 0; j < k; ++j) {
    if (std::isfinite(returns(j)) && states.col(j).allFinite()) {
      ++finite;
      sum += returns(j);
    } else {
      returns(j) = kNegInf;
    }
  }
  if (finite == 0) throw PlanningError("every MPPI rollout produced non-finite values");

  const Eigen::VectorXd w = softmax_weights(returns, config.lambda);
  PlanResult out;
  out.nominal.resize(adim, h);
  for (int t = 0; t < h; ++t) out.nominal.col(t) = sequences[t] * w;
  out.action = out.nominal.col(0);
  out.mean_return = sum / finite;
  out.max_return = returns.maxCoeff();
  return out;
}

double exploration_scale(const PlannerConfig& config, int iteration_index) {
  const double base = config.exploration.scale > 0.0 ? config.exploration.scale : config.std;
  return base * std::pow(config.exploration.decay, iteration_index);
}

Trajectory generate_trajectory(const EnvSpec& env, const BatchReward& reward_fn,
                               const PlannerConfig& config, int episode_length,
                               int iteration_index, Rng& rng, bool random_policy,
                               PlannerStats* stats) {
  if (episode_length < 1) throw InvalidInput("episode length must be positive");
  const int adim = env.action_dim();
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(episode_length) + 1);
  traj.actions.reserve(static_cast<std::size_t>(episode_length));
  traj.states.push_back(reset(env, rng));

  std::uniform_real_distribution<double> uniform(env.action_low, env.action_high);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double explore = exploration_scale(config, iteration_index);
  Eigen::MatrixXd nominal = Eigen::MatrixXd::Zero(adim, config.horizon);
  double mean_sum = 0.0, max_return = -std::numeric_limits<double>::infinity();

  for (int t = 0; t < episode_length; ++t) {
    Action a(adim);
    if (random_policy) {
      for (int d = 0; d < adim; ++d) a(d) = uniform(rng);
    } else {
      PlanResult plan = mppi_plan(env, reward_fn, config, traj.states.back(), nominal, rng);
      a = plan.action;
      mean_sum += plan.mean_return;
      max_return = std::max(max_return, plan.max_return);
      nominal.leftCols(config.horizon - 1) = plan.nominal.rightCols(config.horizon - 1);
      nominal.col(config.horizon - 1).setZero();
      if (config.exploration.enabled && coin(rng) < config.exploration.probability)
        for (int d = 0; d < adim; ++d) a(d) += explore * normal(rng);
    }
    a = clamp_action(env, a);
    traj.states.push_back(step(env, traj.states.back(), a));
    traj.actions.push_back(std::move(a));
  }
  if (stats) {
    stats->mean_rollout_return = random_policy ? 0.0 : mean_sum / episode_length;
    stats->max_rollout_return = random_policy ? 0.0 : max_return;
  }
  return traj;
}

}  // namespace hsbc
