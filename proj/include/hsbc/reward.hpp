#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hsbc {

using State = Eigen::VectorXd;
using Action = Eigen::VectorXd;
/// Flattened reward-model parameters (theta).
using RewardParams = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// s_0, a_0, ..., a_{T-1}, s_T.
struct Trajectory {
  std::vector<State> states;
  std::vector<Action> actions;

  std::size_t length() const { return actions.size(); }
  /// Throws InvalidInput on a length mismatch or non-finite entries.
  void validate() const;
};

/// A fixed-length window of a parent trajectory.
struct Segment {
  Trajectory data;
  std::uint64_t source_id = 0;
  std::size_t offset = 0;

  std::size_t length() const { return data.length(); }
};

enum class FeatureMapId {
  Raw,                  ///< (s, a) concatenated
  PointmassQuadratic,   ///< (-p^2, -v^2, -a^2)
  CartpoleObservation,  ///< (x, sin phi, cos phi, xdot, phidot, a)
};

/// Deterministic map from (state, action) to the reward model's input vector.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(FeatureMapId id, int state_dim, int action_dim);

  static FeatureMap from_name(const std::string& name, int state_dim, int action_dim);

  FeatureMapId id() const { return id_; }
  std::string name() const;
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int output_dim() const;

  Eigen::VectorXd operator()(const State& s, const Action& a) const;
  /// Column-wise over a batch: states (state_dim x K), actions (action_dim x K).
  Eigen::MatrixXd batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;

 private:
  FeatureMapId id_ = FeatureMapId::Raw;
  int state_dim_ = 1;
  int action_dim_ = 1;
};

enum class ModelKind { Linear, Mlp };
enum class Activation { Tanh, Relu };

/// Architecture descriptor of r_theta(s, a). Parameters live separately in RewardParams.
///
/// MLP parameter layout: for each layer in order, the weight matrix (out x in,
/// column-major) followed by its bias vector. The last layer has one output.
struct RewardModel {
  ModelKind kind = ModelKind::Linear;
  FeatureMap features;
  std::vector<int> hidden;
  Activation activation = Activation::Tanh;
  bool squash = false;  ///< tanh on the scalar output

  static RewardModel linear(FeatureMap features);
  static RewardModel mlp(FeatureMap features, std::vector<int> hidden = {32, 32},
                         Activation activation = Activation::Tanh, bool squash = true);

  int input_dim() const { return features.output_dim(); }
  int param_count() const;
  /// Layer widths from input to the scalar output, e.g. {6, 32, 32, 1}.
  std::vector<int> layer_sizes() const;
  void validate() const;
  void check_params(const RewardParams& params) const;
};

double reward(const RewardModel& model, const RewardParams& params, const State& s, const Action& a);

/// Sum of rewards over t = 0..T-1.
double trajectory_return(const RewardModel& model, const RewardParams& params,
                         const Trajectory& traj);

inline double segment_return(const RewardModel& model, const RewardParams& params,
                             const Segment& seg) {
  return trajectory_return(model, params, seg.data);
}

/// f(theta) = (1 - 2 label) (J(seg0) - J(seg1)).
double preference_gap(const RewardModel& model, const RewardParams& params, const Segment& seg0,
                      const Segment& seg1, int label);

/// d r_theta(s, a) / d theta.
Eigen::VectorXd reward_param_gradient(const RewardModel& model, const RewardParams& params,
                                      const State& s, const Action& a);

/// Feature matrix (input_dim x T) of the state-action pairs of a trajectory.
Eigen::MatrixXd encode(const RewardModel& model, const Trajectory& traj);

/// Forward pass over a block of inputs, retained for backpropagation.
class BlockEvaluation {
 public:
  BlockEvaluation(const RewardModel& model, const RewardParams& params,
                  const Eigen::MatrixXd& inputs);

  /// One reward per input column.
  const Eigen::VectorXd& rewards() const { return rewards_; }

  /// sum_t weights[t] * d r_t / d theta.
  Eigen::VectorXd gradient(const Eigen::VectorXd& weights) const;

 private:
  const RewardModel& model_;
  const RewardParams& params_;
  const Eigen::MatrixXd& inputs_;
  std::vector<Eigen::MatrixXd> pre_;   // pre-activations per hidden layer
  std::vector<Eigen::MatrixXd> post_;  // activations per hidden layer
  Eigen::VectorXd rewards_;
};

/// Draws one parameter vector: fan-in scaled normal weights and zero biases for
/// MLPs, standard normal for linear models, all multiplied by `scale`.
RewardParams random_params(const RewardModel& model, double scale, Rng& rng);

}  // namespace hsbc
