#include "hsbc/reward.hpp"

#include <cmath>
#include <sstream>

#include "hsbc/errors.hpp"

namespace hsbc {

void Trajectory::validate() const {
  if (actions.empty()) throw InvalidInput("trajectory has no actions");
  if (states.size() != actions.size() + 1) {
    std::ostringstream msg;
    msg << "trajectory has " << states.size() << " states for " << actions.size() << " actions";
    throw InvalidInput(msg.str());
  }
  for (const auto& s : states)
    if (!s.allFinite()) throw InvalidInput("trajectory contains a non-finite state");
  for (const auto& a : actions)
    if (!a.allFinite()) throw InvalidInput("trajectory contains a non-finite action");
}

// ---------------------------------------------------------------------------
// Feature maps

FeatureMap::FeatureMap(FeatureMapId id, int state_dim, int action_dim)
    : id_(id), state_dim_(state_dim), action_dim_(action_dim) {
  if (state_dim <= 0 || action_dim <= 0) throw ConfigError("feature map needs positive dims");
  switch (id) {
    case FeatureMapId::Raw:
      break;
    case FeatureMapId::PointmassQuadratic:
      if (state_dim != 2 || action_dim != 1)
        throw ConfigError("pointmass feature map expects state_dim=2, action_dim=1");
      break;
    case FeatureMapId::CartpoleObservation:
      if (state_dim != 4 || action_dim != 1)
        throw ConfigError("cartpole feature map expects state_dim=4, action_dim=1");
      break;
  }
}

FeatureMap FeatureMap::from_name(const std::string& name, int state_dim, int action_dim) {
  if (name == "raw") return {FeatureMapId::Raw, state_dim, action_dim};
  if (name == "pointmass_quadratic") return {FeatureMapId::PointmassQuadratic, state_dim, action_dim};
  if (name == "cartpole_observation")
    return {FeatureMapId::CartpoleObservation, state_dim, action_dim};
  throw ConfigError("unknown feature map '" + name + "'");
}

std::string FeatureMap::name() const {
  switch (id_) {
    case FeatureMapId::Raw: return "raw";
    case FeatureMapId::PointmassQuadratic: return "pointmass_quadratic";
    case FeatureMapId::CartpoleObservation: return "cartpole_observation";
  }
  return "raw";
}

int FeatureMap::output_dim() const {
  switch (id_) {
    case FeatureMapId::Raw: return state_dim_ + action_dim_;
    case FeatureMapId::PointmassQuadratic: return 3;
    case FeatureMapId::CartpoleObservation: return 6;
  }
  return 0;
}

Eigen::VectorXd FeatureMap::operator()(const State& s, const Action& a) const {
  if (s.size() != state_dim_ || a.size() != action_dim_) {
    std::ostringstream msg;
    msg << "feature map '" << name() << "' expects (" << state_dim_ << ", " << action_dim_
        << ") inputs, got (" << s.size() << ", " << a.size() << ")";
    throw ConfigError(msg.str());
  }
  Eigen::VectorXd out(output_dim());
  switch (id_) {
    case FeatureMapId::Raw:
      out << s, a;
      break;
    case FeatureMapId::PointmassQuadratic:
      out << -s(0) * s(0), -s(1) * s(1), -a(0) * a(0);
      break;
    case FeatureMapId::CartpoleObservation:
      out << s(0), std::sin(s(1)), std::cos(s(1)), s(2), s(3), a(0);
      break;
  }
  return out;
}

Eigen::MatrixXd FeatureMap::batch(const Eigen::MatrixXd& states,
                                  const Eigen::MatrixXd& actions) const {
  if (states.rows() != state_dim_ || actions.rows() != action_dim_ ||
      states.cols() != actions.cols())
    throw ConfigError("feature map batch has mismatched dimensions");
  const Eigen::Index k = states.cols();
  Eigen::MatrixXd out(output_dim(), k);
  switch (id_) {
    case FeatureMapId::Raw:
      out.topRows(state_dim_) = states;
      out.bottomRows(action_dim_) = actions;
      break;
    case FeatureMapId::PointmassQuadratic:
      out.row(0) = -states.row(0).array().square();
      out.row(1) = -states.row(1).array().square();
      out.row(2) = -actions.row(0).array().square();
      break;
    case FeatureMapId::CartpoleObservation:
      out.row(0) = states.row(0);
      out.row(1) = states.row(1).array().sin();
      out.row(2) = states.row(1).array().cos();
      out.row(3) = states.row(2);
      out.row(4) = states.row(3);
      out.row(5) = actions.row(0);
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Models

RewardModel RewardModel::linear(FeatureMap features) {
  RewardModel m;
  m.kind = ModelKind::Linear;
  m.features = features;
  return m;
}

RewardModel RewardModel::mlp(FeatureMap features, std::vector<int> hidden, Activation activation,
                             bool squash) {
  RewardModel m;
  m.kind = ModelKind::Mlp;
  m.features = features;
  m.hidden = std::move(hidden);
  m.activation = activation;
  m.squash = squash;
  m.validate();
  return m;
}

std::vector<int> RewardModel::layer_sizes() const {
  std::vector<int> sizes{input_dim()};
  if (kind == ModelKind::Mlp) sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

int RewardModel::param_count() const {
  if (kind == ModelKind::Linear) return input_dim();
  const auto sizes = layer_sizes();
  int n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l + 1] * sizes[l] + sizes[l + 1];
  return n;
}

void RewardModel::validate() const {
  if (kind == ModelKind::Mlp) {
    if (hidden.empty()) throw ConfigError("mlp reward model needs at least one hidden layer");
    for (int h : hidden)
      if (h <= 0) throw ConfigError("mlp hidden layer widths must be positive");
  }
}

void RewardModel::check_params(const RewardParams& params) const {
  if (params.size() != param_count()) {
    std::ostringstream msg;
    msg << "reward params have dimension " << params.size() << ", model expects "
        << param_count();
    throw ConfigError(msg.str());
  }
}

namespace {

template <class Derived>
void activate(const RewardModel& model, Eigen::MatrixBase<Derived>& z) {
  if (model.activation == Activation::Tanh)
    z.derived() = z.array().tanh().matrix();
  else
    z.derived() = z.array().max(0.0).matrix();
}

}  // namespace

BlockEvaluation::BlockEvaluation(const RewardModel& model, const RewardParams& params,
                                 const Eigen::MatrixXd& inputs)
    : model_(model), params_(params), inputs_(inputs) {
  model.check_params(params);
  if (inputs.rows() != model.input_dim()) throw ConfigError("input block has wrong row count");

  if (model.kind == ModelKind::Linear) {
    rewards_ = inputs.transpose() * params;
    return;
  }

  const auto sizes = model.layer_sizes();
  pre_.reserve(sizes.size());
  post_.reserve(sizes.size());
  const double* p = params.data();
  const Eigen::MatrixXd* x = &inputs;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    Eigen::Map<const Eigen::MatrixXd> w(p, out, in);
    Eigen::Map<const Eigen::VectorXd> b(p + out * in, out);
    p += out * in + out;
    Eigen::MatrixXd z = w * *x;
    z.colwise() += b;
    if (l + 2 == sizes.size()) {
      rewards_ = z.row(0).transpose();
      if (model.squash) rewards_ = rewards_.array().tanh();
    } else {
      pre_.push_back(z);
      activate(model, z);
      post_.push_back(std::move(z));
      x = &post_.back();
    }
  }
}

Eigen::VectorXd BlockEvaluation::gradient(const Eigen::VectorXd& weights) const {
  if (weights.size() != inputs_.cols()) throw ConfigError("gradient weights length mismatch");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model_.param_count());

  if (model_.kind == ModelKind::Linear) {
    grad = inputs_ * weights;
    return grad;
  }

  const auto sizes = model_.layer_sizes();
  const std::size_t layers = sizes.size() - 1;
  std::vector<int> offsets(layers);
  int off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    off += sizes[l + 1] * sizes[l] + sizes[l + 1];
  }

  // Upstream gradient wrt the scalar pre-squash output, one entry per column.
  Eigen::RowVectorXd g = weights.transpose();
  if (model_.squash) g = g.array() * (1.0 - rewards_.transpose().array().square());
  Eigen::MatrixXd delta = g;  // (out x K) at the current layer

  for (std::size_t l = layers; l-- > 0;) {
    const int in = sizes[l], out = sizes[l + 1];
    const Eigen::MatrixXd& x = (l == 0) ? inputs_ : post_[l - 1];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets[l], out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets[l] + out * in, out);
    gw.noalias() = delta * x.transpose();
    gb = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + offsets[l], out, in);
    Eigen::MatrixXd back = w.transpose() * delta;
    if (model_.activation == Activation::Tanh)
      back.array() *= 1.0 - post_[l - 1].array().square();
    else
      back.array() *= (pre_[l - 1].array() > 0.0).cast<double>();
    delta = std::move(back);
  }
  return grad;
}

Eigen::MatrixXd encode(const RewardModel& model, const Trajectory& traj) {
  Eigen::MatrixXd x(model.input_dim(), static_cast<Eigen::Index>(traj.length()));
  for (std::size_t t = 0; t < traj.length(); ++t)
    x.col(static_cast<Eigen::Index>(t)) = model.features(traj.states[t], traj.actions[t]);
  return x;
}

double reward(const RewardModel& model, const RewardParams& params, const State& s,
              const Action& a) {
  model.check_params(params);
  const Eigen::MatrixXd x = model.features(s, a);
  return BlockEvaluation(model, params, x).rewards()(0);
}

double trajectory_return(const RewardModel& model, const RewardParams& params,
                         const Trajectory& traj) {
  if (traj.actions.empty()) throw InvalidInput("trajectory_return on an empty trajectory");
  if (traj.states.size() != traj.actions.size() + 1)
    throw InvalidInput("trajectory states/actions length mismatch");
  const Eigen::MatrixXd x = encode(model, traj);
  return BlockEvaluation(model, params, x).rewards().sum();
}

double preference_gap(const RewardModel& model, const RewardParams& params, const Segment& seg0,
                      const Segment& seg1, int label) {
  if (label != 0 && label != 1) throw InvalidInput("preference label must be 0 or 1");
  const double sign = 1.0 - 2.0 * label;
  return sign * (segment_return(model, params, seg0) - segment_return(model, params, seg1));
}

Eigen::VectorXd reward_param_gradient(const RewardModel& model, const RewardParams& params,
                                      const State& s, const Action& a) {
  model.check_params(params);
  const Eigen::MatrixXd x = model.features(s, a);
  BlockEvaluation eval(model, params, x);
  return eval.gradient(Eigen::VectorXd::Ones(1));
}

RewardParams random_params(const RewardModel& model, double scale, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RewardParams theta(model.param_count());
  if (model.kind == ModelKind::Linear) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = scale * normal(rng);
    return theta;
  }
  const auto sizes = model.layer_sizes();
  const double gain = model.activation == Activation::Relu ? 2.0 : 1.0;
  Eigen::Index k = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const double stddev = scale * std::sqrt(gain / in);
    for (int i = 0; i < out * in; ++i) theta(k++) = stddev * normal(rng);
    for (int i = 0; i < out; ++i) theta(k++) = 0.0;
  }
  return theta;
}

}  // namespace hsbc
