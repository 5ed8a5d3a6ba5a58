#include "hsbc/baseline.hpp"

#include <cmath>

#include "hsbc/adam.hpp"
#include "hsbc/errors.hpp"

namespace hsbc {

void BaselineConfig::validate() const {
  if (models < 1) throw ConfigError("baseline needs at least one model");
  if (!(alpha > 0.0)) throw ConfigError("baseline temperature must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("baseline learning rate must be positive");
  if (steps < 0) throw ConfigError("baseline step count must be nonnegative");
  if (!(weight_decay >= 0.0)) throw ConfigError("baseline weight decay must be nonnegative");
  if (!(disagreement_threshold >= 0.0 && disagreement_threshold < 1.0))
    throw ConfigError("baseline disagreement threshold must lie in [0, 1)");
}

double bt_probability(const RewardModel& model, const RewardParams& params, double alpha,
                      const Segment& seg0, const Segment& seg1) {
  return sigmoid(alpha * (segment_return(model, params, seg1) - segment_return(model, params, seg0)));
}

ObjectiveValue bradley_terry_loss(const CompiledHistory& history, double alpha,
                                  const RewardParams& params, bool with_gradient) {
  const auto pairs = history.pairs();
  return history.evaluate(
      params,
      [&](const Eigen::VectorXd& j, Eigen::VectorXd& coeff) {
        double loss = 0.0;
        for (const auto& p : pairs) {
          const double z = alpha * (j(p.seg1) - j(p.seg0));
          loss -= p.label == 1 ? log_sigmoid(z) : log_sigmoid(-z);
          const double dz = sigmoid(z) - p.label;
          coeff(p.seg1) += alpha * dz;
          coeff(p.seg0) -= alpha * dz;
        }
        return loss;
      },
      with_gradient);
}

Ensemble initialize_bt_models(const RewardModel& model, const BaselineConfig& config, Rng& rng) {
  Ensemble e;
  for (int k = 0; k < config.models; ++k) e.members.push_back(random_params(model, config.init_scale, rng));
  return e;
}

void train_bt_models(const CompiledHistory& history, const BaselineConfig& config,
                     Ensemble& models) {
  if (history.batch_count() == 0) return;
  for (auto& theta : models.members) {
    Adam adam(theta.size());
    for (int step = 0; step < config.steps; ++step) {
      const ObjectiveValue loss = bradley_terry_loss(history, config.alpha, theta);
      if (!std::isfinite(loss.value) || !loss.gradient.allFinite())
        throw NumericalError("Bradley-Terry loss became non-finite");
      adam.step(theta, -(loss.gradient + config.weight_decay * theta), config.learning_rate);
    }
  }
}

}  // namespace hsbc
