#include "hsbc/cut.hpp"

#include <cmath>
#include <sstream>

#include "hsbc/errors.hpp"

namespace hsbc {

std::string to_string(LabelSource source) {
  return source == LabelSource::Human ? "human" : "simulated";
}

LabelSource label_source_from_string(const std::string& name) {
  if (name == "human") return LabelSource::Human;
  if (name == "simulated") return LabelSource::Simulated;
  throw InvalidInput("unknown label source '" + name + "'");
}

BatchHistory::BatchHistory(double gamma) : gamma_(gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("conservativeness must lie in [0, 1]");
}

void BatchHistory::append(PreferenceBatch batch) {
  if (batch.records.empty()) throw InvalidInput("cannot append an empty preference batch");
  if (batch.batch_index != static_cast<int>(batches_.size())) {
    std::ostringstream msg;
    msg << "batch index " << batch.batch_index << " appended at position " << batches_.size();
    throw InvalidInput(msg.str());
  }
  batches_.push_back(std::move(batch));
}

void SmoothingConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("smoothing alpha and beta must be > 0");
  if (!(nu > 0.0 && nu <= 1.0)) throw ConfigError("smoothing nu must lie in (0, 1]");
}

int heaviside(double x) { return x >= 0.0 ? 1 : 0; }

int votes(const RewardModel& model, const PreferenceBatch& batch, const RewardParams& params) {
  int count = 0;
  for (const auto& rec : batch.records)
    count += heaviside(preference_gap(model, params, rec.seg0, rec.seg1, rec.label));
  return count;
}

double cut_threshold(int batch_size, double gamma) {
  if (batch_size < 1) throw InvalidInput("cut_threshold needs a positive batch size");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("gamma must lie in [0, 1]");
  // Absorbs products such as (1 - gamma) * N landing one ulp below an integer.
  return std::floor((1.0 - gamma) * batch_size + 1e-9) - 0.5;
}

bool in_cut(const RewardModel& model, const PreferenceBatch& batch, double gamma,
            const RewardParams& params) {
  if (batch.records.empty()) throw InvalidInput("in_cut on an empty batch");
  const int n = static_cast<int>(batch.records.size());
  return votes(model, batch, params) > cut_threshold(n, gamma);
}

bool in_hypothesis_space(const RewardModel& model, const BatchHistory& history,
                         const RewardParams& params) {
  for (const auto& batch : history.batches())
    if (!in_cut(model, batch, history.gamma(), params)) return false;
  return true;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

double smoothed_cut_indicator(const std::vector<double>& gaps, double gamma,
                              const SmoothingConfig& smoothing) {
  smoothing.validate();
  double soft_votes = 0.0;
  for (double f : gaps) soft_votes += sigmoid(smoothing.alpha * f);
  const double n = static_cast<double>(gaps.size());
  return sigmoid(smoothing.beta * (soft_votes - smoothing.nu * (1.0 - gamma) * n));
}

double smoothed_cut_indicator(const RewardModel& model, const PreferenceBatch& batch,
                              double gamma, const SmoothingConfig& smoothing,
                              const RewardParams& params) {
  std::vector<double> gaps;
  gaps.reserve(batch.records.size());
  for (const auto& rec : batch.records)
    gaps.push_back(preference_gap(model, params, rec.seg0, rec.seg1, rec.label));
  return smoothed_cut_indicator(gaps, gamma, smoothing);
}

ObjectiveValue smoothed_log_objective(const RewardModel& model, const BatchHistory& history,
                                      const SmoothingConfig& smoothing,
                                      const RewardParams& params) {
  if (history.empty()) throw InvalidInput("smoothed_log_objective needs a nonempty history");
  return CompiledHistory(model, history).objective(params, smoothing);
}

// ---------------------------------------------------------------------------

CompiledHistory::CompiledHistory(const RewardModel& model, double gamma)
    : model_(model), gamma_(gamma), inputs_(model.input_dim(), 0),
      feature_sums_(model.input_dim(), 0) {}

CompiledHistory::CompiledHistory(const RewardModel& model, const BatchHistory& history)
    : CompiledHistory(model, history.gamma()) {
  for (const auto& batch : history.batches()) append(batch);
}

int CompiledHistory::intern(const Segment& seg) {
  const SegmentKey key{seg.source_id, seg.offset, seg.length()};
  const Eigen::MatrixXd x = encode(model_, seg.data);
  const auto [lo, hi] = index_.equal_range(key);
  for (auto it = lo; it != hi; ++it) {
    const int id = it->second;
    if (inputs_.middleCols(starts_[id], lengths_[id]) == x) return id;
  }
  const int id = static_cast<int>(starts_.size());
  starts_.push_back(inputs_.cols());
  lengths_.push_back(x.cols());
  inputs_.conservativeResize(Eigen::NoChange, inputs_.cols() + x.cols());
  inputs_.rightCols(x.cols()) = x;
  feature_sums_.conservativeResize(Eigen::NoChange, feature_sums_.cols() + 1);
  feature_sums_.col(id) = x.rowwise().sum();
  index_.emplace(key, id);
  return id;
}

void CompiledHistory::append(const PreferenceBatch& batch) {
  if (batch.records.empty()) throw InvalidInput("cannot compile an empty batch");
  CompiledBatch compiled;
  for (const auto& rec : batch.records) {
    if (rec.label != 0 && rec.label != 1) throw InvalidInput("preference label must be 0 or 1");
    compiled.records.push_back({intern(rec.seg0), intern(rec.seg1), 1.0 - 2.0 * rec.label});
  }
  batches_.push_back(std::move(compiled));
}

Eigen::VectorXd CompiledHistory::segment_returns(const RewardParams& params) const {
  model_.check_params(params);
  if (model_.kind == ModelKind::Linear) return feature_sums_.transpose() * params;
  BlockEvaluation eval(model_, params, inputs_);
  Eigen::VectorXd returns(starts_.size());
  for (std::size_t id = 0; id < starts_.size(); ++id)
    returns(static_cast<Eigen::Index>(id)) = eval.rewards().segment(starts_[id], lengths_[id]).sum();
  return returns;
}

std::vector<int> CompiledHistory::votes(const RewardParams& params) const {
  const Eigen::VectorXd j = segment_returns(params);
  std::vector<int> out;
  out.reserve(batches_.size());
  for (const auto& batch : batches_) {
    int v = 0;
    for (const auto& r : batch.records) v += heaviside(r.sign * (j(r.seg0) - j(r.seg1)));
    out.push_back(v);
  }
  return out;
}

bool CompiledHistory::contains(const RewardParams& params) const {
  const auto v = votes(params);
  for (std::size_t k = 0; k < batches_.size(); ++k)
    if (!(v[k] > cut_threshold(static_cast<int>(batches_[k].records.size()), gamma_)))
      return false;
  return true;
}

ObjectiveValue CompiledHistory::evaluate(const RewardParams& params, const ReturnsObjective& fn,
                                         bool with_gradient) const {
  model_.check_params(params);
  const bool linear = model_.kind == ModelKind::Linear;
  std::optional<BlockEvaluation> eval;
  Eigen::VectorXd j(starts_.size());
  if (linear) {
    j = feature_sums_.transpose() * params;
  } else {
    eval.emplace(model_, params, inputs_);
    for (std::size_t id = 0; id < starts_.size(); ++id)
      j(static_cast<Eigen::Index>(id)) = eval->rewards().segment(starts_[id], lengths_[id]).sum();
  }

  Eigen::VectorXd seg_coeff = Eigen::VectorXd::Zero(j.size());
  ObjectiveValue out;
  out.value = fn(j, seg_coeff);
  if (!with_gradient) return out;
  if (linear) {
    out.gradient = feature_sums_ * seg_coeff;
  } else {
    Eigen::VectorXd step_weights(inputs_.cols());
    for (std::size_t id = 0; id < starts_.size(); ++id)
      step_weights.segment(starts_[id], lengths_[id]).setConstant(seg_coeff(static_cast<Eigen::Index>(id)));
    out.gradient = eval->gradient(step_weights);
  }
  return out;
}

std::vector<CompiledHistory::Pair> CompiledHistory::pairs() const {
  std::vector<Pair> out;
  for (const auto& batch : batches_)
    for (const auto& r : batch.records) out.push_back({r.seg0, r.seg1, r.sign < 0.0 ? 1 : 0});
  return out;
}

ObjectiveValue CompiledHistory::objective(const RewardParams& params,
                                          const SmoothingConfig& smoothing,
                                          bool with_gradient) const {
  if (batches_.empty()) throw InvalidInput("objective of an empty history");
  return evaluate(
      params,
      [&](const Eigen::VectorXd& j, Eigen::VectorXd& seg_coeff) {
        double value = 0.0;
        for (const auto& batch : batches_) {
          const double n = static_cast<double>(batch.records.size());
          double soft_votes = 0.0;
          for (const auto& r : batch.records)
            soft_votes += sigmoid(smoothing.alpha * r.sign * (j(r.seg0) - j(r.seg1)));
          const double z = smoothing.beta * (soft_votes - smoothing.nu * (1.0 - gamma_) * n);
          value += log_sigmoid(z);
          // d log sigma(z) / dz = sigma(-z)
          const double outer = smoothing.beta * sigmoid(-z);
          for (const auto& r : batch.records) {
            const double s = sigmoid(smoothing.alpha * r.sign * (j(r.seg0) - j(r.seg1)));
            const double c = outer * smoothing.alpha * s * (1.0 - s) * r.sign;
            seg_coeff(r.seg0) += c;
            seg_coeff(r.seg1) -= c;
          }
        }
        return value;
      },
      with_gradient);
}

}  // namespace hsbc
