#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hsbc/reward.hpp"

namespace hsbc {

enum class LabelSource { Simulated, Human };

std::string to_string(LabelSource source);
LabelSource label_source_from_string(const std::string& name);

/// (seg0, seg1, label): label 1 means seg1 is preferred.
struct PreferenceRecord {
  Segment seg0;
  Segment seg1;
  int label = 0;
  std::uint64_t query_id = 0;
  LabelSource source = LabelSource::Simulated;
};

struct PreferenceBatch {
  std::vector<PreferenceRecord> records;
  int batch_index = 0;

  std::size_t size() const { return records.size(); }
};

/// Ordered preference batches; membership in the hypothesis space is the
/// conjunction of one conservative cut per batch.
class BatchHistory {
 public:
  explicit BatchHistory(double gamma = 0.0);

  double gamma() const { return gamma_; }
  const std::vector<PreferenceBatch>& batches() const { return batches_; }
  bool empty() const { return batches_.empty(); }
  std::size_t size() const { return batches_.size(); }

  /// Requires batch_index == size() and a nonempty batch.
  void append(PreferenceBatch batch);

 private:
  double gamma_;
  std::vector<PreferenceBatch> batches_;
};

struct SmoothingConfig {
  double alpha = 5.0;  ///< inner sigmoid sharpness, applied to each preference gap
  double beta = 3.0;   ///< outer sigmoid sharpness, applied to the soft vote margin
  double nu = 0.9;     ///< relaxation of the vote threshold

  void validate() const;
};

int heaviside(double x);

/// Number of records whose preference gap is nonnegative.
int votes(const RewardModel& model, const PreferenceBatch& batch, const RewardParams& params);

/// floor((1 - gamma) N) - 0.5
double cut_threshold(int batch_size, double gamma);

bool in_cut(const RewardModel& model, const PreferenceBatch& batch, double gamma,
            const RewardParams& params);

bool in_hypothesis_space(const RewardModel& model, const BatchHistory& history,
                         const RewardParams& params);

/// sigma_beta(sum_j sigma_alpha(gap_j) - nu (1 - gamma) N) from precomputed gaps.
double smoothed_cut_indicator(const std::vector<double>& gaps, double gamma,
                              const SmoothingConfig& smoothing);

double smoothed_cut_indicator(const RewardModel& model, const PreferenceBatch& batch,
                              double gamma, const SmoothingConfig& smoothing,
                              const RewardParams& params);

struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Sum over batches of log(smoothed cut indicator), with its gradient in theta.
ObjectiveValue smoothed_log_objective(const RewardModel& model, const BatchHistory& history,
                                      const SmoothingConfig& smoothing,
                                      const RewardParams& params);

/// log(sigmoid(z)) without overflow or log(0).
double log_sigmoid(double z);
double sigmoid(double z);

/// A history flattened into one feature block over its distinct segments, so
/// returns and objective gradients need one forward and one backward pass.
class CompiledHistory {
 public:
  CompiledHistory(const RewardModel& model, double gamma);
  CompiledHistory(const RewardModel& model, const BatchHistory& history);

  void append(const PreferenceBatch& batch);

  const RewardModel& model() const { return model_; }
  double gamma() const { return gamma_; }
  std::size_t batch_count() const { return batches_.size(); }
  std::size_t segment_count() const { return starts_.size(); }

  /// J_theta of every distinct segment.
  Eigen::VectorXd segment_returns(const RewardParams& params) const;
  /// Per-batch vote counts.
  std::vector<int> votes(const RewardParams& params) const;
  bool contains(const RewardParams& params) const;
  ObjectiveValue objective(const RewardParams& params, const SmoothingConfig& smoothing,
                           bool with_gradient = true) const;

  /// Maps the segment returns to a value and writes d value / d J into `coeff`.
  using ReturnsObjective = std::function<double(const Eigen::VectorXd& returns, Eigen::VectorXd& coeff)>;
  /// Any scalar function of the segment returns, with its gradient in theta.
  ObjectiveValue evaluate(const RewardParams& params, const ReturnsObjective& fn,
                          bool with_gradient = true) const;

  struct Pair {
    int seg0;  ///< index into segment_returns
    int seg1;
    int label;
  };
  /// All records in batch order.
  std::vector<Pair> pairs() const;

 private:
  struct CompiledRecord {
    int seg0;
    int seg1;
    double sign;  // 1 - 2 label
  };
  struct CompiledBatch {
    std::vector<CompiledRecord> records;
  };
  using SegmentKey = std::tuple<std::uint64_t, std::size_t, std::size_t>;

  int intern(const Segment& seg);

  RewardModel model_;
  double gamma_;
  std::multimap<SegmentKey, int> index_;  // same key may hold distinct content
  std::vector<Eigen::Index> starts_;  // column offset of each segment in inputs_
  std::vector<Eigen::Index> lengths_;
  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd feature_sums_;  // linear models: input_dim x segments
  std::vector<CompiledBatch> batches_;
};

}  // namespace hsbc
