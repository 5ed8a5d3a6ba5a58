#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hsbc/cut.hpp"
#include "hsbc/env.hpp"
#include "hsbc/reward.hpp"

namespace hsbc {

/// Per-step reward of the (simulated) human.
class GroundTruth {
 public:
  using StepReward = std::function<double(const State&, const Action&)>;

  explicit GroundTruth(StepReward step_reward);
  static GroundTruth from_env(const EnvSpec& env);
  static GroundTruth from_model(const RewardModel& model, const RewardParams& theta);

  double step_reward(const State& s, const Action& a) const { return step_reward_(s, a); }
  double segment_return(const Segment& seg) const;
  /// sum_t discount^(T-1-t) r_t: the most recent steps weigh the most.
  double discounted_return(const Segment& seg, double discount) const;

 private:
  StepReward step_reward_;
};

enum class OracleKind { Rational, BatchFlip, BernoulliFlip, Stoc, Mistake, Myopic, Human };

std::string to_string(OracleKind kind);
OracleKind oracle_kind_from_string(const std::string& name);

struct OracleSpec {
  OracleKind kind = OracleKind::Rational;
  double rate = 0.0;          ///< flip rate for batch-flip / bernoulli-flip
  double stoc_beta = 10.0;    ///< Bradley-Terry rationality of the Stoc teacher
  double mistake_eps = 0.2;   ///< flip probability of the Mistake teacher
  double myopic_gamma = 0.98; ///< discount of the Myopic teacher
  std::uint64_t seed = 0;

  void validate() const;
};

/// 1 if J(seg0) <= J(seg1) else 0.
int rational_label(const GroundTruth& truth, const Segment& seg0, const Segment& seg1);

/// Negates exactly round(rate * N) labels at positions drawn without replacement.
std::vector<int> batch_flip_labels(const std::vector<int>& true_labels, double rate, Rng& rng);

/// Positions batch_flip_labels would flip for a batch of size n.
std::vector<bool> batch_flip_mask(std::size_t n, double rate, Rng& rng);

/// Label 1 with probability sigmoid(beta (J(seg1) - J(seg0))).
int stoc_label(const GroundTruth& truth, double beta, const Segment& seg0, const Segment& seg1,
               Rng& rng);
double stoc_probability(double beta, double return0, double return1);

int mistake_label(const GroundTruth& truth, double eps, const Segment& seg0, const Segment& seg1,
                  Rng& rng);

int myopic_label(const GroundTruth& truth, double discount, const Segment& seg0,
                 const Segment& seg1);

/// One preference query as seen by a label provider.
struct QueryRequest {
  std::uint64_t query_id = 0;
  int batch_index = 0;
  int position = 0;    ///< index within the batch being assembled
  int batch_size = 1;
  double score = 0.0;  ///< ensemble disagreement when the pair was accepted
  const Segment* seg0 = nullptr;
  const Segment* seg1 = nullptr;
};

struct LabelResult {
  int label = 0;
  LabelSource source = LabelSource::Simulated;
  std::optional<int> rational_label;  ///< pre-corruption label, simulated kinds only
};

class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual LabelResult label(const QueryRequest& query) = 0;
};

/// Simulated teacher: rational labels, optionally corrupted per OracleSpec.
/// Deterministic given OracleSpec::seed and the query order.
class SimulatedOracle : public Oracle {
 public:
  SimulatedOracle(OracleSpec spec, GroundTruth truth);

  LabelResult label(const QueryRequest& query) override;
  const OracleSpec& spec() const { return spec_; }

 private:
  OracleSpec spec_;
  GroundTruth truth_;
  Rng rng_;
  int mask_batch_ = -1;
  std::vector<bool> flip_mask_;
};

}  // namespace hsbc
