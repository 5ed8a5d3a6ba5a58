#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hsbc/config.hpp"
#include "hsbc/cut.hpp"
#include "hsbc/io.hpp"
#include "hsbc/oracle.hpp"
#include "hsbc/planner.hpp"
#include "hsbc/query.hpp"
#include "hsbc/sampler.hpp"

namespace hsbc {

/// Independent stream seed derived from a run seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Keeps freed heap memory mapped (glibc only). The sampler and planner allocate
/// short-lived blocks in tight loops; default trimming returns them to the
/// kernel each time.
void retain_heap_memory();

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation over episodes
  std::vector<double> returns;
};

/// Ground-truth return of episodes planned under `reward_fn`; episode e uses
/// seed eval.seed + e, so repeated calls agree exactly.
EvalResult evaluate(const EnvSpec& env, const BatchReward& reward_fn, const PlannerConfig& planner,
                    const EvalConfig& eval);
EvalResult evaluate(const EnvSpec& env, const RewardModel& model, const Ensemble& ensemble,
                    const PlannerConfig& planner, const EvalConfig& eval);
/// Planning with the ground-truth reward itself.
EvalResult evaluate_oracle(const EnvSpec& env, const PlannerConfig& planner, const EvalConfig& eval);

/// Pearson coefficient of two equal-length sequences; empty when either has zero variance.
std::optional<double> pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct CorrelationStats {
  std::vector<std::optional<double>> per_trajectory;
  double mean = 0.0;    ///< over defined entries
  double stddev = 0.0;
  int undefined = 0;
};

/// Per-step ensemble-mean reward against ground truth along each trajectory.
CorrelationStats pearson_correlation(const RewardModel& model, const Ensemble& ensemble,
                                     const EnvSpec& env, const std::vector<Trajectory>& trajectories);

/// Trajectories for the correlation check: the collection planner under the
/// learned reward with its initial exploration noise.
std::vector<Trajectory> correlation_trajectories(const RunConfig& config, const RewardModel& model,
                                                 const Ensemble& ensemble);

enum class RunPhase { Collecting, Optimizing, Evaluating, Done };
std::string to_string(RunPhase phase);

struct IterationSummary {
  int iteration = 0;
  int passed_filter = 0;
  int fallback = 0;
  bool degraded = false;
  int candidates = 0;
  int accepted = 0;
  int extra_trajectories = 0;
  bool filled_by_score = false;
  double mean_rollout_return = 0.0;
  double max_rollout_return = 0.0;
};

/// State visible to observers once the iteration's ensemble is ready,
/// before new trajectories or labels.
struct IterationView {
  int iteration;
  const RewardModel& model;
  const Ensemble& ensemble;
  const SegmentBuffer& buffer;
  const BatchHistory& history;
};

struct RunOptions {
  std::function<void(const IterationView&)> observer;
  std::function<void(RunPhase, int iteration)> on_phase;
  std::function<void(const CurvePoint&)> on_evaluation;
  Oracle* oracle = nullptr;  ///< replaces the configured oracle when set
  PreferenceLog* preference_log = nullptr;  ///< shared log, else one under output_dir
  const std::atomic<bool>* cancel = nullptr;
  bool evaluate = true;      ///< learning-curve checkpoints and final evaluation
  std::optional<bool> write_outputs;  ///< default: when output_dir is set
};

struct RunResult {
  Ensemble ensemble;  ///< final ensemble (HSBC) or model triple (baseline)
  LearningCurve curve;
  BatchHistory history;
  std::vector<LoggedPreference> preferences;
  std::vector<IterationSummary> iterations;
  int queries = 0;
  bool degraded = false;
  EvalResult final_eval;
};

RunResult run_hsbc(const RunConfig& config, const RunOptions& options = {});
RunResult run_bt_baseline(const RunConfig& config, const RunOptions& options = {});

}  // namespace hsbc
