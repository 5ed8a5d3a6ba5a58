#include "hsbc/harness.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <cmath>
#include <filesystem>
#include <memory>
#include <numeric>

#include "hsbc/baseline.hpp"
#include "hsbc/errors.hpp"

namespace hsbc {

using nlohmann::json;
namespace fs = std::filesystem;

void retain_heap_memory() {
#if defined(__GLIBC__)
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
#endif
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string to_string(RunPhase phase) {
  switch (phase) {
    case RunPhase::Collecting: return "collecting";
    case RunPhase::Optimizing: return "optimizing";
    case RunPhase::Evaluating: return "evaluating";
    case RunPhase::Done: return "done";
  }
  return "done";
}

// ---------------------------------------------------------------------------
// Evaluation

EvalResult evaluate(const EnvSpec& env, const BatchReward& reward_fn, const PlannerConfig& planner,
                    const EvalConfig& eval) {
  PlannerConfig quiet = planner;
  quiet.exploration.enabled = false;
  EvalResult out;
  for (int e = 0; e < eval.episodes; ++e) {
    Rng rng(eval.seed + static_cast<std::uint64_t>(e));
    const Trajectory t = generate_trajectory(env, reward_fn, quiet, eval.episode_length, 0, rng);
    double total = 0.0;
    for (std::size_t k = 0; k < t.length(); ++k) total += ground_truth_reward(env, t.states[k], t.actions[k]);
    out.returns.push_back(total);
  }
  const double n = static_cast<double>(out.returns.size());
  out.mean = std::accumulate(out.returns.begin(), out.returns.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : out.returns) ss += (r - out.mean) * (r - out.mean);
  out.stddev = out.returns.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return out;
}

EvalResult evaluate(const EnvSpec& env, const RewardModel& model, const Ensemble& ensemble,
                    const PlannerConfig& planner, const EvalConfig& eval) {
  return evaluate(env, make_ensemble_reward(model, ensemble), planner, eval);
}

EvalResult evaluate_oracle(const EnvSpec& env, const PlannerConfig& planner, const EvalConfig& eval) {
  return evaluate(env, make_ground_truth_reward(env), planner, eval);
}

std::optional<double> pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("pearson needs equal lengths of at least 2");
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd dy = y.array() - y.mean();
  const double sx = std::sqrt(dx.square().sum());
  const double sy = std::sqrt(dy.square().sum());
  const double tiny = 1e-12 * std::max(1.0, std::max(x.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff()));
  if (sx <= tiny * std::sqrt(static_cast<double>(x.size())) ||
      sy <= tiny * std::sqrt(static_cast<double>(y.size())))
    return std::nullopt;
  return std::clamp((dx * dy).sum() / (sx * sy), -1.0, 1.0);
}

CorrelationStats pearson_correlation(const RewardModel& model, const Ensemble& ensemble,
                                     const EnvSpec& env, const std::vector<Trajectory>& trajectories) {
  if (ensemble.empty()) throw InvalidInput("correlation needs a nonempty ensemble");
  CorrelationStats out;
  std::vector<double> defined;
  for (const auto& traj : trajectories) {
    if (traj.length() < 3) throw InvalidInput("correlation needs trajectories of at least 3 steps");
    const Eigen::MatrixXd x = encode(model, traj);
    Eigen::VectorXd learned = Eigen::VectorXd::Zero(x.cols());
    for (const auto& theta : ensemble.members) learned += BlockEvaluation(model, theta, x).rewards();
    learned /= static_cast<double>(ensemble.size());
    Eigen::VectorXd truth(x.cols());
    for (Eigen::Index t = 0; t < x.cols(); ++t)
      truth(t) = ground_truth_reward(env, traj.states[static_cast<std::size_t>(t)],
                                     traj.actions[static_cast<std::size_t>(t)]);
    const auto r = pearson(learned, truth);
    out.per_trajectory.push_back(r);
    if (r)
      defined.push_back(*r);
    else
      ++out.undefined;
  }
  if (!defined.empty()) {
    const double n = static_cast<double>(defined.size());
    out.mean = std::accumulate(defined.begin(), defined.end(), 0.0) / n;
    double ss = 0.0;
    for (double r : defined) ss += (r - out.mean) * (r - out.mean);
    out.stddev = defined.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return out;
}

std::vector<Trajectory> correlation_trajectories(const RunConfig& config, const RewardModel& model,
                                                 const Ensemble& ensemble) {
  const BatchReward fn = make_ensemble_reward(model, ensemble);
  PlannerConfig planner = config.planner;
  planner.exploration.enabled = true;
  std::vector<Trajectory> out;
  for (int k = 0; k < config.eval.correlation_trajectories; ++k) {
    Rng rng(derive_seed(config.eval.seed, 100 + static_cast<std::uint64_t>(k)));
    out.push_back(generate_trajectory(config.env, fn, planner, config.eval.correlation_length, 0, rng));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Learning loop

namespace {

class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string name() const = 0;
  virtual double eta() const = 0;
  virtual Ensemble initial(const RewardModel& model, Rng& rng) = 0;
  virtual Ensemble update(const CompiledHistory& history, const Ensemble& previous, Rng& rng,
                          IterationSummary& summary) = 0;
};

class HsbcLearner : public Learner {
 public:
  explicit HsbcLearner(const RunConfig& c) : c_(c) {}
  std::string name() const override { return "hsbc"; }
  double eta() const override { return c_.query.disagreement_threshold; }
  Ensemble initial(const RewardModel& model, Rng& rng) override {
    return initialize_ensemble(model, c_.sampler, rng);
  }
  Ensemble update(const CompiledHistory& history, const Ensemble& previous, Rng& rng,
                  IterationSummary& summary) override {
    RefreshResult r = refresh_ensemble(history, previous, c_.sampler, rng);
    summary.passed_filter = r.passed_filter;
    summary.fallback = r.fallback;
    summary.degraded = summary.degraded || r.degraded;
    return std::move(r.ensemble);
  }

 private:
  const RunConfig& c_;
};

class BtLearner : public Learner {
 public:
  explicit BtLearner(const RunConfig& c) : c_(c) {}
  std::string name() const override { return "bt"; }
  double eta() const override { return c_.baseline.disagreement_threshold; }
  Ensemble initial(const RewardModel& model, Rng& rng) override {
    return initialize_bt_models(model, c_.baseline, rng);
  }
  Ensemble update(const CompiledHistory& history, const Ensemble& previous, Rng&,
                  IterationSummary& summary) override {
    Ensemble next = previous;
    train_bt_models(history, c_.baseline, next);
    summary.passed_filter = static_cast<int>(next.size());
    return next;
  }

 private:
  const RunConfig& c_;
};

struct Outputs {
  fs::path dir;
  std::unique_ptr<PreferenceLog> prefs;
  std::unique_ptr<EventLog> events;
  std::ofstream trajectories;

  PreferenceLog* shared_prefs = nullptr;

  Outputs(const std::string& d, PreferenceLog* shared) : dir(d), shared_prefs(shared) {
    fs::create_directories(dir / "checkpoints");
    if (!shared_prefs) prefs = std::make_unique<PreferenceLog>((dir / "preferences.jsonl").string());
    events = std::make_unique<EventLog>((dir / "events.jsonl").string());
    trajectories.open(dir / "trajectories.jsonl", std::ios::trunc);
  }

  PreferenceLog& preferences() { return shared_prefs ? *shared_prefs : *prefs; }
};

json summary_to_json(const IterationSummary& s) {
  return {{"iteration", s.iteration},
          {"passed_filter", s.passed_filter},
          {"fallback", s.fallback},
          {"degraded", s.degraded},
          {"candidates", s.candidates},
          {"accepted", s.accepted},
          {"extra_trajectories", s.extra_trajectories},
          {"filled_by_score", s.filled_by_score},
          {"mean_rollout_return", s.mean_rollout_return},
          {"max_rollout_return", s.max_rollout_return}};
}

void check_cancel(const RunOptions& opt) {
  if (opt.cancel && opt.cancel->load()) throw Cancelled("run cancelled");
}

RunResult run_loop(const RunConfig& cfg, const RunOptions& opt, Learner& learner) {
  cfg.validate();
  const RewardModel model = cfg.reward.build(cfg.env);
  Rng init_rng(derive_seed(cfg.seed, 1));
  Rng sample_rng(derive_seed(cfg.seed, 2));
  Rng traj_rng(derive_seed(cfg.seed, 3));
  Rng query_rng(derive_seed(cfg.seed, 4));

  std::unique_ptr<SimulatedOracle> owned_oracle;
  Oracle* oracle = opt.oracle;
  if (!oracle) {
    if (cfg.oracle.kind == OracleKind::Human)
      throw ConfigError("a human oracle needs the session service");
    OracleSpec spec = cfg.oracle;
    spec.seed = derive_seed(cfg.seed ^ cfg.oracle.seed, 5);
    owned_oracle = std::make_unique<SimulatedOracle>(spec, GroundTruth::from_env(cfg.env));
    oracle = owned_oracle.get();
  }

  const bool write = opt.write_outputs.value_or(!cfg.output_dir.empty());
  std::unique_ptr<Outputs> out;
  if (write) {
    if (cfg.output_dir.empty()) throw ConfigError("output_dir is required to write outputs");
    out = std::make_unique<Outputs>(cfg.output_dir, opt.preference_log);
    write_json_file((out->dir / "config.json").string(), config_to_json(cfg));
    out->events->write("run_started", {{"method", learner.name()}, {"seed", cfg.seed}});
  }
  auto event = [&](const std::string& name, json fields) {
    if (out) out->events->write(name, std::move(fields));
  };
  auto phase = [&](RunPhase p, int i) {
    if (opt.on_phase) opt.on_phase(p, i);
  };

  RunResult result;
  result.history = BatchHistory(cfg.gamma);
  CompiledHistory compiled(model, cfg.gamma);
  const int z = cfg.query.segments_per_trajectory;
  SegmentBuffer buffer(static_cast<std::size_t>(std::max(2, cfg.query.buffer_trajectories * z)));
  QueryConfig qcfg = cfg.query;
  qcfg.disagreement_threshold = learner.eta();
  std::uint64_t next_traj = 0, next_candidate = 0;

  Ensemble ensemble = learner.initial(model, init_rng);
  ensemble.iteration = 0;

  auto collect = [&](int i, IterationSummary& s) {
    const bool random = i < cfg.bootstrap_iterations;
    const BatchReward fn = random ? make_zero_reward() : make_ensemble_reward(model, ensemble);
    PlannerStats stats;
    const Trajectory t = generate_trajectory(cfg.env, fn, cfg.planner, cfg.env.episode_length, i,
                                             traj_rng, random, &stats);
    const std::uint64_t id = next_traj++;
    buffer.add_all(segment_trajectory(t, z, cfg.query.segment_length, traj_rng, id));
    s.mean_rollout_return = stats.mean_rollout_return;
    s.max_rollout_return = stats.max_rollout_return;
    if (out && out->trajectories) {
      double true_return = 0.0;
      for (std::size_t k = 0; k < t.length(); ++k)
        true_return += ground_truth_reward(cfg.env, t.states[k], t.actions[k]);
      json line = trajectory_to_json(t);
      line["iteration"] = i;
      line["source_id"] = id;
      line["policy"] = random ? "random" : "mppi";
      line["true_return"] = true_return;
      out->trajectories << line.dump() << '\n' << std::flush;
    }
  };

  auto evaluate_point = [&](int i) {
    phase(RunPhase::Evaluating, i);
    const EvalResult ev = evaluate(cfg.env, model, ensemble, cfg.eval_planner, cfg.eval);
    result.curve.points.push_back({i, result.queries, ev.mean, ev.stddev});
    if (opt.on_evaluation) opt.on_evaluation(result.curve.points.back());
    event("evaluation", {{"iteration", i}, {"queries", result.queries}, {"mean_return", ev.mean},
                         {"stddev_return", ev.stddev}});
    return ev;
  };

  auto checkpoint = [&](int i) {
    if (!out) return;
    char name[64];
    std::snprintf(name, sizeof name, "ensemble_%04d.txt", i);
    write_ensemble((out->dir / "checkpoints" / name).string(), ensemble);
  };

  for (int i = 0; i < cfg.iterations; ++i) {
    check_cancel(opt);
    IterationSummary summary;
    summary.iteration = i;

    if (i > 0) {
      phase(RunPhase::Optimizing, i);
      ensemble = learner.update(compiled, ensemble, sample_rng, summary);
    } else {
      summary.passed_filter = static_cast<int>(ensemble.size());
    }
    ensemble.iteration = i;
    checkpoint(i);
    if (opt.observer) opt.observer({i, model, ensemble, buffer, result.history});
    if (opt.evaluate && i % cfg.eval.every == 0) evaluate_point(i);
    check_cancel(opt);

    phase(RunPhase::Collecting, i);
    for (int k = 0; k < cfg.trajectories_per_iteration || buffer.size() < 2; ++k) collect(i, summary);

    int position = 0;
    AssemblyContext ctx;
    ctx.batch_index = i;
    ctx.next_candidate_id = &next_candidate;
    ctx.on_candidate = [&](const CandidateDecision& d) {
      ++summary.candidates;
      if (out)
        out->events->write("candidate", {{"iteration", i}, {"candidate_id", d.candidate_id},
                                         {"seg0", d.seg0_id}, {"seg1", d.seg1_id},
                                         {"score", d.score}, {"accepted", d.accepted}});
    };
    ctx.on_label = [&](const PreferenceRecord& rec, const LabelResult& label, double score) {
      LoggedPreference p{rec, i, position++, label.rational_label, score};
      if (out) out->preferences().append(p);
      result.preferences.push_back(std::move(p));
    };

    PreferenceBatch batch;
    std::vector<PreferenceRecord> accepted;
    for (int attempt = 0;; ++attempt) {
      try {
        batch = assemble_batch(buffer, model, ensemble, qcfg, *oracle, query_rng, ctx,
                               std::move(accepted));
        break;
      } catch (const PartialBatchError& e) {
        accepted = e.accepted;
        if (attempt >= cfg.partial_batch_retries) {
          batch = fill_batch_by_score(buffer, model, ensemble, qcfg, *oracle, query_rng, ctx,
                                      std::move(accepted));
          summary.filled_by_score = true;
          summary.degraded = true;
          event("partial_batch_filled", {{"iteration", i}, {"accepted_before_fill", e.accepted.size()}});
          break;
        }
        ++summary.extra_trajectories;
        collect(i, summary);
      }
    }
    summary.accepted = static_cast<int>(batch.size());
    compiled.append(batch);
    result.history.append(std::move(batch));
    result.queries += qcfg.batch_size;
    result.degraded = result.degraded || summary.degraded;
    event("iteration", summary_to_json(summary));
    result.iterations.push_back(summary);
  }

  if (cfg.iterations > 0) {
    check_cancel(opt);
    phase(RunPhase::Optimizing, cfg.iterations);
    IterationSummary final_summary;
    final_summary.iteration = cfg.iterations;
    ensemble = learner.update(compiled, ensemble, sample_rng, final_summary);
    ensemble.iteration = cfg.iterations;
    result.degraded = result.degraded || final_summary.degraded;
    checkpoint(cfg.iterations);
    if (opt.observer) opt.observer({cfg.iterations, model, ensemble, buffer, result.history});
    if (opt.evaluate) result.final_eval = evaluate_point(cfg.iterations);
  }
  result.ensemble = ensemble;

  if (out) {
    write_curve_csv((out->dir / "curve.csv").string(), result.curve);
    json degraded = json::array();
    for (const auto& s : result.iterations)
      if (s.degraded) degraded.push_back(s.iteration);
    write_json_file((out->dir / "summary.json").string(),
                    {{"name", cfg.name},
                     {"method", learner.name()},
                     {"seed", cfg.seed},
                     {"iterations", cfg.iterations},
                     {"queries", result.queries},
                     {"gamma", cfg.gamma},
                     {"oracle", to_string(cfg.oracle.kind)},
                     {"false_rate", cfg.oracle.rate},
                     {"degraded", result.degraded},
                     {"degraded_iterations", degraded},
                     {"final_mean_return", result.final_eval.mean},
                     {"final_stddev_return", result.final_eval.stddev},
                     {"curve", curve_to_json(result.curve)}});
    event("run_finished", {{"queries", result.queries}, {"degraded", result.degraded}});
  }
  phase(RunPhase::Done, cfg.iterations);
  return result;
}

}  // namespace

RunResult run_hsbc(const RunConfig& config, const RunOptions& options) {
  HsbcLearner learner(config);
  return run_loop(config, options, learner);
}

RunResult run_bt_baseline(const RunConfig& config, const RunOptions& options) {
  BtLearner learner(config);
  return run_loop(config, options, learner);
}

}  // namespace hsbc
