#include "hsbc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "hsbc/errors.hpp"

namespace hsbc {

using nlohmann::json;

RewardModel RewardModelSpec::build(const EnvSpec& env) const {
  const FeatureMap fm = features.empty()
                            ? env.feature_map()
                            : FeatureMap::from_name(features, env.state_dim(), env.action_dim());
  if (kind == ModelKind::Linear) return RewardModel::linear(fm);
  return RewardModel::mlp(fm, hidden, activation, squash);
}

void RunConfig::validate() const {
  env.validate();
  reward.build(env).validate();
  sampler.validate();
  query.validate();
  planner.validate();
  eval_planner.validate();
  oracle.validate();
  baseline.validate();
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (iterations < 0) throw ConfigError("iterations must be nonnegative");
  if (bootstrap_iterations < 0) throw ConfigError("bootstrap_iterations must be nonnegative");
  if (trajectories_per_iteration < 1) throw ConfigError("trajectories_per_iteration must be positive");
  if (partial_batch_retries < 0) throw ConfigError("partial_batch_retries must be nonnegative");
  if (bootstrap_labels < 0) throw ConfigError("bootstrap_labels must be nonnegative");
  if (query.segment_length > env.episode_length)
    throw ConfigError("segment_length exceeds the episode length");
  if (eval.episodes < 1 || eval.episode_length < 1 || eval.every < 1)
    throw ConfigError("evaluation episodes, length and cadence must be positive");
  if (eval.correlation_trajectories < 1 || eval.correlation_length < 3)
    throw ConfigError("correlation needs at least one trajectory of three steps");
}

int cartpole_iterations_for_rate(double rate) { return rate < 0.2 - 1e-9 ? 50 : 80; }

void apply_false_rate(RunConfig& config, double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("false rate must lie in [0, 1]");
  if (config.oracle.kind == OracleKind::Human) throw ConfigError("false rate needs a simulated oracle");
  config.oracle.kind = rate > 0.0 ? OracleKind::BatchFlip : OracleKind::Rational;
  config.oracle.rate = rate;
  if (config.iterations_from_false_rate) config.iterations = cartpole_iterations_for_rate(rate);
}

namespace {

PlannerConfig planner(int samples, int horizon, double lambda, double std) {
  PlannerConfig p;
  p.num_samples = samples;
  p.horizon = horizon;
  p.lambda = lambda;
  p.std = std;
  return p;
}

RunConfig pointmass_preset() {
  RunConfig c;
  c.name = "pointmass";
  c.env = EnvSpec::make_pointmass();
  c.env.pointmass.start_position = 1.0;
  c.reward.kind = ModelKind::Linear;
  // Returns differ by orders of magnitude across queried pairs; a sharper inner
  // sigmoid and longer ascent keep near-tie constraints informative.
  c.sampler.smoothing.alpha = 20.0;
  c.sampler.steps = 300;
  c.query.segment_length = 20;
  c.query.segments_per_trajectory = 2;
  c.iterations = 20;
  c.eval.episode_length = 100;
  c.planner = planner(64, 15, 0.01, 0.5);
  c.eval_planner = planner(128, 20, 0.01, 0.5);
  c.eval_planner.exploration.enabled = false;
  return c;
}

RunConfig cartpole_preset() {
  RunConfig c;
  c.name = "cartpole";
  c.env = EnvSpec::make_cartpole();
  c.reward.kind = ModelKind::Mlp;
  c.reward.hidden = {32, 32};
  c.reward.squash = true;
  c.sampler.smoothing.alpha = 10.0;
  c.sampler.smoothing.beta = 3.0;
  c.baseline.alpha = 10.0;
  c.query.segment_length = 50;
  c.query.segments_per_trajectory = 2;
  c.iterations = 50;
  c.iterations_from_false_rate = true;
  c.bootstrap_iterations = 2;
  c.eval.episode_length = 200;
  c.planner = planner(256, 20, 0.01, 1.0);
  c.eval_planner = planner(512, 25, 0.01, 0.75);
  c.eval_planner.exploration.enabled = false;
  return c;
}

}  // namespace

RunConfig preset(const std::string& name) {
  if (name == "pointmass") return pointmass_preset();
  if (name == "pointmass-mlp") {
    RunConfig c = pointmass_preset();
    c.name = name;
    c.reward.kind = ModelKind::Mlp;
    c.reward.squash = true;
    return c;
  }
  if (name == "cartpole") return cartpole_preset();
  if (name == "cartpole-human") {
    RunConfig c = cartpole_preset();
    c.name = name;
    c.oracle.kind = OracleKind::Human;
    c.gamma = 0.4;
    c.bootstrap_labels = 50;
    c.iterations_from_false_rate = false;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"pointmass", "pointmass-mlp", "cartpole", "cartpole-human"};
}

// ---------------------------------------------------------------------------
// JSON

namespace {

/// Strict reader: every key of the object must be consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  template <class E, class Parse>
  void get_enum(const char* key, E& out, Parse parse) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = parse(s);
  }

  template <class Fn>
  void child(const char* key, Fn&& fn) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    Reader sub(j_.at(key), where(key));
    fn(sub);
    sub.finish();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown configuration key " + where(it.key()));
  }

 private:
  std::string where(const std::string& key = "") const {
    return key.empty() ? (path_.empty() ? "config" : path_) : (path_.empty() ? key : path_ + "." + key);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

ModelKind model_kind_from(const std::string& s) {
  if (s == "linear") return ModelKind::Linear;
  if (s == "mlp") return ModelKind::Mlp;
  throw ConfigError("unknown reward model kind '" + s + "'");
}

Activation activation_from(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + s + "'");
}

void read_planner(Reader& r, PlannerConfig& p) {
  r.get("num_samples", p.num_samples);
  r.get("horizon", p.horizon);
  r.get("lambda", p.lambda);
  r.get("std", p.std);
  r.child("exploration", [&](Reader& e) {
    e.get("enabled", p.exploration.enabled);
    e.get("scale", p.exploration.scale);
    e.get("decay", p.exploration.decay);
    e.get("probability", p.exploration.probability);
  });
}

json write_planner(const PlannerConfig& p) {
  return {{"num_samples", p.num_samples},
          {"horizon", p.horizon},
          {"lambda", p.lambda},
          {"std", p.std},
          {"exploration",
           {{"enabled", p.exploration.enabled},
            {"scale", p.exploration.scale},
            {"decay", p.exploration.decay},
            {"probability", p.exploration.probability}}}};
}

}  // namespace

RunConfig config_from_json(const json& j) {
  Reader r(j, "");
  std::string base = "pointmass";
  r.get("preset", base);
  RunConfig c = preset(base);

  r.get("name", c.name);
  r.child("env", [&](Reader& e) {
    std::string kind;
    e.get("kind", kind);
    if (!kind.empty() && env_kind_from_string(kind) != c.env.kind)
      c.env = env_kind_from_string(kind) == EnvKind::Cartpole ? EnvSpec::make_cartpole()
                                                              : EnvSpec::make_pointmass();
    e.get("dt", c.env.dt);
    e.get("action_repeat", c.env.action_repeat);
    e.get("action_low", c.env.action_low);
    e.get("action_high", c.env.action_high);
    e.get("init_noise", c.env.init_noise);
    e.get("episode_length", c.env.episode_length);
    e.child("cartpole", [&](Reader& k) {
      k.get("cart_mass", c.env.cartpole.cart_mass);
      k.get("pole_mass", c.env.cartpole.pole_mass);
      k.get("half_length", c.env.cartpole.half_length);
      k.get("gravity", c.env.cartpole.gravity);
      k.get("force_scale", c.env.cartpole.force_scale);
    });
    e.child("pointmass", [&](Reader& k) {
      k.get("accel_scale", c.env.pointmass.accel_scale);
      k.get("start_position", c.env.pointmass.start_position);
      std::vector<double> w;
      k.get("true_weights", w);
      if (!w.empty()) {
        if (w.size() != 3) throw ConfigError("env.pointmass.true_weights needs three entries");
        c.env.pointmass.true_weights = Eigen::Vector3d(w[0], w[1], w[2]);
      }
    });
  });
  r.child("reward_model", [&](Reader& m) {
    m.get_enum("kind", c.reward.kind, model_kind_from);
    m.get("features", c.reward.features);
    m.get("hidden", c.reward.hidden);
    m.get_enum("activation", c.reward.activation, activation_from);
    m.get("squash", c.reward.squash);
  });
  r.child("sampler", [&](Reader& s) {
    s.get("ensemble_size", c.sampler.ensemble_size);
    s.get("learning_rate", c.sampler.learning_rate);
    s.get("steps", c.sampler.steps);
    s.get("weight_decay", c.sampler.weight_decay);
    s.get("init_scale", c.sampler.init_scale);
    s.get("densify_noise", c.sampler.densify_noise);
    s.get("fresh_fraction", c.sampler.fresh_fraction);
    s.get("max_restarts", c.sampler.max_restarts);
  });
  r.child("smoothing", [&](Reader& s) {
    s.get("alpha", c.sampler.smoothing.alpha);
    s.get("beta", c.sampler.smoothing.beta);
    s.get("nu", c.sampler.smoothing.nu);
  });
  r.child("query", [&](Reader& q) {
    q.get("batch_size", c.query.batch_size);
    q.get("disagreement_threshold", c.query.disagreement_threshold);
    q.get("segments_per_trajectory", c.query.segments_per_trajectory);
    q.get("segment_length", c.query.segment_length);
    q.get("max_candidate_draws", c.query.max_candidate_draws);
    q.get("buffer_trajectories", c.query.buffer_trajectories);
  });
  r.child("planner", [&](Reader& p) { read_planner(p, c.planner); });
  r.child("eval_planner", [&](Reader& p) { read_planner(p, c.eval_planner); });
  r.child("oracle", [&](Reader& o) {
    o.get_enum("kind", c.oracle.kind, oracle_kind_from_string);
    o.get("rate", c.oracle.rate);
    o.get("stoc_beta", c.oracle.stoc_beta);
    o.get("mistake_eps", c.oracle.mistake_eps);
    o.get("myopic_gamma", c.oracle.myopic_gamma);
    o.get("seed", c.oracle.seed);
    o.get("bootstrap_labels", c.bootstrap_labels);
  });
  r.child("baseline", [&](Reader& b) {
    b.get("models", c.baseline.models);
    b.get("alpha", c.baseline.alpha);
    b.get("learning_rate", c.baseline.learning_rate);
    b.get("steps", c.baseline.steps);
    b.get("weight_decay", c.baseline.weight_decay);
    b.get("init_scale", c.baseline.init_scale);
    b.get("disagreement_threshold", c.baseline.disagreement_threshold);
  });
  r.child("eval", [&](Reader& e) {
    e.get("episodes", c.eval.episodes);
    e.get("episode_length", c.eval.episode_length);
    e.get("every", c.eval.every);
    e.get("correlation_trajectories", c.eval.correlation_trajectories);
    e.get("correlation_length", c.eval.correlation_length);
    e.get("seed", c.eval.seed);
  });
  r.get("gamma", c.gamma);
  r.get("iterations", c.iterations);
  if (r.has("iterations")) c.iterations_from_false_rate = false;
  r.get("iterations_from_false_rate", c.iterations_from_false_rate);
  r.get("bootstrap_iterations", c.bootstrap_iterations);
  r.get("trajectories_per_iteration", c.trajectories_per_iteration);
  r.get("partial_batch_retries", c.partial_batch_retries);
  r.get("seed", c.seed);
  r.get("output_dir", c.output_dir);
  r.finish();
  if (c.iterations_from_false_rate && c.oracle.kind != OracleKind::Human)
    c.iterations = cartpole_iterations_for_rate(c.oracle.rate);
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  const auto& e = c.env;
  json j;
  j["name"] = c.name;
  j["env"] = {{"kind", to_string(e.kind)},
              {"dt", e.dt},
              {"action_repeat", e.action_repeat},
              {"action_low", e.action_low},
              {"action_high", e.action_high},
              {"init_noise", e.init_noise},
              {"episode_length", e.episode_length},
              {"cartpole",
               {{"cart_mass", e.cartpole.cart_mass},
                {"pole_mass", e.cartpole.pole_mass},
                {"half_length", e.cartpole.half_length},
                {"gravity", e.cartpole.gravity},
                {"force_scale", e.cartpole.force_scale}}},
              {"pointmass",
               {{"accel_scale", e.pointmass.accel_scale},
                {"start_position", e.pointmass.start_position},
                {"true_weights",
                 {e.pointmass.true_weights(0), e.pointmass.true_weights(1),
                  e.pointmass.true_weights(2)}}}}};
  j["reward_model"] = {{"kind", c.reward.kind == ModelKind::Linear ? "linear" : "mlp"},
                       {"features", c.reward.features},
                       {"hidden", c.reward.hidden},
                       {"activation", c.reward.activation == Activation::Tanh ? "tanh" : "relu"},
                       {"squash", c.reward.squash}};
  j["sampler"] = {{"ensemble_size", c.sampler.ensemble_size},
                  {"learning_rate", c.sampler.learning_rate},
                  {"steps", c.sampler.steps},
                  {"weight_decay", c.sampler.weight_decay},
                  {"init_scale", c.sampler.init_scale},
                  {"densify_noise", c.sampler.densify_noise},
                  {"fresh_fraction", c.sampler.fresh_fraction},
                  {"max_restarts", c.sampler.max_restarts}};
  j["smoothing"] = {{"alpha", c.sampler.smoothing.alpha},
                    {"beta", c.sampler.smoothing.beta},
                    {"nu", c.sampler.smoothing.nu}};
  j["query"] = {{"batch_size", c.query.batch_size},
                {"disagreement_threshold", c.query.disagreement_threshold},
                {"segments_per_trajectory", c.query.segments_per_trajectory},
                {"segment_length", c.query.segment_length},
                {"max_candidate_draws", c.query.max_candidate_draws},
                {"buffer_trajectories", c.query.buffer_trajectories}};
  j["planner"] = write_planner(c.planner);
  j["eval_planner"] = write_planner(c.eval_planner);
  j["oracle"] = {{"kind", to_string(c.oracle.kind)},
                 {"rate", c.oracle.rate},
                 {"stoc_beta", c.oracle.stoc_beta},
                 {"mistake_eps", c.oracle.mistake_eps},
                 {"myopic_gamma", c.oracle.myopic_gamma},
                 {"seed", c.oracle.seed},
                 {"bootstrap_labels", c.bootstrap_labels}};
  j["baseline"] = {{"models", c.baseline.models},
                   {"alpha", c.baseline.alpha},
                   {"learning_rate", c.baseline.learning_rate},
                   {"steps", c.baseline.steps},
                   {"weight_decay", c.baseline.weight_decay},
                   {"init_scale", c.baseline.init_scale},
                   {"disagreement_threshold", c.baseline.disagreement_threshold}};
  j["eval"] = {{"episodes", c.eval.episodes},
               {"episode_length", c.eval.episode_length},
               {"every", c.eval.every},
               {"correlation_trajectories", c.eval.correlation_trajectories},
               {"correlation_length", c.eval.correlation_length},
               {"seed", c.eval.seed}};
  j["gamma"] = c.gamma;
  j["iterations"] = c.iterations;
  j["iterations_from_false_rate"] = c.iterations_from_false_rate;
  j["bootstrap_iterations"] = c.bootstrap_iterations;
  j["trajectories_per_iteration"] = c.trajectories_per_iteration;
  j["partial_batch_retries"] = c.partial_batch_retries;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace hsbc
