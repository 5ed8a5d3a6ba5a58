// Acceptance suite: one PASS/FAIL line per criterion.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "hsbc/baseline.hpp"
#include "hsbc/config.hpp"
#include "hsbc/cut.hpp"
#include "hsbc/harness.hpp"
#include "hsbc/query.hpp"
#include "hsbc/session.hpp"
#include "httplib.h"

using namespace hsbc;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::string cli;
  std::string work = (fs::temp_directory_path() / "hsbc_acceptance").string();
  int seeds = 5;
  int cartpole_seeds = 5;
  std::vector<std::string> only;
};

double minutes_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

RunOptions silent(bool evaluate) {
  RunOptions o;
  o.evaluate = evaluate;
  o.write_outputs = false;
  return o;
}

RunConfig pointmass(std::uint64_t seed, double false_rate, double gamma) {
  RunConfig c = preset("pointmass");
  c.seed = seed;
  apply_false_rate(c, false_rate);
  c.gamma = gamma;
  return c;
}

// ---------------------------------------------------------------------------
// A1, A2: membership of the true parameters over whole runs

/// Membership of theta_H after each batch (index = batches seen).
std::vector<bool> membership_trace(const RunConfig& c, double& minutes) {
  const RewardModel model = c.reward.build(c.env);
  const RewardParams truth = c.env.pointmass.true_weights;
  std::vector<bool> trace;
  RunOptions o = silent(false);
  o.observer = [&](const IterationView& v) {
    if (v.history.empty()) return;
    trace.push_back(in_hypothesis_space(model, v.history, truth));
  };
  const auto t0 = Clock::now();
  run_hsbc(c, o);
  minutes = std::max(minutes, minutes_since(t0));
  return trace;
}

Outcome a1(const Options& opt) {
  bool ok = true;
  double minutes = 0.0;
  int checks = 0;
  for (int s = 0; s < opt.seeds; ++s) {
    const auto trace = membership_trace(pointmass(s, 0.0, 0.0), minutes);
    checks += static_cast<int>(trace.size());
    ok = ok && trace.size() == 20;
    for (bool b : trace) ok = ok && b;
  }
  ok = ok && minutes < 2.0;
  return {ok, std::to_string(checks) + " membership checks over " + std::to_string(opt.seeds) +
                  " seeds, slowest run " + fmt("%.2f min", minutes)};
}

Outcome a2(const Options& opt) {
  bool robust_kept = true, strict_lost = true;
  double minutes = 0.0;
  for (int s = 0; s < opt.seeds; ++s) {
    for (bool b : membership_trace(pointmass(s, 0.2, 0.2), minutes)) robust_kept = robust_kept && b;
    // Every batch carries two flipped labels, so the first batch is already contaminated.
    for (bool b : membership_trace(pointmass(s, 0.2, 0.0), minutes)) strict_lost = strict_lost && !b;
  }
  const bool ok = robust_kept && strict_lost && minutes < 2.0;
  return {ok, std::string("gamma=0.2 always inside: ") + (robust_kept ? "yes" : "no") +
                  ", gamma=0 outside from batch 1: " + (strict_lost ? "yes" : "no") +
                  ", slowest run " + fmt("%.2f min", minutes)};
}

// ---------------------------------------------------------------------------
// A3: brute-force voting and membership

struct BruteForce {
  const RewardModel& model;

  double ret(const RewardParams& theta, const Segment& s) const {
    double total = 0.0;
    for (std::size_t t = 0; t < s.data.actions.size(); ++t)
      total += reward(model, theta, s.data.states[t], s.data.actions[t]);
    return total;
  }
  int votes(const PreferenceBatch& b, const RewardParams& theta) const {
    int v = 0;
    for (const auto& r : b.records) {
      const double j0 = ret(theta, r.seg0), j1 = ret(theta, r.seg1);
      const bool agrees = r.label == 0 ? j0 >= j1 : j1 >= j0;
      v += agrees ? 1 : 0;
    }
    return v;
  }
  bool in_cut(const PreferenceBatch& b, double gamma, const RewardParams& theta) const {
    // votes > floor((1 - gamma) N) - 1/2
    const int n = static_cast<int>(b.size());
    const int need = static_cast<int>(std::floor((1.0 - gamma) * n + 1e-9));
    return votes(b, theta) >= need;
  }
};

Trajectory random_traj(const EnvSpec& env, int len, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Trajectory t;
  for (int k = 0; k <= len; ++k) {
    State s(env.state_dim());
    for (auto& x : s) x = n(rng);
    t.states.push_back(s);
    if (k < len) t.actions.push_back(Action::Constant(1, std::clamp(n(rng), -1.0, 1.0)));
  }
  return t;
}

Outcome a3(const Options&) {
  const auto t0 = Clock::now();
  Rng rng(2024);
  const EnvSpec envs[2] = {EnvSpec::make_pointmass(), EnvSpec::make_cartpole()};
  std::uniform_int_distribution<int> size_dist(1, 12), len_dist(1, 6), coin(0, 1);
  std::uniform_real_distribution<double> gamma_dist(0.0, 1.0);
  int mismatches = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    const EnvSpec& env = envs[inst % 2];
    const RewardModel model = inst % 4 < 2 ? RewardModel::linear(env.feature_map())
                                           : RewardModel::mlp(env.feature_map(), {5, 4});
    const BruteForce bf{model};
    const RewardParams theta = random_params(model, 1.0, rng);
    const double gamma = inst % 5 == 0 ? 0.0 : gamma_dist(rng);
    BatchHistory h(gamma);
    const int batches = 1 + inst % 3;
    bool inside = true;
    for (int b = 0; b < batches; ++b) {
      PreferenceBatch batch;
      batch.batch_index = b;
      const int n = size_dist(rng);
      for (int j = 0; j < n; ++j) {
        const int len = len_dist(rng);
        Segment s0{random_traj(env, len, rng), 0, 0};
        // Occasional exact ties exercise H(0) = 1.
        Segment s1 = inst % 7 == 0 && j == 0 ? s0 : Segment{random_traj(env, len, rng), 1, 0};
        batch.records.push_back({s0, s1, coin(rng), static_cast<std::uint64_t>(j), LabelSource::Simulated});
      }
      if (votes(model, batch, theta) != bf.votes(batch, theta)) ++mismatches;
      const bool cut = in_cut(model, batch, gamma, theta);
      if (cut != bf.in_cut(batch, gamma, theta)) ++mismatches;
      inside = inside && bf.in_cut(batch, gamma, theta);
      h.append(std::move(batch));
    }
    if (in_hypothesis_space(model, h, theta) != inside) ++mismatches;
  }
  const double minutes = minutes_since(t0);
  return {mismatches == 0 && minutes < 1.0,
          std::to_string(mismatches) + " mismatches over 1000 instances in " + fmt("%.2f min", minutes)};
}

// ---------------------------------------------------------------------------
// A4: finite-difference gradients

Outcome a4(const Options&) {
  const auto t0 = Clock::now();
  Rng rng(77);
  const EnvSpec env = EnvSpec::make_cartpole();
  const RewardModel models[2] = {RewardModel::linear(env.feature_map()),
                                 RewardModel::mlp(env.feature_map(), {8, 8})};
  SmoothingConfig sm;
  double worst_obj = 0.0, worst_reward = 0.0;
  std::uniform_int_distribution<int> coin(0, 1);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-6, std::max(std::abs(a), std::abs(b))); };

  for (int point = 0; point < 50; ++point) {
    const RewardModel& model = models[point % 2];
    const RewardParams theta = random_params(model, 0.5, rng);
    BatchHistory h(0.2);
    for (int b = 0; b < 2; ++b) {
      PreferenceBatch batch;
      batch.batch_index = b;
      for (int j = 0; j < 5; ++j)
        batch.records.push_back({{random_traj(env, 4, rng), 0, 0}, {random_traj(env, 4, rng), 1, 0}, coin(rng),
                                 static_cast<std::uint64_t>(j), LabelSource::Simulated});
      h.append(std::move(batch));
    }
    const ObjectiveValue v = smoothed_log_objective(model, h, sm, theta);
    const State s = random_traj(env, 1, rng).states[0];
    const Action a = Action::Constant(1, 0.3);
    const Eigen::VectorXd g = reward_param_gradient(model, theta, s, a);
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double step = 1e-6;
      RewardParams up = theta, down = theta;
      up(i) += step;
      down(i) -= step;
      const double fd_obj = (smoothed_log_objective(model, h, sm, up).value -
                             smoothed_log_objective(model, h, sm, down).value) / (2 * step);
      const double fd_r = (reward(model, up, s, a) - reward(model, down, s, a)) / (2 * step);
      worst_obj = std::max(worst_obj, rel(v.gradient(i), fd_obj));
      worst_reward = std::max(worst_reward, rel(g(i), fd_r));
    }
  }
  const double minutes = minutes_since(t0);
  const bool ok = worst_obj < 1e-4 && worst_reward < 1e-4 && minutes < 1.0;
  return {ok, "max relative error objective " + fmt("%.2e", worst_obj) + ", reward " +
                  fmt("%.2e", worst_reward)};
}

// ---------------------------------------------------------------------------
// A5: exhaustive disagreement score

Outcome a5(const Options&) {
  int errors = 0, cases = 0;
  for (int m : {4, 8, 16, 32}) {
    for (int np = 0; np <= m; ++np) {
      ++cases;
      const double direct = 4.0 * np * (m - np) / (static_cast<double>(m) * m);
      if (disagreement_from_counts(np, m) != direct) ++errors;
      Eigen::VectorXd j0(m), j1 = Eigen::VectorXd::Zero(m);
      for (int k = 0; k < m; ++k) j0(k) = k < np ? 1.0 : -1.0;
      if (disagreement_score(j0, j1) != direct) ++errors;
    }
    if (disagreement_from_counts(0, m) != 0.0 || disagreement_from_counts(m, m) != 0.0) ++errors;
    if (disagreement_from_counts(m / 2, m) != 1.0) ++errors;
  }
  return {errors == 0, std::to_string(errors) + " errors over " + std::to_string(cases) + " counts"};
}

// ---------------------------------------------------------------------------
// A6, A9: linear recovery and correlation

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

Eigen::VectorXd mean_member(const Ensemble& e) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(e.members.front().size());
  for (const auto& t : e.members) m += t;
  return m / static_cast<double>(e.size());
}

Outcome a6(const Options& opt) {
  int clean = 0, noisy = 0;
  double minutes = 0.0;
  std::ostringstream d;
  d.precision(3);
  d << "cosines clean";
  for (int s = 0; s < opt.seeds; ++s) {
    const RunConfig c = pointmass(s, 0.0, 0.0);
    const auto t0 = Clock::now();
    const RunResult r = run_hsbc(c, silent(false));
    minutes = std::max(minutes, minutes_since(t0));
    const double cs = cosine(mean_member(r.ensemble), c.env.pointmass.true_weights);
    clean += cs > 0.9;
    d << ' ' << cs;
  }
  d << "; 20% false";
  for (int s = 0; s < opt.seeds; ++s) {
    const RunConfig c = pointmass(s, 0.2, 0.2);
    const auto t0 = Clock::now();
    const RunResult r = run_hsbc(c, silent(false));
    minutes = std::max(minutes, minutes_since(t0));
    const double cs = cosine(mean_member(r.ensemble), c.env.pointmass.true_weights);
    noisy += cs > 0.8;
    d << ' ' << cs;
  }
  const int need = (4 * opt.seeds + 4) / 5;
  d << " (queries " << pointmass(0, 0, 0).iterations * pointmass(0, 0, 0).query.batch_size << ")";
  return {clean >= need && noisy >= need && minutes < 10.0, d.str()};
}

Outcome a9(const Options& opt) {
  std::ostringstream d;
  d.precision(3);
  bool ok = true;
  for (auto [rate, bound] : {std::pair{0.0, 0.9}, std::pair{0.3, 0.6}}) {
    double total = 0.0;
    int count = 0;
    for (int s = 0; s < opt.seeds; ++s) {
      const RunConfig c = pointmass(s, rate, rate);
      const RunResult r = run_hsbc(c, silent(false));
      const RewardModel model = c.reward.build(c.env);
      const CorrelationStats st =
          pearson_correlation(model, r.ensemble, c.env, correlation_trajectories(c, model, r.ensemble));
      for (const auto& x : st.per_trajectory)
        if (x) {
          total += *x;
          ++count;
        }
    }
    const double mean = count ? total / count : 0.0;
    ok = ok && count > 0 && mean > bound;
    d << (rate == 0.0 ? "clean " : "; 30% false ") << mean << " (bound " << bound << ", " << count
      << " trajectories)";
  }
  return {ok, d.str()};
}

// ---------------------------------------------------------------------------
// A7: robustness gap against the Bradley-Terry baseline

Outcome a7(const Options& opt) {
  double h0 = 0, h30 = 0, b0 = 0, b30 = 0;
  for (int s = 0; s < opt.seeds; ++s) {
    h0 += run_hsbc(pointmass(s, 0.0, 0.0), silent(true)).final_eval.mean / opt.seeds;
    h30 += run_hsbc(pointmass(s, 0.3, 0.3), silent(true)).final_eval.mean / opt.seeds;
    b0 += run_bt_baseline(pointmass(s, 0.0, 0.0), silent(true)).final_eval.mean / opt.seeds;
    b30 += run_bt_baseline(pointmass(s, 0.3, 0.0), silent(true)).final_eval.mean / opt.seeds;
  }
  const bool ok = h30 >= b30 && (b0 - b30) > (h0 - h30);
  std::ostringstream d;
  d.precision(4);
  d << "HSBC " << h0 << " -> " << h30 << ", BT " << b0 << " -> " << b30;
  return {ok, d.str()};
}

// ---------------------------------------------------------------------------
// A8: cartpole learning

Outcome a8(const Options& opt) {
  RunConfig base = preset("cartpole");
  const double oracle = evaluate_oracle(base.env, base.eval_planner, base.eval).mean;
  bool ok = true;
  std::ostringstream d;
  d.precision(4);
  d << "oracle " << oracle << ";";
  for (int s = 0; s < opt.cartpole_seeds; ++s) {
    RunConfig c = base;
    c.seed = static_cast<std::uint64_t>(s);
    c.output_dir = (fs::path(opt.work) / ("cartpole_" + std::to_string(s))).string();
    fs::remove_all(c.output_dir);
    const auto t0 = Clock::now();
    const RunResult r = run_hsbc(c);
    const double minutes = minutes_since(t0);
    const double first = r.curve.points.front().mean;
    const double last = r.curve.points.back().mean;
    const bool seed_ok = last >= 0.5 * oracle && last > first && minutes < 45.0;
    ok = ok && seed_ok;
    d << " seed " << s << ": " << first << " -> " << last << " in " << fmt("%.1f min", minutes)
      << (r.degraded ? " (degraded)" : "") << (seed_ok ? "" : " [fail]") << ";";
    std::cerr << "A8 seed " << s << " first " << first << " final " << last << " oracle " << oracle
              << " minutes " << minutes << '\n';
  }
  return {ok, d.str()};
}

// ---------------------------------------------------------------------------
// A10: disagreement shrinkage

Outcome a10(const Options& opt) {
  double early = 0.0, late = 0.0;
  for (int s = 0; s < opt.seeds; ++s) {
    const RunConfig c = pointmass(s, 0.0, 0.0);
    const RewardModel model = c.reward.build(c.env);
    std::optional<Ensemble> first;
    Ensemble last;
    std::vector<Segment> pool;
    RunOptions o = silent(false);
    o.observer = [&](const IterationView& v) {
      if (v.iteration == 1) first = v.ensemble;
      if (v.iteration == c.iterations) {
        last = v.ensemble;
        for (const auto& e : v.buffer.entries()) pool.push_back(e.segment);
      }
    };
    run_hsbc(c, o);
    // Both ensembles are scored on the same 500 pairs drawn from the final buffer.
    Rng rng(derive_seed(static_cast<std::uint64_t>(s), 900));
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    int hi_first = 0, hi_last = 0;
    for (int k = 0; k < 500; ++k) {
      const std::size_t i = pick(rng);
      std::size_t j = pick(rng);
      while (j == i) j = pick(rng);
      hi_first += disagreement_score(model, *first, pool[i], pool[j]) > c.query.disagreement_threshold;
      hi_last += disagreement_score(model, last, pool[i], pool[j]) > c.query.disagreement_threshold;
    }
    early += hi_first / 500.0 / opt.seeds;
    late += hi_last / 500.0 / opt.seeds;
  }
  return {late < early, "fraction with DIS > eta: iteration 1 " + fmt("%.4f", early) + ", final " + fmt("%.4f", late)};
}

// ---------------------------------------------------------------------------
// A11: determinism and resumability

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int free_port() {
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return -1;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof addr;
  int port = -1;
  if (bind(fd, reinterpret_cast<sockaddr*>(&addr), len) == 0 &&
      getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0)
    port = ntohs(addr.sin_port);
  close(fd);
  return port;
}

pid_t spawn_server(const std::string& cli, const std::string& config, const std::string& out, int port) {
  const pid_t pid = fork();
  if (pid == 0) {
    const std::string bind = "127.0.0.1:" + std::to_string(port);
    const std::string log = out + ".server.log";
    if (!std::freopen(log.c_str(), "a", stderr)) _exit(126);
    execl(cli.c_str(), cli.c_str(), "serve", "--config", config.c_str(), "--out", out.c_str(), "--bind",
          bind.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  return pid;
}

void patient(httplib::Client& cli) {
  cli.set_connection_timeout(10);
  cli.set_read_timeout(30);
  cli.set_write_timeout(30);
}

std::optional<json> get_json(httplib::Client& cli, const std::string& path) {
  auto r = cli.Get(path);
  if (!r || r->status != 200) return std::nullopt;
  return json::parse(r->body);
}

/// Waits for a pending query different from `previous`.
std::optional<json> next_query(httplib::Client& cli, std::optional<std::uint64_t> previous) {
  for (int k = 0; k < 6000; ++k) {
    if (auto q = get_json(cli, "/api/v1/query"); q && !(*q)["query"].is_null()) {
      const auto id = (*q)["query"]["query_id"].get<std::uint64_t>();
      if (!previous || id != *previous) return q;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return std::nullopt;
}

Outcome a11(const Options& opt) {
  // Determinism through the file outputs.
  std::vector<std::string> logs;
  for (int run = 0; run < 2; ++run) {
    RunConfig c = pointmass(3, 0.2, 0.2);
    c.output_dir = (fs::path(opt.work) / ("determinism_" + std::to_string(run))).string();
    fs::remove_all(c.output_dir);
    run_hsbc(c);
    logs.push_back(slurp(fs::path(c.output_dir) / "preferences.jsonl"));
  }
  const bool deterministic = !logs[0].empty() && logs[0] == logs[1];

  if (opt.cli.empty() || !fs::exists(opt.cli))
    return {false, std::string("determinism ") + (deterministic ? "ok" : "FAILED") + "; CLI binary not given"};

  // Human-mode session killed with SIGKILL mid-batch, then restarted.
  const fs::path dir = fs::path(opt.work) / "session";
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  const std::string config = (fs::path(opt.work) / "session_config.json").string();
  {
    RunConfig c = preset("pointmass");
    c.oracle.kind = OracleKind::Human;
    c.iterations = 3;
    c.bootstrap_labels = 4;
    std::ofstream(config) << config_to_json(c).dump(2);
  }
  const int n = preset("pointmass").query.batch_size;
  const int answer_before_kill = n / 2;  // human labels, landing mid-batch after the bootstrap

  int port = free_port();
  pid_t pid = spawn_server(opt.cli, config, dir.string(), port);
  std::vector<std::pair<std::uint64_t, int>> accepted;
  bool protocol_ok = true;
  {
    httplib::Client cli("127.0.0.1", port);
    patient(cli);
    std::optional<std::uint64_t> prev;
    for (int k = 0; k < answer_before_kill && protocol_ok; ++k) {
      auto q = next_query(cli, prev);
      if (!q) {
        protocol_ok = false;
        break;
      }
      const auto id = (*q)["query"]["query_id"].get<std::uint64_t>();
      const int label = static_cast<int>(id % 2);
      auto r = cli.Post("/api/v1/label", json{{"query_id", id}, {"label", label}}.dump(), "application/json");
      protocol_ok = r && r->status == 200;
      if (!protocol_ok) std::cerr << "label " << id << " rejected: " << (r ? r->body : httplib::to_string(r.error())) << '\n';
      accepted.emplace_back(id, label);
      prev = id;
    }
    protocol_ok = protocol_ok && next_query(cli, prev).has_value();
  }
  kill(pid, SIGKILL);
  waitpid(pid, nullptr, 0);

  port = free_port();
  pid = spawn_server(opt.cli, config, dir.string(), port);
  bool resumed_ok = false;
  std::string note;
  {
    httplib::Client cli("127.0.0.1", port);
    patient(cli);
    auto q = next_query(cli, std::nullopt);
    if (q) {
      const int answered = (*q)["labels_answered"].get<int>();
      const bool resumed = (*q)["resumed"].get<bool>();
      const auto id = (*q)["query"]["query_id"].get<std::uint64_t>();
      bool fresh = true;
      for (const auto& [aid, l] : accepted) fresh = fresh && aid != id;
      auto dup = cli.Post("/api/v1/label", json{{"query_id", accepted.back().first}, {"label", 0}}.dump(),
                          "application/json");
      resumed_ok = resumed && fresh && answered == 4 + static_cast<int>(accepted.size()) && dup &&
                   dup->status == 409;
      note = "restart answered " + std::to_string(answered) + ", resumed " + (resumed ? "yes" : "no");
    } else {
      note = "restarted server never offered a query";
    }
  }
  kill(pid, SIGKILL);
  waitpid(pid, nullptr, 0);

  const auto log = read_preference_log((dir / "preferences.jsonl").string());
  bool retained = true;
  for (const auto& [id, label] : accepted) {
    bool found = false;
    for (const auto& p : log)
      if (p.record.query_id == id && p.record.label == label && p.record.source == LabelSource::Human) found = true;
    retained = retained && found;
  }
  const bool ok = deterministic && protocol_ok && resumed_ok && retained;
  return {ok, std::string("determinism ") + (deterministic ? "ok" : "FAILED") + "; " +
                  std::to_string(accepted.size()) + " human labels before SIGKILL, retained " +
                  (retained ? "all" : "NOT all") + "; " + note};
}

}  // namespace

int main(int argc, char** argv) {
  hsbc::retain_heap_memory();
  Options opt;
  CLI::App app{"acceptance suite"};
  app.add_option("--cli", opt.cli, "path to the hsbc command-line binary");
  app.add_option("--work", opt.work, "scratch directory");
  app.add_option("--seeds", opt.seeds, "seeds for the pointmass criteria");
  app.add_option("--cartpole-seeds", opt.cartpole_seeds, "seeds for the cartpole criterion");
  app.add_option("--only", opt.only, "criteria to run, e.g. A1 A8");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(opt.work);

  const std::vector<std::pair<std::string, std::function<Outcome(const Options&)>>> criteria = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4},  {"A5", a5},  {"A6", a6},
      {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), name) == opt.only.end()) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = fn(opt);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                minutes_since(t0) * 60.0);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
