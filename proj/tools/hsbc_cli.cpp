#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hsbc/config.hpp"
#include "hsbc/errors.hpp"
#include "hsbc/harness.hpp"
#include "hsbc/io.hpp"
#include "hsbc/session.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset = "pointmass";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> false_rate;
  std::optional<double> gamma;
  std::optional<int> iterations;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--preset", f.preset, "base preset when no --config is given");
  cmd->add_option("--seed", f.seed, "run seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--false-rate", f.false_rate, "fraction of labels flipped per batch")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--gamma", f.gamma, "conservativeness level")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--iterations", f.iterations, "iteration budget")->check(CLI::NonNegativeNumber);
}

hsbc::RunConfig resolve(const CommonFlags& f) {
  hsbc::RunConfig c = f.config_path.empty() ? hsbc::preset(f.preset) : hsbc::load_config(f.config_path);
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.false_rate) hsbc::apply_false_rate(c, *f.false_rate);
  if (f.gamma) c.gamma = *f.gamma;
  if (f.iterations) {
    c.iterations = *f.iterations;
    c.iterations_from_false_rate = false;
  }
  c.validate();
  return c;
}

void print_result(const hsbc::RunResult& r) {
  for (const auto& p : r.curve.points)
    std::printf("iteration %3d  queries %4d  return %10.4f +- %.4f\n", p.iteration, p.queries, p.mean,
                p.stddev);
  std::printf("final return %.4f +- %.4f over %d queries%s\n", r.final_eval.mean,
              r.final_eval.stddev, r.queries, r.degraded ? " (degraded)" : "");
}

}  // namespace

int main(int argc, char** argv) {
  hsbc::retain_heap_memory();
  CLI::App app{"HSBC reward learning from batched preference cuts"};
  app.require_subcommand(1);

  CommonFlags run_flags, base_flags, eval_flags, serve_flags;
  auto* run = app.add_subcommand("run", "learn a reward with batch cutting");
  add_common(run, run_flags);
  auto* baseline = app.add_subcommand("baseline", "learn a reward with the Bradley-Terry baseline");
  add_common(baseline, base_flags);

  auto* eval = app.add_subcommand("eval", "evaluate an ensemble checkpoint or the oracle planner");
  add_common(eval, eval_flags);
  std::string checkpoint;
  bool oracle = false;
  eval->add_option("--checkpoint", checkpoint, "ensemble checkpoint file")->check(CLI::ExistingFile);
  eval->add_flag("--oracle", oracle, "plan with the ground-truth reward instead");

  auto* serve = app.add_subcommand("serve", "human-labeled run behind the HTTP session service");
  add_common(serve, serve_flags);
  std::string bind = "127.0.0.1:8080";
  serve->add_option("--bind", bind, "host:port to listen on");

  auto* show = app.add_subcommand("preset", "print a preset configuration as JSON");
  std::string preset_name = "pointmass";
  show->add_option("name", preset_name, "preset name");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run || *baseline) {
      const auto& flags = *run ? run_flags : base_flags;
      const hsbc::RunConfig c = resolve(flags);
      const auto result = *run ? hsbc::run_hsbc(c) : hsbc::run_bt_baseline(c);
      print_result(result);
    } else if (*eval) {
      const hsbc::RunConfig c = resolve(eval_flags);
      if (oracle == !checkpoint.empty()) throw hsbc::ConfigError("eval needs exactly one of --checkpoint or --oracle");
      if (oracle) {
        const auto r = hsbc::evaluate_oracle(c.env, c.eval_planner, c.eval);
        std::printf("oracle return %.4f +- %.4f\n", r.mean, r.stddev);
      } else {
        const auto model = c.reward.build(c.env);
        const auto ensemble = hsbc::read_ensemble(checkpoint);
        for (const auto& theta : ensemble.members) model.check_params(theta);
        const auto r = hsbc::evaluate(c.env, model, ensemble, c.eval_planner, c.eval);
        const auto corr = hsbc::pearson_correlation(
            model, ensemble, c.env, hsbc::correlation_trajectories(c, model, ensemble));
        std::printf("return %.4f +- %.4f\ncorrelation %.4f +- %.4f (%d undefined)\n", r.mean,
                    r.stddev, corr.mean, corr.stddev, corr.undefined);
      }
    } else if (*serve) {
      hsbc::RunConfig c = resolve(serve_flags);
      if (c.oracle.kind != hsbc::OracleKind::Human)
        std::cerr << "note: serving with oracle kind '" << hsbc::to_string(c.oracle.kind)
                  << "' replaced by the human labeler\n";
      c.oracle.kind = hsbc::OracleKind::Human;
      const auto colon = bind.rfind(':');
      if (colon == std::string::npos) throw hsbc::ConfigError("--bind expects host:port");
      hsbc::serve_session(c, bind.substr(0, colon), std::stoi(bind.substr(colon + 1)));
    } else if (*show) {
      std::cout << hsbc::config_to_json(hsbc::preset(preset_name)).dump(2) << '\n';
    }
  } catch (const hsbc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
