#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selfpred/harness.hpp"

namespace {

using selfpred::ExperimentConfig;

struct CliState {
  std::string config_path;
  ExperimentConfig cfg;
};

// Registers --config plus per-field overrides on a subcommand. Overrides
// are applied after the config file is loaded.
void add_common_options(CLI::App* app, CliState& state) {
  app->add_option("--config", state.config_path, "JSON config file");
  app->add_option("--n-states", state.cfg.n_states, "number of states");
  app->add_option("--n-actions", state.cfg.n_actions, "number of actions");
  app->add_option("--k", state.cfg.k, "representation dimension");
  app->add_option("--n-mdps", state.cfg.n_mdps, "instances (or runs) per table");
  app->add_option("--gamma", state.cfg.gamma, "discount factor");
  app->add_option("--reward-scale", state.cfg.reward_scale, "reward std scale");
  app->add_option("--seed", state.cfg.seed, "master seed");
  app->add_option("--n-reward-samples", state.cfg.n_reward_samples,
                  "Monte Carlo reward draws per fit");
  app->add_option("--epsilons", state.cfg.epsilon_list,
                  "policy perturbation strengths");
  app->add_option("--step-size", state.cfg.step_size,
                  "integrator step (<=0 selects 0.5 * n_states)");
  app->add_option("--max-iters", state.cfg.max_iters, "integrator iteration cap");
  app->add_option("--grad-tol", state.cfg.grad_tol, "integrator stopping tolerance");
  app->add_option("--retraction-period", state.cfg.retraction_period,
                  "re-orthonormalize every N steps (0 = never)");
  app->add_flag("--adaptive,!--no-adaptive", state.cfg.adaptive,
                "halve the step on trace decrease");
  app->add_option("--out", state.cfg.output_dir, "output directory");
  app->add_option("--format", state.cfg.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
}

// Loads the config file (if any), then re-applies command-line overrides.
void finalize_config(const CLI::App* app, CliState& state) {
  if (!state.config_path.empty()) {
    ExperimentConfig loaded = selfpred::load_config(state.config_path);
    ExperimentConfig overrides = state.cfg;
    state.cfg = loaded;
    auto used = [app](const char* name) {
      return app->count(name) > 0;
    };
    if (used("--n-states")) state.cfg.n_states = overrides.n_states;
    if (used("--n-actions")) state.cfg.n_actions = overrides.n_actions;
    if (used("--k")) state.cfg.k = overrides.k;
    if (used("--n-mdps")) state.cfg.n_mdps = overrides.n_mdps;
    if (used("--gamma")) state.cfg.gamma = overrides.gamma;
    if (used("--reward-scale")) state.cfg.reward_scale = overrides.reward_scale;
    if (used("--seed")) state.cfg.seed = overrides.seed;
    if (used("--n-reward-samples")) {
      state.cfg.n_reward_samples = overrides.n_reward_samples;
    }
    if (used("--epsilons")) state.cfg.epsilon_list = overrides.epsilon_list;
    if (used("--step-size")) state.cfg.step_size = overrides.step_size;
    if (used("--max-iters")) state.cfg.max_iters = overrides.max_iters;
    if (used("--grad-tol")) state.cfg.grad_tol = overrides.grad_tol;
    if (used("--retraction-period")) {
      state.cfg.retraction_period = overrides.retraction_period;
    }
    if (used("--adaptive") || used("--no-adaptive")) {
      state.cfg.adaptive = overrides.adaptive;
    }
    if (used("--out")) state.cfg.output_dir = overrides.output_dir;
    if (used("--format")) state.cfg.format = overrides.format;
  }
  state.cfg.validate();
}

void print_written(const std::vector<std::string>& paths,
                   const std::string& manifest) {
  for (const std::string& p : paths) std::cout << "wrote " << p << "\n";
  std::cout << "wrote " << manifest << "\n";
}

int run_cross_table(CliState& state) {
  const selfpred::CrossTable t = selfpred::run_cross_objective_table(state.cfg);
  std::printf("cross-objective table (%d instances, %d skipped, %d ties%s)\n",
              t.n_instances, t.n_skipped, t.n_ties,
              t.degenerate ? ", degenerate single-action family" : "");
  std::printf("%-10s %12s %12s %12s %10s\n", "objective", "phi_pi", "phi_ac",
              "phi_var", "pr_best");
  for (int o = 0; o < 3; ++o) {
    std::printf("-f_%-7s %12.4f %12.4f %12.4f %10.2f\n",
                selfpred::objective_name(selfpred::kAllObjectives[o]),
                t.neg_trace[o][0].mean, t.neg_trace[o][1].mean,
                t.neg_trace[o][2].mean, t.pr_best[o]);
  }
  const auto paths = selfpred::write_cross_table(t, state.cfg);
  print_written(paths, selfpred::write_manifest(state.cfg, "cross-table",
                                                t.n_skipped, paths));
  return 0;
}

int run_value_mse(CliState& state) {
  const selfpred::ValueMseTable t = selfpred::run_value_mse_table(state.cfg);
  static const char* kRows[3] = {"V-MSE", "Q-MSE", "Adv-MSE"};
  std::printf("value-mse table (%d instances, %d skipped, %d ties)\n",
              t.n_instances, t.n_skipped, t.n_ties);
  std::printf("%-10s %12s %12s %12s\n", "target", "phi_pi", "phi_ac",
              "phi_var");
  for (int row = 0; row < 3; ++row) {
    std::printf("%-10s %12.4f %12.4f %12.4f\n", kRows[row], t.mse[row][0].mean,
                t.mse[row][1].mean, t.mse[row][2].mean);
  }
  const auto paths = selfpred::write_value_mse_table(t, state.cfg);
  print_written(paths, selfpred::write_manifest(state.cfg, "value-mse",
                                                t.n_skipped, paths));
  return 0;
}

int run_robustness(CliState& state) {
  const auto rows = selfpred::run_robustness_table(state.cfg);
  std::printf("robustness table (%d runs per epsilon)\n",
              rows.empty() ? 0 : rows.front().n_runs);
  std::printf("%-10s %12s %12s %12s %22s\n", "epsilon", "delta_pi", "delta_ac",
              "delta_var", "pr_smallest(pi/ac/var)");
  int skipped = 0;
  for (const auto& r : rows) {
    std::printf("%-10.3g %12.4f %12.4f %12.4f     %.2f / %.2f / %.2f\n",
                r.epsilon, r.delta[0].mean, r.delta[1].mean, r.delta[2].mean,
                r.pr_smallest[0], r.pr_smallest[1], r.pr_smallest[2]);
    skipped += r.n_skipped;
  }
  const auto paths = selfpred::write_robustness_table(rows, state.cfg);
  print_written(paths, selfpred::write_manifest(state.cfg, "robustness",
                                                skipped, paths));
  return 0;
}

int run_trace_ratio(CliState& state) {
  const selfpred::TraceRatioCurves t =
      selfpred::run_trace_ratio_curves(state.cfg);
  auto median_of = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  std::printf("trace-ratio curves (%d runs, %d excluded)\n", t.n_runs,
              t.n_excluded);
  std::printf("pi: median ratio %.4f (init) -> %.4f (final)\n",
              median_of(t.init_ratios[0]), median_of(t.final_ratios[0]));
  std::printf("ac: median ratio %.4f (init) -> %.4f (final)\n",
              median_of(t.init_ratios[1]), median_of(t.final_ratios[1]));
  const auto paths = selfpred::write_trace_ratio_curves(t, state.cfg);
  print_written(paths, selfpred::write_manifest(state.cfg, "trace-ratio",
                                                t.n_excluded, paths));
  return 0;
}

int run_eigen_demo(CliState& state) {
  const selfpred::EigenPickingDemo d =
      selfpred::run_eigen_picking_demo(state.cfg);
  std::printf("eigen-picking demo (n=%d, k=%d)\n", state.cfg.n_states,
              state.cfg.k);
  std::printf("score decomposition residual (ac - pi - var): %.3e\n",
              d.decomposition_residual);
  for (const char* crit :
       {selfpred::kCriterionSquareOfMean, selfpred::kCriterionMeanOfSquares,
        selfpred::kCriterionVariance}) {
    std::printf("%-16s picks:", crit);
    for (int i : d.report.topk_indices.at(crit)) std::printf(" %d", i);
    std::printf("\n");
  }
  const auto paths = selfpred::write_eigen_picking_demo(d, state.cfg);
  print_written(paths,
                selfpred::write_manifest(state.cfg, "eigen-demo", 0, paths));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-predictive representation dynamics on tabular MDPs"};
  app.require_subcommand(1);

  CliState cross, mse, robust, ratio, demo;
  CLI::App* c1 = app.add_subcommand(
      "cross-table", "negative trace objectives across representations");
  add_common_options(c1, cross);
  CLI::App* c2 = app.add_subcommand(
      "value-mse", "V/Q/advantage fitting errors per representation");
  add_common_options(c2, mse);
  CLI::App* c3 = app.add_subcommand(
      "robustness", "representation shift under policy perturbations");
  add_common_options(c3, robust);
  robust.cfg.n_mdps = 200;
  CLI::App* c4 = app.add_subcommand(
      "trace-ratio", "trace ratio curves on non-symmetric MDPs");
  add_common_options(c4, ratio);
  CLI::App* c5 = app.add_subcommand(
      "eigen-demo", "per-eigenvector criterion scores and top-k picks");
  add_common_options(c5, demo);
  demo.cfg.n_actions = 2;
  demo.cfg.n_states = 8;

  CLI11_PARSE(app, argc, argv);

  try {
    if (c1->parsed()) {
      finalize_config(c1, cross);
      return run_cross_table(cross);
    }
    if (c2->parsed()) {
      finalize_config(c2, mse);
      return run_value_mse(mse);
    }
    if (c3->parsed()) {
      finalize_config(c3, robust);
      return run_robustness(robust);
    }
    if (c4->parsed()) {
      finalize_config(c4, ratio);
      return run_trace_ratio(ratio);
    }
    if (c5->parsed()) {
      finalize_config(c5, demo);
      return run_eigen_demo(demo);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
