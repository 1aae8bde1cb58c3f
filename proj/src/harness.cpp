#include "selfpred/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "selfpred/rng.hpp"

namespace selfpred {

namespace {

// Stream tags for per-instance seed derivation.
constexpr std::uint64_t kStreamMdp = 1;
constexpr std::uint64_t kStreamInit = 2;
constexpr std::uint64_t kStreamBasePolicy = 3;
constexpr std::uint64_t kStreamPerturbation = 4;
constexpr std::uint64_t kStreamFit = 5;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CellStat cell_from(const std::vector<double>& samples) {
  const int n = static_cast<int>(samples.size());
  if (n == 0) return {};
  double sum = 0.0;
  for (double s : samples) sum += s;
  const double mean = sum / n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  return {mean, 1.96 * sd / std::sqrt(static_cast<double>(n))};
}

// Index of the strictly smallest entry, or -1 when another entry is
// within kTieTol of the minimum.
int argmin_or_tie(const std::array<double, 3>& v) {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (v[i] < v[best]) best = i;
  }
  for (int i = 0; i < 3; ++i) {
    if (i != best && v[i] - v[best] <= kTieTol) return -1;
  }
  return best;
}

void check_skip_budget(const char* what, int n_skipped, int n_total) {
  if (n_skipped * 10 > n_total) {
    throw NonConvergenceError(
        std::string(what) + ": more than 10% of instances skipped",
        static_cast<double>(n_skipped) / n_total);
  }
}

std::ofstream open_output(const ExperimentConfig& cfg, const std::string& name,
                          std::string* path_out) {
  std::filesystem::create_directories(cfg.output_dir);
  const std::string path =
      (std::filesystem::path(cfg.output_dir) / name).string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  if (path_out) *path_out = path;
  return out;
}

nlohmann::json cells_to_json(const std::array<CellStat, 3>& row) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CellStat& c : row) {
    arr.push_back({{"mean", c.mean}, {"stderr", c.stderr_}});
  }
  return arr;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_states < 1 || n_actions < 1 || n_mdps < 1) {
    throw std::invalid_argument("config: dimensions and n_mdps must be >= 1");
  }
  if (k < 1 || k > n_states) {
    throw std::invalid_argument("config: need 1 <= k <= n_states");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("config: gamma must be in [0, 1)");
  }
  if (n_reward_samples < 2) {
    throw std::invalid_argument("config: n_reward_samples must be >= 2");
  }
  if (max_iters < 1 || !(grad_tol > 0.0) || retraction_period < 0) {
    throw std::invalid_argument("config: bad integrator settings");
  }
  for (double e : epsilon_list) {
    if (!(e >= 0.0 && e <= 1.0)) {
      throw std::invalid_argument("config: epsilons must lie in [0, 1]");
    }
  }
  if (format != "csv" && format != "json") {
    throw std::invalid_argument("config: format must be csv or json");
  }
}

IntegratorConfig ExperimentConfig::integrator() const {
  IntegratorConfig c;
  c.step_size = step_size > 0.0 ? step_size : 0.5 * n_states;
  c.max_iters = max_iters;
  c.grad_tol = grad_tol;
  c.retraction_period = retraction_period;
  c.adaptive = adaptive;
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  in >> j;

  ExperimentConfig cfg;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_states", cfg.n_states);
  get("n_actions", cfg.n_actions);
  get("k", cfg.k);
  get("n_mdps", cfg.n_mdps);
  get("gamma", cfg.gamma);
  get("reward_scale", cfg.reward_scale);
  get("seed", cfg.seed);
  get("epsilon_list", cfg.epsilon_list);
  get("n_reward_samples", cfg.n_reward_samples);
  get("output_dir", cfg.output_dir);
  get("format", cfg.format);
  if (j.contains("integrator")) {
    const nlohmann::json& ji = j.at("integrator");
    auto geti = [&ji](const char* key, auto& field) {
      if (ji.contains(key)) {
        field = ji.at(key).get<std::decay_t<decltype(field)>>();
      }
    };
    geti("step_size", cfg.step_size);
    geti("max_iters", cfg.max_iters);
    geti("grad_tol", cfg.grad_tol);
    geti("retraction_period", cfg.retraction_period);
    geti("adaptive", cfg.adaptive);
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["n_states"] = cfg.n_states;
  j["n_actions"] = cfg.n_actions;
  j["k"] = cfg.k;
  j["n_mdps"] = cfg.n_mdps;
  j["gamma"] = cfg.gamma;
  j["reward_scale"] = cfg.reward_scale;
  j["seed"] = cfg.seed;
  j["integrator"] = {{"step_size", cfg.step_size},
                     {"max_iters", cfg.max_iters},
                     {"grad_tol", cfg.grad_tol},
                     {"retraction_period", cfg.retraction_period},
                     {"adaptive", cfg.adaptive}};
  j["epsilon_list"] = cfg.epsilon_list;
  j["n_reward_samples"] = cfg.n_reward_samples;
  j["output_dir"] = cfg.output_dir;
  j["format"] = cfg.format;
  return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  // FNV-1a over the canonical JSON encoding.
  const std::string text = config_to_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CrossTable run_cross_objective_table(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_states;
  const Policy policy = make_uniform_policy(n, cfg.n_actions);
  const StateDistribution d_x = StateDistribution::uniform(n);
  const IntegratorConfig icfg = cfg.integrator();

  CrossTable out;
  out.degenerate = cfg.n_actions == 1;
  std::array<std::array<std::vector<double>, 3>, 3> vals;
  std::array<int, 3> wins = {0, 0, 0};

  for (int i = 0; i < cfg.n_mdps; ++i) {
    const std::uint64_t iseed = mix_seed(cfg.seed, i);
    const Mdp mdp =
        gen_random_mdp(n, cfg.n_actions, mix_seed(iseed, kStreamMdp),
                       /*symmetric=*/true, cfg.reward_scale, cfg.gamma);
    const Representation phi0 =
        orthogonal_init(n, cfg.k, mix_seed(iseed, kStreamInit));

    std::array<Eigen::MatrixXd, 3> reps;
    bool failed = false;
    for (int o = 0; o < 3; ++o) {
      try {
        const Trajectory traj =
            integrate(phi0, kAllObjectives[o], mdp, policy, d_x, icfg);
        if (!traj.converged) ++out.n_unconverged;
        reps[o] = traj.final_phi();
      } catch (const IntegrationError&) {
        failed = true;
        break;
      }
    }
    if (failed) {
      ++out.n_skipped;
      continue;
    }
    ++out.n_instances;

    for (int o = 0; o < 3; ++o) {
      std::array<double, 3> row;
      for (int r = 0; r < 3; ++r) {
        row[r] = -trace_objective(reps[r], mdp, policy, kAllObjectives[o]);
        vals[o][r].push_back(row[r]);
      }
      const int winner = argmin_or_tie(row);
      if (winner < 0) {
        ++out.n_ties;
      } else if (winner == o) {
        ++wins[o];
      }
    }
  }

  check_skip_budget("cross-table", out.n_skipped, cfg.n_mdps);
  for (int o = 0; o < 3; ++o) {
    for (int r = 0; r < 3; ++r) out.neg_trace[o][r] = cell_from(vals[o][r]);
    out.pr_best[o] =
        out.n_instances > 0
            ? static_cast<double>(wins[o]) / out.n_instances
            : 0.0;
  }
  return out;
}

ValueMseTable run_value_mse_table(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_states;
  const Policy policy = make_uniform_policy(n, cfg.n_actions);
  const StateDistribution d_x = StateDistribution::uniform(n);
  const IntegratorConfig icfg = cfg.integrator();

  ValueMseTable out;
  std::array<std::array<std::vector<double>, 3>, 3> vals;
  std::array<std::array<int, 3>, 3> wins{};

  for (int i = 0; i < cfg.n_mdps; ++i) {
    const std::uint64_t iseed = mix_seed(cfg.seed, i);
    const Mdp mdp =
        gen_random_mdp(n, cfg.n_actions, mix_seed(iseed, kStreamMdp),
                       /*symmetric=*/true, cfg.reward_scale, cfg.gamma);
    const Representation phi0 =
        orthogonal_init(n, cfg.k, mix_seed(iseed, kStreamInit));

    std::array<Eigen::MatrixXd, 3> reps;
    bool failed = false;
    for (int o = 0; o < 3; ++o) {
      try {
        const Trajectory traj =
            integrate(phi0, kAllObjectives[o], mdp, policy, d_x, icfg);
        if (!traj.converged) ++out.n_unconverged;
        reps[o] = traj.final_phi();
      } catch (const IntegrationError&) {
        failed = true;
        break;
      }
    }
    if (failed) {
      ++out.n_skipped;
      continue;
    }
    ++out.n_instances;

    // Shared reward draws across representations pair the comparisons.
    const std::uint64_t fit_seed = mix_seed(iseed, kStreamFit);
    std::array<MseReport, 3> reports;
    for (int r = 0; r < 3; ++r) {
      reports[r] = fit_all_mse(reps[r], mdp, policy, cfg.n_reward_samples,
                               fit_seed, cfg.reward_scale);
    }
    for (int row = 0; row < 3; ++row) {
      std::array<double, 3> v;
      for (int r = 0; r < 3; ++r) {
        const MseReport& rep = reports[r];
        v[r] = row == 0 ? rep.v_mse : row == 1 ? rep.q_mse : rep.adv_mse;
        vals[row][r].push_back(v[r]);
      }
      const int winner = argmin_or_tie(v);
      if (winner < 0) {
        ++out.n_ties;
      } else {
        ++wins[row][winner];
      }
    }
  }

  check_skip_budget("value-mse", out.n_skipped, cfg.n_mdps);
  for (int row = 0; row < 3; ++row) {
    for (int r = 0; r < 3; ++r) {
      out.mse[row][r] = cell_from(vals[row][r]);
      out.pr_best[row][r] =
          out.n_instances > 0
              ? static_cast<double>(wins[row][r]) / out.n_instances
              : 0.0;
    }
  }
  return out;
}

std::vector<RobustnessRow> run_robustness_table(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.epsilon_list.empty()) {
    throw std::invalid_argument("robustness: epsilon_list must be nonempty");
  }
  const int n = cfg.n_states;
  const int m = cfg.n_actions;
  const StateDistribution d_x = StateDistribution::uniform(n);
  // Perturbed policies are state-dependent, so the induced dynamics are
  // not symmetric and the trace is not a certified Lyapunov function;
  // run without adaptive halving.
  IntegratorConfig icfg = cfg.integrator();
  icfg.adaptive = false;

  std::vector<RobustnessRow> rows;
  for (std::size_t e = 0; e < cfg.epsilon_list.size(); ++e) {
    const double eps = cfg.epsilon_list[e];
    RobustnessRow row;
    row.epsilon = eps;
    std::array<std::vector<double>, 3> samples;
    std::array<int, 3> wins = {0, 0, 0};

    for (int run = 0; run < cfg.n_mdps; ++run) {
      const std::uint64_t rseed = mix_seed(mix_seed(cfg.seed, 0xE0 + e), run);
      const Mdp mdp =
          gen_random_mdp(n, m, mix_seed(rseed, kStreamMdp),
                         /*symmetric=*/true, cfg.reward_scale, cfg.gamma);

      // pi is a seeded deterministic policy mixed epsilon-greedily with
      // uniform; pi' is an independent draw of the same construction.
      // With epsilon 0 there is no perturbation and pi' is pi itself.
      Rng prng(mix_seed(rseed, kStreamBasePolicy));
      Eigen::MatrixXd det = Eigen::MatrixXd::Zero(n, m);
      for (int x = 0; x < n; ++x) det(x, prng.below(m)) = 1.0;
      const Policy pi = perturb_policy(Policy{det}, eps);

      Rng srng(mix_seed(rseed, kStreamPerturbation));
      Eigen::MatrixXd det2 = Eigen::MatrixXd::Zero(n, m);
      for (int x = 0; x < n; ++x) det2(x, srng.below(m)) = 1.0;
      const Policy pi_prime =
          eps == 0.0 ? pi : perturb_policy(Policy{det2}, eps);

      const Representation phi0 =
          orthogonal_init(n, cfg.k, mix_seed(rseed, kStreamInit));

      std::array<double, 3> delta;
      bool failed = false;
      for (int o = 0; o < 3; ++o) {
        try {
          const Trajectory ta =
              integrate(phi0, kAllObjectives[o], mdp, pi, d_x, icfg);
          const Trajectory tb =
              integrate(phi0, kAllObjectives[o], mdp, pi_prime, d_x, icfg);
          delta[o] =
              principal_angles(ta.final_phi(), tb.final_phi()).grassmann;
        } catch (const IntegrationError&) {
          failed = true;
          break;
        }
      }
      if (failed) {
        ++row.n_skipped;
        continue;
      }
      ++row.n_runs;
      for (int o = 0; o < 3; ++o) samples[o].push_back(delta[o]);
      const int winner = argmin_or_tie(delta);
      if (winner < 0) {
        ++row.n_ties;
      } else {
        ++wins[winner];
      }
    }

    check_skip_budget("robustness", row.n_skipped, cfg.n_mdps);
    for (int o = 0; o < 3; ++o) {
      row.delta[o] = cell_from(samples[o]);
      row.pr_smallest[o] =
          row.n_runs > 0 ? static_cast<double>(wins[o]) / row.n_runs : 0.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

TraceRatioCurves run_trace_ratio_curves(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_states;
  const Policy policy = make_uniform_policy(n, cfg.n_actions);
  const StateDistribution d_x = StateDistribution::uniform(n);
  // Non-symmetric mode: the trace objective is not a Lyapunov function,
  // so adaptive halving is off.
  IntegratorConfig icfg = cfg.integrator();
  icfg.adaptive = false;

  TraceRatioCurves out;
  const int stride = std::max(1, cfg.max_iters / 200);
  for (int it = 0; it <= cfg.max_iters; it += stride) out.grid.push_back(it);

  const ObjectiveKind kinds[2] = {ObjectiveKind::Pi, ObjectiveKind::Ac};
  for (int run = 0; run < cfg.n_mdps; ++run) {
    const std::uint64_t rseed = mix_seed(cfg.seed, run);
    const Mdp mdp =
        gen_random_mdp(n, cfg.n_actions, mix_seed(rseed, kStreamMdp),
                       /*symmetric=*/false, cfg.reward_scale, cfg.gamma);
    const Representation phi0 =
        orthogonal_init(n, cfg.k, mix_seed(rseed, kStreamInit));
    ++out.n_runs;

    for (int o = 0; o < 2; ++o) {
      // Reference subspace: top-k eigenvectors of the symmetrized squared
      // dynamics for this objective.
      Eigen::MatrixXd msq;
      if (kinds[o] == ObjectiveKind::Pi) {
        const Eigen::MatrixXd tpi = induced_transition(mdp, policy);
        const Eigen::MatrixXd s = 0.5 * (tpi + tpi.transpose());
        msq = s * s;
      } else {
        msq = Eigen::MatrixXd::Zero(n, n);
        for (const Eigen::MatrixXd& t : mdp.transitions) {
          const Eigen::MatrixXd s = 0.5 * (t + t.transpose());
          msq += s * s;
        }
        msq /= cfg.n_actions;
      }
      const Eigen::MatrixXd ref =
          sym_eigendecomposition(msq).basis.leftCols(cfg.k);
      const double f_ref = trace_objective(ref, mdp, policy, kinds[o]);
      if (!(f_ref > 0.0)) {
        ++out.n_excluded;
        continue;
      }

      const Trajectory traj =
          integrate(phi0, kinds[o], mdp, policy, d_x, icfg);
      std::vector<double> curve;
      curve.reserve(out.grid.size());
      for (int it : out.grid) {
        double f;
        if (it == 0) {
          f = traj.initial_trace;
        } else if (it <= traj.iterations) {
          f = traj.diagnostics[it - 1].trace_value;
        } else {
          f = traj.final_trace;  // curve ended early; hold the final value
        }
        curve.push_back(f / f_ref);
      }
      out.init_ratios[o].push_back(traj.initial_trace / f_ref);
      out.final_ratios[o].push_back(traj.final_trace / f_ref);
      out.curves[o].push_back(std::move(curve));
    }
  }

  for (int o = 0; o < 2; ++o) {
    const std::size_t n_curves = out.curves[o].size();
    out.median[o].assign(out.grid.size(), 0.0);
    if (n_curves == 0) continue;
    std::vector<double> column(n_curves);
    for (std::size_t g = 0; g < out.grid.size(); ++g) {
      for (std::size_t c = 0; c < n_curves; ++c) {
        column[c] = out.curves[o][c][g];
      }
      std::nth_element(column.begin(), column.begin() + n_curves / 2,
                       column.end());
      double med = column[n_curves / 2];
      if (n_curves % 2 == 0) {
        const double lower =
            *std::max_element(column.begin(), column.begin() + n_curves / 2);
        med = 0.5 * (med + lower);
      }
      out.median[o][g] = med;
    }
  }
  return out;
}

EigenPickingDemo run_eigen_picking_demo(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.n_actions != 2) {
    throw std::invalid_argument(
        "eigen-demo: the picking demo uses a two-action fixture");
  }
  EigenPickingDemo demo;
  demo.mdp = gen_common_eigenbasis_family(cfg.n_states, 2,
                                          mix_seed(cfg.seed, kStreamMdp),
                                          cfg.gamma, cfg.reward_scale);
  demo.report = joint_eigendecomposition(demo.mdp);
  annotate_report(demo.report, Eigen::VectorXd::Constant(2, 0.5), cfg.k);

  const Eigen::VectorXd& som =
      demo.report.criterion_scores.at(kCriterionSquareOfMean);
  const Eigen::VectorXd& mos =
      demo.report.criterion_scores.at(kCriterionMeanOfSquares);
  const Eigen::VectorXd& var =
      demo.report.criterion_scores.at(kCriterionVariance);
  demo.decomposition_residual = (mos - som - var).cwiseAbs().maxCoeff();
  return demo;
}

std::vector<std::string> write_cross_table(const CrossTable& t,
                                           const ExperimentConfig& cfg) {
  std::vector<std::string> paths;
  std::string path;
  if (cfg.format == "csv") {
    std::ofstream out = open_output(cfg, "cross_table.csv", &path);
    out << "objective,mean_pi,stderr_pi,mean_ac,stderr_ac,mean_var,"
           "stderr_var,pr_best_diagonal\n";
    for (int o = 0; o < 3; ++o) {
      out << objective_name(kAllObjectives[o]);
      for (int r = 0; r < 3; ++r) {
        out << ',' << fmt(t.neg_trace[o][r].mean) << ','
            << fmt(t.neg_trace[o][r].stderr_);
      }
      out << ',' << fmt(t.pr_best[o]) << '\n';
    }
  } else {
    nlohmann::json j;
    for (int o = 0; o < 3; ++o) {
      const std::string name = objective_name(kAllObjectives[o]);
      j["neg_trace"][name] = cells_to_json(t.neg_trace[o]);
      j["pr_best"][name] = t.pr_best[o];
    }
    j["n_instances"] = t.n_instances;
    j["n_skipped"] = t.n_skipped;
    j["n_unconverged"] = t.n_unconverged;
    j["n_ties"] = t.n_ties;
    j["degenerate"] = t.degenerate;
    std::ofstream out = open_output(cfg, "cross_table.json", &path);
    out << j.dump(2) << '\n';
  }
  paths.push_back(path);
  return paths;
}

std::vector<std::string> write_value_mse_table(const ValueMseTable& t,
                                               const ExperimentConfig& cfg) {
  static const char* kRows[3] = {"v", "q", "advantage"};
  std::vector<std::string> paths;
  std::string path;
  if (cfg.format == "csv") {
    std::ofstream out = open_output(cfg, "value_mse.csv", &path);
    out << "target,mean_pi,stderr_pi,pr_best_pi,mean_ac,stderr_ac,"
           "pr_best_ac,mean_var,stderr_var,pr_best_var\n";
    for (int row = 0; row < 3; ++row) {
      out << kRows[row];
      for (int r = 0; r < 3; ++r) {
        out << ',' << fmt(t.mse[row][r].mean) << ','
            << fmt(t.mse[row][r].stderr_) << ',' << fmt(t.pr_best[row][r]);
      }
      out << '\n';
    }
  } else {
    nlohmann::json j;
    for (int row = 0; row < 3; ++row) {
      j["mse"][kRows[row]] = cells_to_json(t.mse[row]);
      j["pr_best"][kRows[row]] = t.pr_best[row];
    }
    j["n_instances"] = t.n_instances;
    j["n_skipped"] = t.n_skipped;
    j["n_unconverged"] = t.n_unconverged;
    j["n_ties"] = t.n_ties;
    std::ofstream out = open_output(cfg, "value_mse.json", &path);
    out << j.dump(2) << '\n';
  }
  paths.push_back(path);
  return paths;
}

std::vector<std::string> write_robustness_table(
    const std::vector<RobustnessRow>& rows, const ExperimentConfig& cfg) {
  std::vector<std::string> paths;
  std::string path;
  if (cfg.format == "csv") {
    std::ofstream out = open_output(cfg, "robustness.csv", &path);
    out << "epsilon,delta_pi_mean,delta_pi_stderr,pr_smallest_pi,"
           "delta_ac_mean,delta_ac_stderr,pr_smallest_ac,"
           "delta_var_mean,delta_var_stderr,pr_smallest_var,"
           "n_runs,n_skipped,n_ties\n";
    for (const RobustnessRow& r : rows) {
      out << fmt(r.epsilon);
      for (int o = 0; o < 3; ++o) {
        out << ',' << fmt(r.delta[o].mean) << ',' << fmt(r.delta[o].stderr_)
            << ',' << fmt(r.pr_smallest[o]);
      }
      out << ',' << r.n_runs << ',' << r.n_skipped << ',' << r.n_ties << '\n';
    }
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const RobustnessRow& r : rows) {
      nlohmann::json jr;
      jr["epsilon"] = r.epsilon;
      for (int o = 0; o < 3; ++o) {
        const std::string name = objective_name(kAllObjectives[o]);
        jr["delta"][name] = {{"mean", r.delta[o].mean},
                             {"stderr", r.delta[o].stderr_}};
        jr["pr_smallest"][name] = r.pr_smallest[o];
      }
      jr["n_runs"] = r.n_runs;
      jr["n_skipped"] = r.n_skipped;
      jr["n_ties"] = r.n_ties;
      arr.push_back(std::move(jr));
    }
    std::ofstream out = open_output(cfg, "robustness.json", &path);
    out << arr.dump(2) << '\n';
  }
  paths.push_back(path);
  return paths;
}

std::vector<std::string> write_trace_ratio_curves(const TraceRatioCurves& t,
                                                  const ExperimentConfig& cfg) {
  static const char* kNames[2] = {"pi", "ac"};
  std::vector<std::string> paths;
  std::string path;
  if (cfg.format == "csv") {
    std::ofstream out = open_output(cfg, "trace_ratio.csv", &path);
    out << "objective,series,iteration,ratio\n";
    for (int o = 0; o < 2; ++o) {
      for (std::size_t c = 0; c < t.curves[o].size(); ++c) {
        for (std::size_t g = 0; g < t.grid.size(); ++g) {
          out << kNames[o] << ",run-" << c << ',' << t.grid[g] << ','
              << fmt(t.curves[o][c][g]) << '\n';
        }
      }
      for (std::size_t g = 0; g < t.grid.size(); ++g) {
        out << kNames[o] << ",median," << t.grid[g] << ','
            << fmt(t.median[o][g]) << '\n';
      }
    }
  } else {
    nlohmann::json j;
    j["grid"] = t.grid;
    for (int o = 0; o < 2; ++o) {
      j["curves"][kNames[o]] = t.curves[o];
      j["median"][kNames[o]] = t.median[o];
      j["init_ratios"][kNames[o]] = t.init_ratios[o];
      j["final_ratios"][kNames[o]] = t.final_ratios[o];
    }
    j["n_runs"] = t.n_runs;
    j["n_excluded"] = t.n_excluded;
    std::ofstream out = open_output(cfg, "trace_ratio.json", &path);
    out << j.dump(2) << '\n';
  }
  paths.push_back(path);
  return paths;
}

std::vector<std::string> write_eigen_picking_demo(const EigenPickingDemo& d,
                                                  const ExperimentConfig& cfg) {
  std::vector<std::string> paths;
  std::string path;

  const Eigen::VectorXd& som =
      d.report.criterion_scores.at(kCriterionSquareOfMean);
  const Eigen::VectorXd& mos =
      d.report.criterion_scores.at(kCriterionMeanOfSquares);
  const Eigen::VectorXd& var =
      d.report.criterion_scores.at(kCriterionVariance);
  auto picked = [&d](const char* criterion, int index) {
    const std::vector<int>& idx = d.report.topk_indices.at(criterion);
    return std::find(idx.begin(), idx.end(), index) != idx.end() ? 1 : 0;
  };

  if (cfg.format == "csv") {
    std::ofstream out = open_output(cfg, "eigen_demo.csv", &path);
    out << "index,eigval_a0,eigval_a1,square_of_mean,mean_of_squares,"
           "variance,picked_pi,picked_ac,picked_var\n";
    for (int i = 0; i < som.size(); ++i) {
      out << i << ',' << fmt(d.report.eigvals(0, i)) << ','
          << fmt(d.report.eigvals(1, i)) << ',' << fmt(som(i)) << ','
          << fmt(mos(i)) << ',' << fmt(var(i)) << ','
          << picked(kCriterionSquareOfMean, i) << ','
          << picked(kCriterionMeanOfSquares, i) << ','
          << picked(kCriterionVariance, i) << '\n';
    }
  } else {
    std::ofstream out = open_output(cfg, "eigen_demo.json", &path);
    out << spectral_report_to_json(d.report) << '\n';
  }
  paths.push_back(path);

  std::string report_path;
  std::ofstream report = open_output(cfg, "spectral_report.json", &report_path);
  report << spectral_report_to_json(d.report) << '\n';
  paths.push_back(report_path);

  std::string mdp_path;
  std::ofstream mdp_out = open_output(cfg, "mdp.json", &mdp_path);
  mdp_out << mdp_to_json(d.mdp) << '\n';
  paths.push_back(mdp_path);
  return paths;
}

std::string write_manifest(const ExperimentConfig& cfg,
                           const std::string& command, int n_skipped,
                           const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = nlohmann::json::parse(config_to_json(cfg));
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  j["config_hash"] = hash;
  j["seed"] = cfg.seed;
  j["n_skipped"] = n_skipped;
  j["version"] = kVersion;
  std::vector<std::string> names;
  names.reserve(outputs.size());
  for (const std::string& p : outputs) {
    names.push_back(std::filesystem::path(p).filename().string());
  }
  j["outputs"] = names;

  std::string path;
  std::ofstream out = open_output(cfg, "manifest.json", &path);
  out << j.dump(2) << '\n';
  return path;
}

}  // namespace selfpred
