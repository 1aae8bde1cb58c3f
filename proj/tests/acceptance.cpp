// Acceptance suite: end-to-end release criteria, one pass/fail line each.
// Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "selfpred/harness.hpp"

using namespace selfpred;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

ExperimentConfig paper_defaults() {
  ExperimentConfig cfg;
  cfg.n_states = 10;
  cfg.n_actions = 4;
  cfg.k = 4;
  cfg.n_mdps = 100;
  cfg.seed = 20240601ULL;
  cfg.output_dir = "acceptance_out";
  return cfg;
}

// ---- 1. Cross-objective table ----------------------------------------------

Outcome criterion_cross_table() {
  const auto start = std::chrono::steady_clock::now();
  const CrossTable t = run_cross_objective_table(paper_defaults());
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "diag Pr(best) = %.2f/%.2f/%.2f (need >= 0.95/0.95/0.99), "
                "%d skipped, %.1fs (budget 300s)",
                t.pr_best[0], t.pr_best[1], t.pr_best[2], t.n_skipped, secs);
  const bool pass = t.pr_best[0] >= 0.95 && t.pr_best[1] >= 0.95 &&
                    t.pr_best[2] >= 0.99 && secs < 300.0;
  return {pass, buf};
}

// ---- 2. Value-MSE table ------------------------------------------------------

Outcome criterion_value_mse() {
  const ValueMseTable t = run_value_mse_table(paper_defaults());
  const double pr_var_adv = t.pr_best[2][2];
  const double adv_pi = t.mse[2][0].mean;
  const double adv_ac = t.mse[2][1].mean;
  const double adv_var = t.mse[2][2].mean;
  const bool ordering = adv_var < adv_ac && adv_ac < adv_pi;
  const bool v_ratio = t.mse[0][2].mean >= 100.0 * t.mse[0][0].mean &&
                       t.mse[0][2].mean >= 100.0 * t.mse[0][1].mean;
  const bool q_ratio = t.mse[1][2].mean >= 100.0 * t.mse[1][0].mean &&
                       t.mse[1][2].mean >= 100.0 * t.mse[1][1].mean;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "Pr(var best on adv) = %.2f (need >= 0.99); adv means "
                "%.4f < %.4f < %.4f; V/Q blowup x%.0f/x%.0f (need >= 100)",
                pr_var_adv, adv_var, adv_ac, adv_pi,
                t.mse[0][2].mean / std::max(t.mse[0][0].mean, 1e-300),
                t.mse[1][2].mean / std::max(t.mse[1][0].mean, 1e-300));
  return {pr_var_adv >= 0.99 && ordering && v_ratio && q_ratio, buf};
}

// ---- 3. Robustness table ------------------------------------------------------

Outcome criterion_robustness() {
  ExperimentConfig cfg = paper_defaults();
  cfg.n_mdps = 200;
  cfg.epsilon_list = {0.01, 0.03, 0.1, 0.25};
  const std::vector<RobustnessRow> rows = run_robustness_table(cfg);
  bool pass = true;
  std::string detail = "Pr(ac smallest) per eps:";
  for (const RobustnessRow& r : rows) {
    const bool ac_max = r.pr_smallest[1] >= r.pr_smallest[0] &&
                        r.pr_smallest[1] >= r.pr_smallest[2];
    const bool floor_ok = r.epsilon > 0.1 || r.pr_smallest[1] >= 0.70;
    pass = pass && ac_max && floor_ok;
    char buf[64];
    std::snprintf(buf, sizeof(buf), " %.2f->%.2f", r.epsilon,
                  r.pr_smallest[1]);
    detail += buf;
  }
  detail += " (max in every row; >= 0.70 for eps <= 0.1)";
  return {pass, detail};
}

// ---- 4. Theorem convergence ---------------------------------------------------

Outcome criterion_theorem_convergence() {
  const int n = 8, m = 3, k = 3, want = 50;
  const Policy policy = make_uniform_policy(n, m);
  const StateDistribution d_x = StateDistribution::uniform(n);
  const IntegratorConfig icfg = IntegratorConfig::defaults(n);

  int eligible = 0;
  int ok[3] = {0, 0, 0};
  for (std::uint64_t seed = 0; eligible < want && seed < 2000; ++seed) {
    const Mdp mdp = gen_aligned_eigenbasis_family(n, m, seed);
    SpectralReport rep = joint_eigendecomposition(mdp);
    annotate_report(rep, VectorXd::Constant(m, 1.0 / m), k);

    // Fixture filter: every criterion needs an eigengap above 1e-3 at the
    // k boundary, else the target subspace is not identifiable.
    bool identifiable = true;
    for (const auto& [name, scores] : rep.criterion_scores) {
      VectorXd sorted = scores;
      std::sort(sorted.data(), sorted.data() + n, std::greater<double>());
      if (sorted(k - 1) - sorted(k) <= 1e-3) {
        identifiable = false;
        break;
      }
    }
    if (!identifiable) continue;
    ++eligible;

    const Representation phi0 = orthogonal_init(n, k, mix_seed(seed, 77));
    for (int o = 0; o < 3; ++o) {
      const ObjectiveKind kind = kAllObjectives[o];
      const Trajectory traj = integrate(phi0, kind, mdp, policy, d_x, icfg);
      const MatrixXd target = topk_subspace(rep, criterion_for(kind), k);
      if (principal_angles(traj.final_phi(), target).grassmann < 1e-3) {
        ++ok[o];
      }
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "Grassmann < 1e-3 on %d/%d (pi), %d/%d (ac), %d/%d (var) "
                "eligible seeds (need >= 95%%)",
                ok[0], eligible, ok[1], eligible, ok[2], eligible);
  const int need = (eligible * 95 + 99) / 100;
  const bool pass = eligible == 50 && ok[0] >= need && ok[1] >= need &&
                    ok[2] >= need;
  return {pass, buf};
}

// ---- 5. Exact identities -------------------------------------------------------

Outcome criterion_identities() {
  double worst_var_rel = 0.0, worst_mb = 0.0, worst_mf = 0.0, worst_ptw = 0.0;
  Rng rng(97);
  for (int rep = 0; rep < 50; ++rep) {
    // Variance relation on arbitrary eigenvalue tables.
    MatrixXd eig(3, 8);
    for (int a = 0; a < 3; ++a) {
      for (int i = 0; i < 8; ++i) eig(a, i) = 2.0 * rng.uniform01() - 1.0;
    }
    const CriterionScores s =
        criterion_scores(eig, VectorXd::Constant(3, 1.0 / 3.0));
    worst_var_rel =
        std::max(worst_var_rel, (s.mean_of_squares - s.square_of_mean -
                                 s.variance)
                                    .cwiseAbs()
                                    .maxCoeff());

    // Two-route identities on random symmetric instances.
    const std::uint64_t seed = 3000 + rep;
    const Mdp mdp = gen_random_mdp(8, 4, seed, true);
    const Policy policy = make_uniform_policy(8, 4);
    const MatrixXd phi = orthogonal_init(8, 4, seed + 50000).phi;
    for (ObjectiveKind kind : kAllObjectives) {
      const ObjectiveValue v = evaluate_objective(phi, mdp, policy, kind);
      worst_mb = std::max(worst_mb, std::abs(v.constant_term - v.trace_value -
                                             v.model_based_residual));
      worst_mf = std::max(worst_mf, std::abs(v.constant_term - v.trace_value -
                                             v.model_free_value));
    }

    // Pointwise variance form of the var trace objective.
    const MatrixXd tpi = induced_transition(mdp, policy);
    double direct = 0.0;
    for (const MatrixXd& t : mdp.transitions) {
      const MatrixXd mm = phi.transpose() * (t - tpi) * phi;
      direct += (mm * mm).trace();
    }
    direct /= mdp.n_actions;
    worst_ptw = std::max(
        worst_ptw, std::abs(direct - trace_objective(phi, mdp, policy,
                                                     ObjectiveKind::Var)));
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "worst residuals: variance %.1e (<1e-12), model-based %.1e "
                "(<1e-8), model-free %.1e (<1e-8), pointwise-var %.1e (<1e-10)",
                worst_var_rel, worst_mb, worst_mf, worst_ptw);
  return {worst_var_rel < 1e-12 && worst_mb < 1e-8 && worst_mf < 1e-8 &&
              worst_ptw < 1e-10,
          buf};
}

// ---- 6. Dynamics properties ------------------------------------------------

Outcome criterion_dynamics() {
  const StateDistribution d_x = StateDistribution::uniform(8);
  const Policy policy = make_uniform_policy(8, 4);

  // Tangency at 100 random representations per objective.
  double worst_tangency = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Mdp mdp = gen_random_mdp(8, 4, 4000 + i, true);
    const MatrixXd phi = orthogonal_init(8, 4, 60000 + i).phi;
    for (ObjectiveKind kind : kAllObjectives) {
      const MatrixXd f = phi_dot(kind, phi, mdp, policy, d_x);
      worst_tangency = std::max(worst_tangency,
                                (phi.transpose() * f).cwiseAbs().maxCoeff());
    }
  }

  // Critical points: rotated top-k subsets on aligned fixtures.
  double worst_critical = 0.0;
  const Policy policy3 = make_uniform_policy(8, 3);
  for (int fixture = 0; fixture < 5; ++fixture) {
    const Mdp mdp = gen_aligned_eigenbasis_family(8, 3, 5000 + fixture);
    SpectralReport rep = joint_eigendecomposition(mdp);
    annotate_report(rep, VectorXd::Constant(3, 1.0 / 3.0), 3);
    for (ObjectiveKind kind : kAllObjectives) {
      const MatrixXd qk = topk_subspace(rep, criterion_for(kind), 3);
      for (int c = 0; c < 4; ++c) {
        const MatrixXd rot =
            qk * oracles::random_orthogonal(3, 7000 + 16 * fixture + c);
        worst_critical = std::max(worst_critical,
                                  phi_dot(kind, rot, mdp, policy3, d_x).norm());
      }
    }
  }

  // Finite-difference agreement on small instances.
  double worst_fd = 0.0;
  const Policy policy2 = make_uniform_policy(6, 2);
  const StateDistribution d6 = StateDistribution::uniform(6);
  for (int i = 0; i < 5; ++i) {
    const Mdp mdp = gen_random_mdp(6, 2, 8000 + i, true);
    const MatrixXd phi = orthogonal_init(6, 2, 9000 + i).phi;
    for (ObjectiveKind kind : kAllObjectives) {
      const MatrixXd f = phi_dot(kind, phi, mdp, policy2, d6);
      const MatrixXd fd = oracles::fd_semi_gradient(kind, phi, mdp, policy2,
                                                    d6);
      worst_fd =
          std::max(worst_fd, (f - fd).norm() / std::max(f.norm(), 1e-12));
    }
  }

  // Lyapunov monotonicity of adaptive trajectories on symmetric instances.
  int violations = 0;
  for (int i = 0; i < 20; ++i) {
    const Mdp mdp = gen_random_mdp(8, 4, 10000 + i, true);
    const Representation phi0 = orthogonal_init(8, 4, 11000 + i);
    for (ObjectiveKind kind : kAllObjectives) {
      const Trajectory traj = integrate(phi0, kind, mdp, policy, d_x,
                                        IntegratorConfig::defaults(8));
      double prev = traj.initial_trace;
      for (const StepDiagnostics& d : traj.diagnostics) {
        if (d.trace_value < prev - 1e-12) ++violations;
        prev = d.trace_value;
      }
    }
  }

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "tangency %.1e (<1e-10), critical %.1e (<1e-10), fd rel "
                "%.1e (<1e-5), lyapunov violations %d (=0)",
                worst_tangency, worst_critical, worst_fd, violations);
  return {worst_tangency < 1e-10 && worst_critical < 1e-10 &&
              worst_fd < 1e-5 && violations == 0,
          buf};
}

// ---- 7. Monte Carlo consistency ----------------------------------------------

Outcome criterion_mc_consistency() {
  int covered = 0;
  const int total = 100;
  for (int i = 0; i < total; ++i) {
    const Mdp mdp = gen_random_mdp(8, 3, 12000 + i, true);
    const Policy policy = make_uniform_policy(8, 3);
    const MatrixXd phi = orthogonal_init(8, 3, 13000 + i).phi;
    const ObjectiveKind kind = kAllObjectives[i % 3];
    const double exact = model_free_value_analytic(phi, mdp, policy, kind);
    const McEstimate mc =
        model_free_value_mc(phi, mdp, policy, kind, 10000, 14000 + i);
    if (std::abs(mc.mean - exact) < 3.0 * mc.stderr_) ++covered;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "analytic value within 3 stderr on %d/%d instances "
                "(need >= 95)",
                covered, total);
  return {covered >= 95, buf};
}

// ---- 8. Non-symmetric trace ratios ---------------------------------------------

Outcome criterion_trace_ratio() {
  const ExperimentConfig cfg = paper_defaults();
  const TraceRatioCurves t = run_trace_ratio_curves(cfg);
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double pi_init = median_of(t.init_ratios[0]);
  const double pi_final = median_of(t.final_ratios[0]);
  const double ac_init = median_of(t.init_ratios[1]);
  const double ac_final = median_of(t.final_ratios[1]);
  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "median ratio pi %.3f -> %.3f, ac %.3f -> %.3f "
                "(final must exceed initial), %d excluded",
                pi_init, pi_final, ac_init, ac_final, t.n_excluded);
  return {pi_final > pi_init && ac_final > ac_init, buf};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>>
      criteria = {{"1 cross-objective table", criterion_cross_table},
                  {"2 value-mse table", criterion_value_mse},
                  {"3 robustness table", criterion_robustness},
                  {"4 theorem convergence", criterion_theorem_convergence},
                  {"5 exact identities", criterion_identities},
                  {"6 dynamics properties", criterion_dynamics},
                  {"7 monte carlo consistency", criterion_mc_consistency},
                  {"8 trace-ratio curves", criterion_trace_ratio}};

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome outcome;
    try {
      outcome = fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %s: %s\n", outcome.pass ? "PASS" : "FAIL",
                name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
  } else {
    std::printf("all acceptance criteria passed\n");
  }
  return failures;
}
