#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "selfpred/mdp.hpp"
#include "selfpred/objectives.hpp"

namespace selfpred {

// n x k representation with (approximately) orthonormal columns.
struct Representation {
  Eigen::MatrixXd phi;

  int n() const { return static_cast<int>(phi.rows()); }
  int k() const { return static_cast<int>(phi.cols()); }
  void validate(double orth_tol = 1e-8) const;
};

// || Phi^T Phi - I ||_inf
double noncollapse_residual(const Eigen::MatrixXd& phi);

// Thin orthogonal factor of a seeded Gaussian draw; deterministic per
// seed (column signs fixed by the R diagonal).
Representation orthogonal_init(int n, int k, std::uint64_t seed);

// Solves (Phi^T D_X Phi) P = Phi^T D_X T Phi for the optimal latent
// predictor. Throws RankDeficiencyError when the Gram matrix is singular.
Eigen::MatrixXd optimal_predictor(const Eigen::MatrixXd& phi,
                                  const StateDistribution& d_x,
                                  const Eigen::MatrixXd& T);

struct PredictorSet {
  Eigen::MatrixXd shared;                   // against T^pi, weights d_X
  std::vector<Eigen::MatrixXd> per_action;  // against T_a, weights d_X .* pi(a|.)
};

// Shared and per-action predictors at their two-timescale optima.
// Actions with zero total weight get a zero predictor.
PredictorSet optimal_predictors(const Eigen::MatrixXd& phi, const Mdp& mdp,
                                const Policy& policy,
                                const StateDistribution& d_x);

// Semi-gradient fields of the three objectives. Each returns
//   -2 sum_terms (D w Phi P* - D w T Phi) (P*)^T
// with the matching dynamics and occupancy weights; per-action terms with
// zero total weight are skipped (counter reported via skipped_actions).
Eigen::MatrixXd phi_dot_pi(const Eigen::MatrixXd& phi, const Mdp& mdp,
                           const Policy& policy, const StateDistribution& d_x);
Eigen::MatrixXd phi_dot_ac(const Eigen::MatrixXd& phi, const Mdp& mdp,
                           const Policy& policy, const StateDistribution& d_x,
                           int* skipped_actions = nullptr);
Eigen::MatrixXd phi_dot_var(const Eigen::MatrixXd& phi, const Mdp& mdp,
                            const Policy& policy, const StateDistribution& d_x,
                            int* skipped_actions = nullptr);
Eigen::MatrixXd phi_dot(ObjectiveKind kind, const Eigen::MatrixXd& phi,
                        const Mdp& mdp, const Policy& policy,
                        const StateDistribution& d_x,
                        int* skipped_actions = nullptr);

struct IntegratorConfig {
  double step_size = 0.0;      // must be > 0; see defaults()
  int max_iters = 20000;
  double grad_tol = 1e-9;      // stop when ||phi_dot||_F < grad_tol
  int retraction_period = 100; // re-orthonormalize every N steps; 0 = never
  bool adaptive = true;        // halve the step on a trace decrease

  // Default step 0.5 * n; the 1/n factor inside the dynamics otherwise
  // makes explicit-Euler progress negligible.
  static IntegratorConfig defaults(int n_states);
};

struct StepDiagnostics {
  int iteration = 0;      // 1-based step count
  double trace_value = 0.0;
  double noncollapse = 0.0;
  double grad_norm = 0.0;
  double step_size = 0.0;  // step actually taken
};

struct Trajectory {
  std::vector<std::pair<int, Eigen::MatrixXd>> snapshots;  // initial, final
  std::vector<StepDiagnostics> diagnostics;                // one per step
  bool converged = false;  // grad_tol reached within max_iters
  int iterations = 0;
  double initial_trace = 0.0;
  double final_trace = 0.0;
  double final_grad_norm = 0.0;
  int skipped_action_events = 0;

  const Eigen::MatrixXd& final_phi() const { return snapshots.back().second; }
};

// Step-size underflow during adaptive halving; carries the trajectory up
// to the failure.
struct IntegrationError : std::runtime_error {
  IntegrationError(const std::string& msg, Trajectory t)
      : std::runtime_error(msg), trajectory(std::move(t)) {}
  Trajectory trajectory;
};

// Explicit-Euler integration of the chosen semi-gradient field with
// periodic retraction. In adaptive mode a step that decreases the trace
// objective by more than 1e-12 is retried at half step size; the step
// aborts (IntegrationError) below step 1e-8.
Trajectory integrate(const Representation& phi0, ObjectiveKind kind,
                     const Mdp& mdp, const Policy& policy,
                     const StateDistribution& d_x,
                     const IntegratorConfig& config);

// CSV with header: iteration,trace_value,noncollapse_residual,grad_norm,step_size
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

// Snapshots as a JSON array of {iteration, phi}.
std::string trajectory_snapshots_json(const Trajectory& traj);

}  // namespace selfpred
