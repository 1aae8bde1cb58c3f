#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "selfpred/errors.hpp"

namespace selfpred {

// Tolerance for row-stochasticity and related probability invariants.
inline constexpr double kStochasticTol = 1e-12;

// State -> action distribution, stored as a row-stochastic matrix.
struct Policy {
  Eigen::MatrixXd probs;  // n_states x n_actions

  int n_states() const { return static_cast<int>(probs.rows()); }
  int n_actions() const { return static_cast<int>(probs.cols()); }

  // Throws std::invalid_argument if rows are not probability vectors.
  void validate() const;

  bool is_uniform(double tol = kStochasticTol) const;

  // Marginal action weights sum_x d(x) * pi(a|x).
  Eigen::VectorXd action_marginal(const Eigen::VectorXd& d_x) const;
};

struct StateDistribution {
  Eigen::VectorXd weights;

  int n_states() const { return static_cast<int>(weights.size()); }
  void validate() const;
  static StateDistribution uniform(int n);
};

// Tabular MDP with one transition matrix per action and a state reward.
struct Mdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Eigen::MatrixXd> transitions;  // n_actions square matrices
  Eigen::VectorXd reward;                    // length n_states
  double gamma = 0.99;

  // Checks shapes, nonnegativity, and row sums; with require_symmetric,
  // also ||T_a - T_a^T||_inf < kStochasticTol for every action.
  void validate(bool require_symmetric = false) const;
  bool is_symmetric(double tol = kStochasticTol) const;
};

Policy make_uniform_policy(int n_states, int n_actions);

// Symmetric row-stochastic matrix from a seeded strictly positive
// symmetric draw, scaled to unit row sums by symmetric Sinkhorn
// iteration (D * A * D). Throws NonConvergenceError if the residual
// does not drop below tol within max_iters sweeps.
Eigen::MatrixXd gen_symmetric_stochastic(int n, std::uint64_t seed,
                                         double tol = 1e-12,
                                         int max_iters = 10000);

// Family of m symmetric circulant stochastic matrices (convex
// combinations of symmetric cyclic-shift pairs); all members share one
// real orthonormal eigenbasis.
Mdp gen_common_eigenbasis_family(int n, int m, std::uint64_t seed,
                                 double gamma = 0.99,
                                 double reward_scale = 1.0);

// Circulant sub-family with strictly positive spectra and across-action
// eigenvalue deviations along one shared nonnegative profile. On these
// fixtures the trace-objective maximizers are the attracting critical
// points, so ODE trajectories reach the theorem-predicted subspaces.
Mdp gen_aligned_eigenbasis_family(int n, int m, std::uint64_t seed,
                                  double gamma = 0.99,
                                  double reward_scale = 1.0);

// Random MDP: symmetric per-action dynamics via gen_symmetric_stochastic
// or independent row-normalized positive draws; reward is zero-mean
// Gaussian with covariance (reward_scale^2 / n) * I.
Mdp gen_random_mdp(int n, int m, std::uint64_t seed, bool symmetric,
                   double reward_scale = 1.0, double gamma = 0.99);

// T^pi: per-row policy mixture of the per-action transition rows.
Eigen::MatrixXd induced_transition(const Mdp& mdp, const Policy& policy);

// Solves (I - gamma * T^pi) V = R.
Eigen::VectorXd value_function(const Mdp& mdp, const Policy& policy);

// Column a is R + gamma * T_a * V.
Eigen::MatrixXd q_function(const Mdp& mdp, const Policy& policy);

// Column a is Q_a - V.
Eigen::MatrixXd advantage_function(const Mdp& mdp, const Policy& policy);

// (1 - epsilon) * policy + epsilon * uniform.
Policy perturb_policy(const Policy& policy, double epsilon);

// JSON document {n_states, n_actions, gamma, reward, transitions},
// row-major, full round-trip double precision.
std::string mdp_to_json(const Mdp& mdp);
Mdp mdp_from_json(const std::string& text);

}  // namespace selfpred
