#pragma once

#include <cstdint>

#include "selfpred/mdp.hpp"

namespace selfpred {

// The three self-predictive objectives: policy-marginal (Pi),
// action-conditional (Ac), and their difference (Var).
enum class ObjectiveKind { Pi, Ac, Var };

inline constexpr ObjectiveKind kAllObjectives[] = {
    ObjectiveKind::Pi, ObjectiveKind::Ac, ObjectiveKind::Var};

const char* objective_name(ObjectiveKind kind);  // "pi", "ac", "var"

// Trace surrogate per kind:
//   pi : trace(Phi^T T^pi Phi Phi^T T^pi Phi)
//   ac : sum_a w_a trace(Phi^T T_a Phi Phi^T T_a Phi), action weights w_a
//        being the uniform-state marginal of the policy
//   var: ac - pi
// Requires Phi orthonormal within 1e-6.
double trace_objective(const Eigen::MatrixXd& phi, const Mdp& mdp,
                       const Policy& policy, ObjectiveKind kind);

struct ModelBasedFit {
  double residual;            // || T - Phi P Phi^T ||_F^2 at the optimum
  Eigen::MatrixXd predictor;  // P = Phi^T T Phi
};

// Best rank-k factored approximation of T through the representation.
ModelBasedFit model_based_residual(const Eigen::MatrixXd& phi,
                                   const Eigen::MatrixXd& T);

// Exact expectation over isotropic rewards (|X| E[R R^T] = I) of the
// one-step value-fitting objective for the given kind. Kinds ac/var
// require a uniform policy.
double model_free_value_analytic(const Eigen::MatrixXd& phi, const Mdp& mdp,
                                 const Policy& policy, ObjectiveKind kind);

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n_samples = 0;
};

// Monte Carlo estimate of model_free_value_analytic; inner fits are in
// closed form per reward draw. Unbiased; deterministic per seed.
McEstimate model_free_value_mc(const Eigen::MatrixXd& phi, const Mdp& mdp,
                               const Policy& policy, ObjectiveKind kind,
                               int n_samples, std::uint64_t seed);

// One row of the two-route comparison: the trace value, the additive
// constant, and both equivalent objective values.
struct ObjectiveValue {
  ObjectiveKind kind = ObjectiveKind::Pi;
  double trace_value = 0.0;
  double constant_term = 0.0;
  double model_based_residual = 0.0;
  double model_free_value = 0.0;
};

ObjectiveValue evaluate_objective(const Eigen::MatrixXd& phi, const Mdp& mdp,
                                  const Policy& policy, ObjectiveKind kind);

std::string objective_value_to_json(const ObjectiveValue& v);

enum class ValueTarget { V, Q, Advantage };

// E_R[min_theta || target - Phi theta ||^2] by Monte Carlo over rewards
// with covariance (reward_scale^2 / n) I; Q and Advantage fit one head
// per action and report the mean of per-action MSEs.
McEstimate fit_mse(const Eigen::MatrixXd& phi, const Mdp& mdp,
                   const Policy& policy, ValueTarget target, int n_samples,
                   std::uint64_t seed, double reward_scale = 1.0);

struct MseReport {
  double v_mse = 0.0, q_mse = 0.0, adv_mse = 0.0;
  double v_stderr = 0.0, q_stderr = 0.0, adv_stderr = 0.0;
  int n_samples = 0;
};

// All three fits sharing one stream of reward draws.
MseReport fit_all_mse(const Eigen::MatrixXd& phi, const Mdp& mdp,
                      const Policy& policy, int n_samples, std::uint64_t seed,
                      double reward_scale = 1.0);

std::string mse_report_to_json(const MseReport& r);

}  // namespace selfpred
