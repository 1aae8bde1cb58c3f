#include "selfpred/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "selfpred/rng.hpp"

namespace selfpred {

namespace {

constexpr double kZeroWeightTol = 1e-15;
constexpr double kLyapunovSlack = 1e-12;
constexpr double kMinStep = 1e-8;
constexpr double kDriftGuard = 1e-9;

Eigen::MatrixXd thin_orthonormal(const Eigen::MatrixXd& x) {
  const int k = static_cast<int>(x.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), k);
  const Eigen::MatrixXd r =
      qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

// Minimum-norm solution of (Phi^T D Phi) P = Phi^T D T Phi. The normal
// equations are always consistent, so this solves them exactly even when
// the weighted Gram matrix is rank-deficient (partial-support weights).
Eigen::MatrixXd solve_predictor(const Eigen::MatrixXd& phi,
                                const Eigen::VectorXd& weights,
                                const Eigen::MatrixXd& T) {
  const Eigen::MatrixXd wphi = weights.asDiagonal() * phi;
  const Eigen::MatrixXd gram = phi.transpose() * wphi;
  const Eigen::MatrixXd rhs = wphi.transpose() * (T * phi);
  return gram.completeOrthogonalDecomposition().solve(rhs);
}

// -2 (D Phi P - D T Phi) P^T with D = diag(weights), P the optimal
// predictor for (weights, T).
Eigen::MatrixXd field_term(const Eigen::MatrixXd& phi,
                           const Eigen::VectorXd& weights,
                           const Eigen::MatrixXd& T) {
  const Eigen::MatrixXd p = solve_predictor(phi, weights, T);
  const Eigen::MatrixXd resid =
      weights.asDiagonal() * (phi * p - T * phi);
  return -2.0 * resid * p.transpose();
}

// Per-integration cache: induced dynamics, per-action occupancy weights,
// and the action weights entering the trace diagnostic.
struct DynamicsContext {
  const Mdp& mdp;
  const Policy& policy;
  Eigen::VectorXd d;                    // state distribution
  Eigen::MatrixXd tpi;                  // induced transition
  std::vector<Eigen::VectorXd> wa;      // d .* pi(a|.)
  std::vector<double> wa_total;
  Eigen::VectorXd trace_weights;        // uniform-state action marginal

  DynamicsContext(const Mdp& m, const Policy& p, const StateDistribution& dx)
      : mdp(m), policy(p), d(dx.weights), tpi(induced_transition(m, p)) {
    wa.reserve(m.n_actions);
    wa_total.reserve(m.n_actions);
    for (int a = 0; a < m.n_actions; ++a) {
      wa.push_back(d.cwiseProduct(p.probs.col(a)));
      wa_total.push_back(wa.back().sum());
    }
    trace_weights =
        p.action_marginal(StateDistribution::uniform(m.n_states).weights);
  }

  Eigen::MatrixXd field_pi(const Eigen::MatrixXd& phi) const {
    return field_term(phi, d, tpi);
  }

  Eigen::MatrixXd field_ac(const Eigen::MatrixXd& phi, int* skipped) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(phi.rows(), phi.cols());
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (wa_total[a] <= kZeroWeightTol) {
        if (skipped) ++*skipped;
        continue;
      }
      out += field_term(phi, wa[a], mdp.transitions[a]);
    }
    return out;
  }

  Eigen::MatrixXd field(ObjectiveKind kind, const Eigen::MatrixXd& phi,
                        int* skipped) const {
    switch (kind) {
      case ObjectiveKind::Pi:
        return field_pi(phi);
      case ObjectiveKind::Ac:
        return field_ac(phi, skipped);
      case ObjectiveKind::Var:
        return field_ac(phi, skipped) - field_pi(phi);
    }
    return {};
  }

  // Trace objective of the column span, always evaluated on the thin
  // orthogonal factor: the Lyapunov comparison needs a function of the
  // subspace alone, insensitive to Euler drift, with no evaluation-path
  // discontinuities.
  double subspace_trace(ObjectiveKind kind, const Eigen::MatrixXd& phi) const {
    const Eigen::MatrixXd q = thin_orthonormal(phi);
    auto term = [&q](const Eigen::MatrixXd& t) {
      const Eigen::MatrixXd m = q.transpose() * t * q;
      return (m * m).trace();
    };
    double ac = 0.0;
    if (kind != ObjectiveKind::Pi) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        ac += trace_weights(a) * term(mdp.transitions[a]);
      }
    }
    switch (kind) {
      case ObjectiveKind::Pi:
        return term(tpi);
      case ObjectiveKind::Ac:
        return ac;
      case ObjectiveKind::Var:
        return ac - term(tpi);
    }
    return 0.0;
  }
};

}  // namespace

void Representation::validate(double orth_tol) const {
  if (phi.rows() < 1 || phi.cols() < 1 || phi.rows() < phi.cols()) {
    throw std::invalid_argument("representation: need n >= k >= 1");
  }
  if (!(noncollapse_residual(phi) <= orth_tol)) {
    throw std::invalid_argument("representation: columns not orthonormal");
  }
}

double noncollapse_residual(const Eigen::MatrixXd& phi) {
  const int k = static_cast<int>(phi.cols());
  return (phi.transpose() * phi - Eigen::MatrixXd::Identity(k, k))
      .cwiseAbs()
      .maxCoeff();
}

Representation orthogonal_init(int n, int k, std::uint64_t seed) {
  if (k < 1 || n < k) {
    throw std::invalid_argument("orthogonal_init: need n >= k >= 1");
  }
  Rng rng(seed);
  Eigen::MatrixXd g(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) g(i, j) = rng.normal();
  }
  return {thin_orthonormal(g)};
}

Eigen::MatrixXd optimal_predictor(const Eigen::MatrixXd& phi,
                                  const StateDistribution& d_x,
                                  const Eigen::MatrixXd& T) {
  d_x.validate();
  if (phi.rows() != d_x.weights.size() || T.rows() != T.cols() ||
      T.rows() != phi.rows()) {
    throw std::invalid_argument("optimal_predictor: shape mismatch");
  }
  const Eigen::MatrixXd gram =
      phi.transpose() * d_x.weights.asDiagonal() * phi;
  if (!gram.fullPivLu().isInvertible()) {
    throw RankDeficiencyError("optimal_predictor: Phi^T D_X Phi is singular");
  }
  return solve_predictor(phi, d_x.weights, T);
}

PredictorSet optimal_predictors(const Eigen::MatrixXd& phi, const Mdp& mdp,
                                const Policy& policy,
                                const StateDistribution& d_x) {
  DynamicsContext ctx(mdp, policy, d_x);
  PredictorSet out;
  out.shared = solve_predictor(phi, ctx.d, ctx.tpi);
  out.per_action.reserve(mdp.n_actions);
  for (int a = 0; a < mdp.n_actions; ++a) {
    if (ctx.wa_total[a] <= kZeroWeightTol) {
      out.per_action.push_back(
          Eigen::MatrixXd::Zero(phi.cols(), phi.cols()));
    } else {
      out.per_action.push_back(
          solve_predictor(phi, ctx.wa[a], mdp.transitions[a]));
    }
  }
  return out;
}

Eigen::MatrixXd phi_dot_pi(const Eigen::MatrixXd& phi, const Mdp& mdp,
                           const Policy& policy,
                           const StateDistribution& d_x) {
  return DynamicsContext(mdp, policy, d_x).field_pi(phi);
}

Eigen::MatrixXd phi_dot_ac(const Eigen::MatrixXd& phi, const Mdp& mdp,
                           const Policy& policy, const StateDistribution& d_x,
                           int* skipped_actions) {
  return DynamicsContext(mdp, policy, d_x).field_ac(phi, skipped_actions);
}

Eigen::MatrixXd phi_dot_var(const Eigen::MatrixXd& phi, const Mdp& mdp,
                            const Policy& policy, const StateDistribution& d_x,
                            int* skipped_actions) {
  DynamicsContext ctx(mdp, policy, d_x);
  return ctx.field_ac(phi, skipped_actions) - ctx.field_pi(phi);
}

Eigen::MatrixXd phi_dot(ObjectiveKind kind, const Eigen::MatrixXd& phi,
                        const Mdp& mdp, const Policy& policy,
                        const StateDistribution& d_x, int* skipped_actions) {
  return DynamicsContext(mdp, policy, d_x).field(kind, phi, skipped_actions);
}

IntegratorConfig IntegratorConfig::defaults(int n_states) {
  IntegratorConfig cfg;
  cfg.step_size = 0.5 * static_cast<double>(n_states);
  return cfg;
}

Trajectory integrate(const Representation& phi0, ObjectiveKind kind,
                     const Mdp& mdp, const Policy& policy,
                     const StateDistribution& d_x,
                     const IntegratorConfig& config) {
  if (!(config.step_size > 0.0)) {
    throw std::invalid_argument("integrate: step_size must be > 0");
  }
  if (config.max_iters < 1 || !(config.grad_tol > 0.0) ||
      config.retraction_period < 0) {
    throw std::invalid_argument("integrate: bad integrator config");
  }
  phi0.validate();
  d_x.validate();

  DynamicsContext ctx(mdp, policy, d_x);
  Trajectory traj;
  Eigen::MatrixXd phi = phi0.phi;
  double trace = ctx.subspace_trace(kind, phi);
  traj.initial_trace = trace;
  traj.snapshots.emplace_back(0, phi);

  int iter = 0;
  while (iter < config.max_iters) {
    int skipped = 0;
    const Eigen::MatrixXd dphi = ctx.field(kind, phi, &skipped);
    traj.skipped_action_events += skipped;
    const double grad_norm = dphi.norm();
    traj.final_grad_norm = grad_norm;
    if (grad_norm < config.grad_tol) {
      traj.converged = true;
      break;
    }

    double h = config.step_size;
    for (;;) {
      Eigen::MatrixXd cand = phi + h * dphi;
      if (config.retraction_period > 0 &&
          (iter + 1) % config.retraction_period == 0) {
        cand = thin_orthonormal(cand);
      } else if (noncollapse_residual(cand) > kDriftGuard) {
        // Euler drift is O(h^2 ||phi_dot||^2); retract early whenever it
        // would threaten the representation's orthogonality invariant.
        cand = thin_orthonormal(cand);
      }
      const double cand_trace = ctx.subspace_trace(kind, cand);
      if (!config.adaptive || cand_trace >= trace - kLyapunovSlack) {
        phi = std::move(cand);
        trace = cand_trace;
        break;
      }
      h *= 0.5;
      if (h < kMinStep) {
        traj.iterations = iter;
        traj.final_trace = trace;
        traj.snapshots.emplace_back(iter, phi);
        throw IntegrationError("integrate: step size underflow", traj);
      }
    }

    ++iter;
    traj.diagnostics.push_back(
        {iter, trace, noncollapse_residual(phi), grad_norm, h});
  }

  // Close the open retraction period so callers get an orthonormal result.
  if (config.retraction_period > 0 && noncollapse_residual(phi) > 1e-12) {
    phi = thin_orthonormal(phi);
    trace = ctx.subspace_trace(kind, phi);
  }
  traj.iterations = iter;
  traj.final_trace = trace;
  traj.snapshots.emplace_back(iter, phi);
  return traj;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  out << "iteration,trace_value,noncollapse_residual,grad_norm,step_size\n";
  char buf[256];
  for (const StepDiagnostics& d : traj.diagnostics) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n",
                  d.iteration, d.trace_value, d.noncollapse, d.grad_norm,
                  d.step_size);
    out << buf;
  }
}

std::string trajectory_snapshots_json(const Trajectory& traj) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [iter, phi] : traj.snapshots) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < phi.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < phi.cols(); ++j) row.push_back(phi(i, j));
      rows.push_back(std::move(row));
    }
    arr.push_back({{"iteration", iter}, {"phi", std::move(rows)}});
  }
  return arr.dump();
}

}  // namespace selfpred
