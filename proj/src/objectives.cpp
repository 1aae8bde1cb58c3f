#include "selfpred/objectives.hpp"

#include <cmath>

#include <json.hpp>

#include "selfpred/rng.hpp"

namespace selfpred {

namespace {

constexpr double kOrthTol = 1e-6;
constexpr double kUniformPolicyTol = 1e-12;

void require_orthonormal(const Eigen::MatrixXd& phi, const char* what) {
  const int k = static_cast<int>(phi.cols());
  const double resid = (phi.transpose() * phi -
                        Eigen::MatrixXd::Identity(k, k))
                           .cwiseAbs()
                           .maxCoeff();
  if (!(resid < kOrthTol)) {
    throw std::invalid_argument(std::string(what) +
                                ": representation is not orthonormal");
  }
}

void require_uniform_policy(const Policy& policy, const char* what) {
  if (!policy.is_uniform(kUniformPolicyTol)) {
    throw AssumptionViolationError(
        std::string(what) + ": kinds ac/var require a uniform policy",
        (policy.probs.array() - 1.0 / policy.n_actions()).abs().maxCoeff());
  }
}

double trace_of_square(const Eigen::MatrixXd& m) {
  return (m * m).trace();
}

// trace(Phi^T T Phi Phi^T T Phi) for one dynamics matrix.
double trace_term(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& t) {
  const Eigen::MatrixXd m = phi.transpose() * t * phi;
  return trace_of_square(m);
}

// ||(I - Phi Phi^T) T||_F^2 + ||(I - Phi Phi^T) T Phi Phi^T||_F^2, the
// exact reward expectation of the two residual fits for dynamics T.
double model_free_term(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& t) {
  const Eigen::MatrixXd tp = t - phi * (phi.transpose() * t);  // (I-P)T
  const Eigen::MatrixXd tp_proj = (tp * phi) * phi.transpose();
  return tp.squaredNorm() + tp_proj.squaredNorm();
}

// Action weights for the trace objective: the policy's action marginal
// under the uniform state distribution. Reduces to the policy's action
// probabilities for state-independent policies.
Eigen::VectorXd trace_action_weights(const Mdp& mdp, const Policy& policy) {
  const StateDistribution d = StateDistribution::uniform(mdp.n_states);
  return policy.action_marginal(d.weights);
}

// One Monte Carlo reward draw, entries N(0, sigma^2).
Eigen::VectorXd draw_reward(Rng& rng, int n, double sigma) {
  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) r(i) = sigma * rng.normal();
  return r;
}

// ||(I - Phi Phi^T) v||^2
double residual_sq(const Eigen::MatrixXd& phi, const Eigen::VectorXd& v) {
  return (v - phi * (phi.transpose() * v)).squaredNorm();
}

McEstimate summarize(const std::vector<double>& samples) {
  const int n = static_cast<int>(samples.size());
  double sum = 0.0;
  for (double s : samples) sum += s;
  const double mean = sum / n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double var = n > 1 ? ss / (n - 1) : 0.0;
  return {mean, std::sqrt(var / n), n};
}

}  // namespace

const char* objective_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Pi:
      return "pi";
    case ObjectiveKind::Ac:
      return "ac";
    case ObjectiveKind::Var:
      return "var";
  }
  return "?";
}

double trace_objective(const Eigen::MatrixXd& phi, const Mdp& mdp,
                       const Policy& policy, ObjectiveKind kind) {
  require_orthonormal(phi, "trace_objective");
  switch (kind) {
    case ObjectiveKind::Pi:
      return trace_term(phi, induced_transition(mdp, policy));
    case ObjectiveKind::Ac: {
      const Eigen::VectorXd w = trace_action_weights(mdp, policy);
      double f = 0.0;
      for (int a = 0; a < mdp.n_actions; ++a) {
        f += w(a) * trace_term(phi, mdp.transitions[a]);
      }
      return f;
    }
    case ObjectiveKind::Var:
      return trace_objective(phi, mdp, policy, ObjectiveKind::Ac) -
             trace_objective(phi, mdp, policy, ObjectiveKind::Pi);
  }
  return 0.0;
}

ModelBasedFit model_based_residual(const Eigen::MatrixXd& phi,
                                   const Eigen::MatrixXd& T) {
  require_orthonormal(phi, "model_based_residual");
  Eigen::MatrixXd p = phi.transpose() * T * phi;
  const double residual = (T - phi * p * phi.transpose()).squaredNorm();
  return {residual, std::move(p)};
}

double model_free_value_analytic(const Eigen::MatrixXd& phi, const Mdp& mdp,
                                 const Policy& policy, ObjectiveKind kind) {
  require_orthonormal(phi, "model_free_value_analytic");
  const Eigen::MatrixXd tpi = induced_transition(mdp, policy);
  switch (kind) {
    case ObjectiveKind::Pi:
      return model_free_term(phi, tpi);
    case ObjectiveKind::Ac: {
      require_uniform_policy(policy, "model_free_value_analytic");
      double v = 0.0;
      for (const Eigen::MatrixXd& t : mdp.transitions) {
        v += model_free_term(phi, t);
      }
      return v / mdp.n_actions;
    }
    case ObjectiveKind::Var: {
      require_uniform_policy(policy, "model_free_value_analytic");
      double v = 0.0;
      for (const Eigen::MatrixXd& t : mdp.transitions) {
        v += model_free_term(phi, t - tpi);
      }
      return v / mdp.n_actions;
    }
  }
  return 0.0;
}

McEstimate model_free_value_mc(const Eigen::MatrixXd& phi, const Mdp& mdp,
                               const Policy& policy, ObjectiveKind kind,
                               int n_samples, std::uint64_t seed) {
  require_orthonormal(phi, "model_free_value_mc");
  if (n_samples < 2) {
    throw std::invalid_argument("model_free_value_mc: n_samples must be >= 2");
  }
  if (kind != ObjectiveKind::Pi) {
    require_uniform_policy(policy, "model_free_value_mc");
  }
  const int n = mdp.n_states;
  const Eigen::MatrixXd tpi = induced_transition(mdp, policy);

  // Dynamics matrices entering the per-draw fits for this kind.
  std::vector<Eigen::MatrixXd> dynamics;
  if (kind == ObjectiveKind::Pi) {
    dynamics.push_back(tpi);
  } else {
    for (const Eigen::MatrixXd& t : mdp.transitions) {
      dynamics.push_back(kind == ObjectiveKind::Ac ? t : (t - tpi).eval());
    }
  }

  Rng rng(seed);
  const double sigma = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> samples;
  samples.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd r = draw_reward(rng, n, sigma);
    const Eigen::VectorXd r_proj = phi * (phi.transpose() * r);
    double value = 0.0;
    for (const Eigen::MatrixXd& t : dynamics) {
      value += residual_sq(phi, t * r) + residual_sq(phi, t * r_proj);
    }
    value *= static_cast<double>(n) / static_cast<double>(dynamics.size());
    samples.push_back(value);
  }
  return summarize(samples);
}

ObjectiveValue evaluate_objective(const Eigen::MatrixXd& phi, const Mdp& mdp,
                                  const Policy& policy, ObjectiveKind kind) {
  ObjectiveValue out;
  out.kind = kind;
  out.trace_value = trace_objective(phi, mdp, policy, kind);
  out.model_free_value = model_free_value_analytic(phi, mdp, policy, kind);

  const Eigen::MatrixXd tpi = induced_transition(mdp, policy);
  double constant = 0.0;
  double residual = 0.0;
  if (kind == ObjectiveKind::Pi) {
    constant = trace_of_square(tpi);
    residual = model_based_residual(phi, tpi).residual;
  } else {
    for (const Eigen::MatrixXd& t : mdp.transitions) {
      const Eigen::MatrixXd d =
          kind == ObjectiveKind::Ac ? t : (t - tpi).eval();
      constant += trace_of_square(d);
      residual += model_based_residual(phi, d).residual;
    }
    constant /= mdp.n_actions;
    residual /= mdp.n_actions;
  }
  out.constant_term = constant;
  out.model_based_residual = residual;
  return out;
}

std::string objective_value_to_json(const ObjectiveValue& v) {
  nlohmann::json j;
  j["kind"] = objective_name(v.kind);
  j["trace_value"] = v.trace_value;
  j["constant_term"] = v.constant_term;
  j["model_based_residual"] = v.model_based_residual;
  j["model_free_value"] = v.model_free_value;
  return j.dump();
}

McEstimate fit_mse(const Eigen::MatrixXd& phi, const Mdp& mdp,
                   const Policy& policy, ValueTarget target, int n_samples,
                   std::uint64_t seed, double reward_scale) {
  require_orthonormal(phi, "fit_mse");
  if (n_samples < 2) {
    throw std::invalid_argument("fit_mse: n_samples must be >= 2");
  }
  const int n = mdp.n_states;
  const int m = mdp.n_actions;
  const Eigen::MatrixXd tpi = induced_transition(mdp, policy);
  const Eigen::PartialPivLU<Eigen::MatrixXd> bellman(
      Eigen::MatrixXd::Identity(n, n) - mdp.gamma * tpi);

  Rng rng(seed);
  const double sigma = reward_scale / std::sqrt(static_cast<double>(n));
  std::vector<double> samples;
  samples.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd r = draw_reward(rng, n, sigma);
    const Eigen::VectorXd v = bellman.solve(r);
    double mse = 0.0;
    switch (target) {
      case ValueTarget::V:
        mse = residual_sq(phi, v);
        break;
      case ValueTarget::Q:
        for (int a = 0; a < m; ++a) {
          mse += residual_sq(phi, r + mdp.gamma * (mdp.transitions[a] * v));
        }
        mse /= m;
        break;
      case ValueTarget::Advantage:
        for (int a = 0; a < m; ++a) {
          mse += residual_sq(
              phi, (r + mdp.gamma * (mdp.transitions[a] * v) - v).eval());
        }
        mse /= m;
        break;
    }
    samples.push_back(mse);
  }
  return summarize(samples);
}

MseReport fit_all_mse(const Eigen::MatrixXd& phi, const Mdp& mdp,
                      const Policy& policy, int n_samples, std::uint64_t seed,
                      double reward_scale) {
  require_orthonormal(phi, "fit_all_mse");
  if (n_samples < 2) {
    throw std::invalid_argument("fit_all_mse: n_samples must be >= 2");
  }
  const int n = mdp.n_states;
  const int m = mdp.n_actions;
  const Eigen::MatrixXd tpi = induced_transition(mdp, policy);
  const Eigen::PartialPivLU<Eigen::MatrixXd> bellman(
      Eigen::MatrixXd::Identity(n, n) - mdp.gamma * tpi);

  Rng rng(seed);
  const double sigma = reward_scale / std::sqrt(static_cast<double>(n));
  std::vector<double> sv, sq, sa;
  sv.reserve(n_samples);
  sq.reserve(n_samples);
  sa.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd r = draw_reward(rng, n, sigma);
    const Eigen::VectorXd v = bellman.solve(r);
    sv.push_back(residual_sq(phi, v));
    double q_mse = 0.0, a_mse = 0.0;
    for (int a = 0; a < m; ++a) {
      const Eigen::VectorXd qa = r + mdp.gamma * (mdp.transitions[a] * v);
      q_mse += residual_sq(phi, qa);
      a_mse += residual_sq(phi, (qa - v).eval());
    }
    sq.push_back(q_mse / m);
    sa.push_back(a_mse / m);
  }

  MseReport rep;
  const McEstimate ev = summarize(sv), eq = summarize(sq), ea = summarize(sa);
  rep.v_mse = ev.mean;
  rep.v_stderr = ev.stderr_;
  rep.q_mse = eq.mean;
  rep.q_stderr = eq.stderr_;
  rep.adv_mse = ea.mean;
  rep.adv_stderr = ea.stderr_;
  rep.n_samples = n_samples;
  return rep;
}

std::string mse_report_to_json(const MseReport& r) {
  nlohmann::json j;
  j["v_mse"] = r.v_mse;
  j["v_stderr"] = r.v_stderr;
  j["q_mse"] = r.q_mse;
  j["q_stderr"] = r.q_stderr;
  j["adv_mse"] = r.adv_mse;
  j["adv_stderr"] = r.adv_stderr;
  j["n_samples"] = r.n_samples;
  return j.dump();
}

}  // namespace selfpred
