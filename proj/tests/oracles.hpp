#pragma once

// Test-only reference implementations, kept deliberately naive and
// independent of the library's computation paths.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "selfpred/dynamics.hpp"
#include "selfpred/mdp.hpp"
#include "selfpred/objectives.hpp"
#include "selfpred/rng.hpp"

namespace oracles {

// Plain-loop symmetric Sinkhorn scaling of a positive symmetric matrix:
// recomputes row sums from scratch each sweep.
inline Eigen::MatrixXd sinkhorn_scaled(const Eigen::MatrixXd& a, double tol,
                                       int max_iters) {
  const int n = static_cast<int>(a.rows());
  std::vector<double> d(n, 1.0);
  for (int it = 0; it < max_iters; ++it) {
    double worst = 0.0;
    std::vector<double> row_sum(n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) row_sum[i] += d[i] * a(i, j) * d[j];
      worst = std::max(worst, std::abs(row_sum[i] - 1.0));
    }
    if (worst < tol) break;
    for (int i = 0; i < n; ++i) {
      double ad = 0.0;
      for (int j = 0; j < n; ++j) ad += a(i, j) * d[j];
      d[i] = std::sqrt(d[i] / ad);
    }
  }
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s(i, j) = d[i] * a(i, j) * d[j];
  }
  return s;
}

// The seeded positive symmetric draw used by gen_symmetric_stochastic,
// reproduced from the documented stream layout.
inline Eigen::MatrixXd symmetric_uniform_draw(int n, std::uint64_t seed) {
  selfpred::Rng rng(selfpred::mix_seed(seed, 0x5d));
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = rng.uniform_pos();
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return a;
}

// Truncated Neumann series sum_{t<=t_max} gamma^t T^t R.
inline Eigen::VectorXd neumann_value(const Eigen::MatrixXd& t,
                                     const Eigen::VectorXd& r, double gamma,
                                     int t_max = 200) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(r.size());
  Eigen::VectorXd term = r;
  double scale = 1.0;
  for (int step = 0; step <= t_max; ++step) {
    v += scale * term;
    term = t * term;
    scale *= gamma;
  }
  return v;
}

// Triple-loop policy mixture of per-action transition rows.
inline Eigen::MatrixXd naive_induced(const selfpred::Mdp& mdp,
                                     const selfpred::Policy& policy) {
  const int n = mdp.n_states;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        t(i, j) += policy.probs(i, a) * mdp.transitions[a](i, j);
      }
    }
  }
  return t;
}

// Normal equations of min_P sum_{x,y} w(x) T(x,y) ||P^T Phi^T e_x -
// Phi^T e_y||^2, assembled by explicit enumeration of state pairs.
inline Eigen::MatrixXd enumerated_predictor(const Eigen::MatrixXd& phi,
                                            const Eigen::VectorXd& w,
                                            const Eigen::MatrixXd& t) {
  const int n = static_cast<int>(phi.rows());
  const int k = static_cast<int>(phi.cols());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(k, k);
  for (int x = 0; x < n; ++x) {
    const Eigen::VectorXd fx = phi.row(x).transpose();
    gram += w(x) * fx * fx.transpose();
    for (int y = 0; y < n; ++y) {
      const Eigen::VectorXd fy = phi.row(y).transpose();
      cross += w(x) * t(x, y) * fx * fy.transpose();
    }
  }
  return gram.ldlt().solve(cross);
}

// Stop-gradient loss with frozen predictors and frozen targets,
// enumerated over (x, a, y): the prediction side uses psi, everything
// else stays at the base representation.
inline double frozen_loss(const Eigen::MatrixXd& psi,
                          const Eigen::MatrixXd& base,
                          const std::vector<Eigen::MatrixXd>& predictors,
                          const std::vector<Eigen::MatrixXd>& dynamics,
                          const std::vector<Eigen::VectorXd>& weights,
                          const std::vector<double>& signs) {
  double loss = 0.0;
  const int n = static_cast<int>(base.rows());
  for (std::size_t term = 0; term < predictors.size(); ++term) {
    const Eigen::MatrixXd& p = predictors[term];
    const Eigen::MatrixXd& t = dynamics[term];
    for (int x = 0; x < n; ++x) {
      const Eigen::VectorXd pred = p.transpose() * psi.row(x).transpose();
      for (int y = 0; y < n; ++y) {
        const double wxy = weights[term](x) * t(x, y);
        if (wxy == 0.0) continue;
        const Eigen::VectorXd target = base.row(y).transpose();
        loss += signs[term] * wxy * (pred - target).squaredNorm();
      }
    }
  }
  return loss;
}

// Central finite difference of frozen_loss in every entry of psi.
inline Eigen::MatrixXd fd_gradient(const Eigen::MatrixXd& base,
                                   const std::vector<Eigen::MatrixXd>& preds,
                                   const std::vector<Eigen::MatrixXd>& dyn,
                                   const std::vector<Eigen::VectorXd>& wts,
                                   const std::vector<double>& signs,
                                   double h = 1e-6) {
  Eigen::MatrixXd g(base.rows(), base.cols());
  for (int i = 0; i < base.rows(); ++i) {
    for (int j = 0; j < base.cols(); ++j) {
      Eigen::MatrixXd up = base, down = base;
      up(i, j) += h;
      down(i, j) -= h;
      g(i, j) = (frozen_loss(up, base, preds, dyn, wts, signs) -
                 frozen_loss(down, base, preds, dyn, wts, signs)) /
                (2.0 * h);
    }
  }
  return g;
}

// Semi-gradient of the given objective at phi via central differences of
// the enumerated stop-gradient loss, with predictors and targets frozen.
inline Eigen::MatrixXd fd_semi_gradient(selfpred::ObjectiveKind kind,
                                        const Eigen::MatrixXd& phi,
                                        const selfpred::Mdp& mdp,
                                        const selfpred::Policy& policy,
                                        const selfpred::StateDistribution& d_x,
                                        double h = 1e-6) {
  const selfpred::PredictorSet preds =
      selfpred::optimal_predictors(phi, mdp, policy, d_x);
  const Eigen::MatrixXd tpi = selfpred::induced_transition(mdp, policy);
  std::vector<Eigen::MatrixXd> predictors, dynamics;
  std::vector<Eigen::VectorXd> weights;
  std::vector<double> signs;
  if (kind != selfpred::ObjectiveKind::Pi) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      predictors.push_back(preds.per_action[a]);
      dynamics.push_back(mdp.transitions[a]);
      weights.push_back(d_x.weights.cwiseProduct(policy.probs.col(a)));
      signs.push_back(1.0);
    }
  }
  if (kind != selfpred::ObjectiveKind::Ac) {
    predictors.push_back(preds.shared);
    dynamics.push_back(tpi);
    weights.push_back(d_x.weights);
    signs.push_back(kind == selfpred::ObjectiveKind::Var ? -1.0 : 1.0);
  }
  return -fd_gradient(phi, predictors, dynamics, weights, signs, h);
}

// Sum of the k largest eigenvalues of a symmetric matrix.
inline double topk_eigvals_sum(const Eigen::MatrixXd& m, int k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  double sum = 0.0;
  const int n = static_cast<int>(m.rows());
  for (int i = 0; i < k; ++i) sum += es.eigenvalues()(n - 1 - i);
  return sum;
}

inline double max_pairwise_commutator(const selfpred::Mdp& mdp) {
  double worst = 0.0;
  for (int a = 0; a < mdp.n_actions; ++a) {
    for (int b = a + 1; b < mdp.n_actions; ++b) {
      worst = std::max(worst, (mdp.transitions[a] * mdp.transitions[b] -
                               mdp.transitions[b] * mdp.transitions[a])
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  return worst;
}

// Best eigenvector subset of size k by exhaustive search over all
// combinations, evaluating the trace objective directly on Q[:, subset].
inline std::vector<int> best_subset_exhaustive(const selfpred::Mdp& mdp,
                                               const selfpred::Policy& policy,
                                               const Eigen::MatrixXd& q, int k,
                                               selfpred::ObjectiveKind kind) {
  const int n = static_cast<int>(q.cols());
  std::vector<int> subset, best;
  double best_value = -1e300;
  std::vector<int> idx(k);
  // iterate combinations via simple odometer
  for (int i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    Eigen::MatrixXd phi(q.rows(), k);
    for (int i = 0; i < k; ++i) phi.col(i) = q.col(idx[i]);
    const double v = selfpred::trace_objective(phi, mdp, policy, kind);
    if (v > best_value) {
      best_value = v;
      best = idx;
    }
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
  }
  return best;
}

// Haar-ish random orthogonal k x k matrix from a seeded Gaussian draw.
inline Eigen::MatrixXd random_orthogonal(int k, std::uint64_t seed) {
  selfpred::Rng rng(seed);
  Eigen::MatrixXd g(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace oracles
