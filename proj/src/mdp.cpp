#include "selfpred/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "selfpred/rng.hpp"

namespace selfpred {

namespace {

// Stream tags for deriving independent sub-seeds from one generator seed.
constexpr std::uint64_t kStreamSymmetricDraw = 0x5d;
constexpr std::uint64_t kStreamTransition = 0x7a;
constexpr std::uint64_t kStreamReward = 0x52;
constexpr std::uint64_t kStreamCirculantWeights = 0xc1;

void check_row_stochastic(const Eigen::MatrixXd& m, const char* what) {
  if (m.minCoeff() < 0.0) {
    throw std::invalid_argument(std::string(what) + ": negative entry");
  }
  const double row_err = (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (row_err >= kStochasticTol) {
    std::ostringstream os;
    os << what << ": row sums deviate from 1 by " << row_err;
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

void Policy::validate() const {
  if (probs.rows() < 1 || probs.cols() < 1) {
    throw std::invalid_argument("policy: empty probability matrix");
  }
  check_row_stochastic(probs, "policy");
}

bool Policy::is_uniform(double tol) const {
  const double u = 1.0 / static_cast<double>(n_actions());
  return (probs.array() - u).abs().maxCoeff() < tol;
}

Eigen::VectorXd Policy::action_marginal(const Eigen::VectorXd& d_x) const {
  return probs.transpose() * d_x;
}

void StateDistribution::validate() const {
  if (weights.size() < 1) {
    throw std::invalid_argument("state distribution: empty");
  }
  if (weights.minCoeff() < 0.0) {
    throw std::invalid_argument("state distribution: negative weight");
  }
  if (std::abs(weights.sum() - 1.0) >= kStochasticTol) {
    throw std::invalid_argument("state distribution: weights do not sum to 1");
  }
}

StateDistribution StateDistribution::uniform(int n) {
  if (n < 1) throw std::invalid_argument("state distribution: n must be >= 1");
  return {Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))};
}

void Mdp::validate(bool require_symmetric) const {
  if (n_states < 1 || n_actions < 1) {
    throw std::invalid_argument("mdp: dimensions must be positive");
  }
  if (static_cast<int>(transitions.size()) != n_actions) {
    throw std::invalid_argument("mdp: transition count != n_actions");
  }
  if (reward.size() != n_states) {
    throw std::invalid_argument("mdp: reward length != n_states");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("mdp: gamma must be in [0, 1)");
  }
  for (int a = 0; a < n_actions; ++a) {
    const Eigen::MatrixXd& t = transitions[a];
    if (t.rows() != n_states || t.cols() != n_states) {
      throw std::invalid_argument("mdp: transition matrix is not n x n");
    }
    check_row_stochastic(t, "mdp transition");
    if (require_symmetric) {
      const double asym = (t - t.transpose()).cwiseAbs().maxCoeff();
      if (asym >= kStochasticTol) {
        std::ostringstream os;
        os << "mdp transition for action " << a << ": asymmetry " << asym;
        throw std::invalid_argument(os.str());
      }
    }
  }
}

bool Mdp::is_symmetric(double tol) const {
  for (const Eigen::MatrixXd& t : transitions) {
    if ((t - t.transpose()).cwiseAbs().maxCoeff() >= tol) return false;
  }
  return true;
}

Policy make_uniform_policy(int n_states, int n_actions) {
  if (n_states < 1 || n_actions < 1) {
    throw std::invalid_argument("make_uniform_policy: dimensions must be >= 1");
  }
  return {Eigen::MatrixXd::Constant(n_states, n_actions,
                                    1.0 / static_cast<double>(n_actions))};
}

Eigen::MatrixXd gen_symmetric_stochastic(int n, std::uint64_t seed, double tol,
                                         int max_iters) {
  if (n < 1) throw std::invalid_argument("gen_symmetric_stochastic: n >= 1");
  if (tol <= 0.0) {
    throw std::invalid_argument("gen_symmetric_stochastic: tol > 0");
  }

  Rng rng(mix_seed(seed, kStreamSymmetricDraw));
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = rng.uniform_pos();
      a(i, j) = v;
      a(j, i) = v;
    }
  }

  // Symmetric Sinkhorn scaling: find d > 0 with d_i * (A d)_i = 1, then
  // S = diag(d) A diag(d) is doubly stochastic. The damped square-root
  // update converges for strictly positive symmetric A.
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd ad = a * d;
    residual = (d.cwiseProduct(ad).array() - 1.0).abs().maxCoeff();
    if (residual < tol) {
      Eigen::MatrixXd s = d.asDiagonal() * a * d.asDiagonal();
      s = 0.5 * (s + s.transpose().eval());  // exact symmetry
      return s;
    }
    d = (d.cwiseQuotient(ad)).cwiseSqrt();
  }
  throw NonConvergenceError("gen_symmetric_stochastic: scaling did not reach tol",
                            residual);
}

namespace {

// Symmetric circulant sum_j w_j (S^j + S^{n-j}) / 2 for the cyclic
// shift S; w is a probability vector over j = 0 .. floor(n/2).
Eigen::MatrixXd circulant_from_weights(int n, const Eigen::VectorXd& w) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < w.size(); ++j) {
    for (int i = 0; i < n; ++i) {
      t(i, (i + j) % n) += 0.5 * w(j);
      t(i, (i - j + n) % n) += 0.5 * w(j);
    }
  }
  return t;
}

void draw_reward_vector(Mdp& mdp, std::uint64_t seed, double reward_scale) {
  Rng rrng(mix_seed(seed, kStreamReward));
  const int n = mdp.n_states;
  mdp.reward.resize(n);
  const double sigma = reward_scale / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) mdp.reward(i) = sigma * rrng.normal();
}

}  // namespace

Mdp gen_common_eigenbasis_family(int n, int m, std::uint64_t seed, double gamma,
                                 double reward_scale) {
  if (n < 2) throw std::invalid_argument("gen_common_eigenbasis_family: n >= 2");
  if (m < 1) throw std::invalid_argument("gen_common_eigenbasis_family: m >= 1");

  // Each action is an independent convex combination of the symmetric
  // cyclic-shift pairs; all circulants commute, so the family shares the
  // real circulant eigenbasis.
  const int n_gen = n / 2 + 1;
  Mdp mdp;
  mdp.n_states = n;
  mdp.n_actions = m;
  mdp.gamma = gamma;
  mdp.transitions.reserve(m);

  Rng wrng(mix_seed(seed, kStreamCirculantWeights));
  for (int a = 0; a < m; ++a) {
    Eigen::VectorXd w(n_gen);
    for (int j = 0; j < n_gen; ++j) w(j) = wrng.uniform_pos();
    w /= w.sum();
    mdp.transitions.push_back(circulant_from_weights(n, w));
  }

  draw_reward_vector(mdp, seed, reward_scale);
  mdp.validate(/*require_symmetric=*/true);
  return mdp;
}

Mdp gen_aligned_eigenbasis_family(int n, int m, std::uint64_t seed,
                                  double gamma, double reward_scale) {
  if (n < 2) throw std::invalid_argument("gen_aligned_eigenbasis_family: n >= 2");
  if (m < 1) throw std::invalid_argument("gen_aligned_eigenbasis_family: m >= 1");

  // Sub-family of gen_common_eigenbasis_family built for convergence
  // studies. Per-action weights share a positive base, half of it on the
  // identity generator, and deviate only along (e_0 - e_j*). Spectra are
  // then strictly positive and across-action eigenvalue deviations align
  // with the nonnegative profile 1 - cos(2 pi j* f / n). Both properties
  // matter: mixed-sign or anti-correlated spectra give the trace
  // objectives stable sub-optimal critical points, while here the
  // theorem-predicted top-k subspace is the attracting one.
  const int n_gen = n / 2 + 1;
  Mdp mdp;
  mdp.n_states = n;
  mdp.n_actions = m;
  mdp.gamma = gamma;
  mdp.transitions.reserve(m);

  Rng wrng(mix_seed(seed, kStreamCirculantWeights));
  Eigen::VectorXd base(n_gen);
  for (int j = 0; j < n_gen; ++j) base(j) = wrng.uniform_pos();
  base /= base.sum();

  int j_dev = 1;
  for (int j = 2; j < n_gen; ++j) {
    if (base(j) > base(j_dev)) j_dev = j;
  }

  // Smallest value of the base symbol sum_j base_j cos(2 pi j f / n).
  double min_symbol = 1.0;
  for (int f = 0; f < n; ++f) {
    double s = 0.0;
    for (int j = 0; j < n_gen; ++j) {
      s += base(j) * std::cos(2.0 * std::numbers::pi * j * f / n);
    }
    min_symbol = std::min(min_symbol, s);
  }
  // Keeps every eigenvalue above (1 + min_symbol) / 4 > 0.
  const double z_bound =
      std::min(0.5 * base(j_dev), 0.125 * (1.0 + min_symbol));

  for (int a = 0; a < m; ++a) {
    const double z = (2.0 * wrng.uniform01() - 1.0) * z_bound;
    Eigen::VectorXd w = 0.5 * base;
    w(0) += 0.5 + z;
    w(j_dev) -= z;
    mdp.transitions.push_back(circulant_from_weights(n, w));
  }

  draw_reward_vector(mdp, seed, reward_scale);
  mdp.validate(/*require_symmetric=*/true);
  return mdp;
}

Mdp gen_random_mdp(int n, int m, std::uint64_t seed, bool symmetric,
                   double reward_scale, double gamma) {
  if (n < 1 || m < 1) {
    throw std::invalid_argument("gen_random_mdp: dimensions must be >= 1");
  }

  Mdp mdp;
  mdp.n_states = n;
  mdp.n_actions = m;
  mdp.gamma = gamma;
  mdp.transitions.reserve(m);
  for (int a = 0; a < m; ++a) {
    if (symmetric) {
      mdp.transitions.push_back(gen_symmetric_stochastic(
          n, mix_seed(seed, kStreamTransition + static_cast<std::uint64_t>(a))));
    } else {
      Rng rng(mix_seed(seed, kStreamTransition + static_cast<std::uint64_t>(a)));
      Eigen::MatrixXd t(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) t(i, j) = rng.uniform_pos();
        t.row(i) /= t.row(i).sum();
      }
      mdp.transitions.push_back(std::move(t));
    }
  }

  Rng rrng(mix_seed(seed, kStreamReward));
  mdp.reward.resize(n);
  const double sigma = reward_scale / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) mdp.reward(i) = sigma * rrng.normal();

  mdp.validate(symmetric);
  return mdp;
}

Eigen::MatrixXd induced_transition(const Mdp& mdp, const Policy& policy) {
  if (policy.n_states() != mdp.n_states ||
      policy.n_actions() != mdp.n_actions) {
    throw std::invalid_argument("induced_transition: shape mismatch");
  }
  const int n = mdp.n_states;
  Eigen::MatrixXd tpi = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < mdp.n_actions; ++a) {
    tpi += policy.probs.col(a).asDiagonal() * mdp.transitions[a];
  }
  return tpi;
}

Eigen::VectorXd value_function(const Mdp& mdp, const Policy& policy) {
  const Eigen::MatrixXd tpi = induced_transition(mdp, policy);
  const int n = mdp.n_states;
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(n, n) - mdp.gamma * tpi;
  const Eigen::VectorXd v = system.partialPivLu().solve(mdp.reward);
  const double residual =
      (system * v - mdp.reward).lpNorm<Eigen::Infinity>();
  if (!(residual < 1e-10)) {
    throw std::runtime_error("value_function: linear solve residual too large");
  }
  return v;
}

Eigen::MatrixXd q_function(const Mdp& mdp, const Policy& policy) {
  const Eigen::VectorXd v = value_function(mdp, policy);
  Eigen::MatrixXd q(mdp.n_states, mdp.n_actions);
  for (int a = 0; a < mdp.n_actions; ++a) {
    q.col(a) = mdp.reward + mdp.gamma * (mdp.transitions[a] * v);
  }
  return q;
}

Eigen::MatrixXd advantage_function(const Mdp& mdp, const Policy& policy) {
  const Eigen::VectorXd v = value_function(mdp, policy);
  Eigen::MatrixXd adv = q_function(mdp, policy);
  adv.colwise() -= v;
  return adv;
}

Policy perturb_policy(const Policy& policy, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("perturb_policy: epsilon must be in [0, 1]");
  }
  policy.validate();
  const double u = epsilon / static_cast<double>(policy.n_actions());
  Policy out{(1.0 - epsilon) * policy.probs};
  out.probs.array() += u;
  return out;
}

std::string mdp_to_json(const Mdp& mdp) {
  mdp.validate();
  nlohmann::json j;
  j["n_states"] = mdp.n_states;
  j["n_actions"] = mdp.n_actions;
  j["gamma"] = mdp.gamma;
  j["reward"] = std::vector<double>(mdp.reward.data(),
                                    mdp.reward.data() + mdp.reward.size());
  nlohmann::json trans = nlohmann::json::array();
  for (const Eigen::MatrixXd& t : mdp.transitions) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < t.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int jcol = 0; jcol < t.cols(); ++jcol) row.push_back(t(i, jcol));
      rows.push_back(std::move(row));
    }
    trans.push_back(std::move(rows));
  }
  j["transitions"] = std::move(trans);
  return j.dump();
}

Mdp mdp_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Mdp mdp;
  mdp.n_states = j.at("n_states").get<int>();
  mdp.n_actions = j.at("n_actions").get<int>();
  mdp.gamma = j.at("gamma").get<double>();
  const auto reward = j.at("reward").get<std::vector<double>>();
  mdp.reward = Eigen::Map<const Eigen::VectorXd>(
      reward.data(), static_cast<Eigen::Index>(reward.size()));
  for (const nlohmann::json& rows : j.at("transitions")) {
    Eigen::MatrixXd t(mdp.n_states, mdp.n_states);
    int i = 0;
    for (const nlohmann::json& row : rows) {
      int c = 0;
      for (const nlohmann::json& v : row) t(i, c++) = v.get<double>();
      ++i;
    }
    mdp.transitions.push_back(std::move(t));
  }
  mdp.validate();
  return mdp;
}

}  // namespace selfpred
