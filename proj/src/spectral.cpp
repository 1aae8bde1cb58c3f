#include "selfpred/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace selfpred {

namespace {

constexpr double kLeakageTol = 1e-8;
constexpr double kClusterTol = 1e-8;

void fix_column_signs(Eigen::MatrixXd& q) {
  for (int j = 0; j < q.cols(); ++j) {
    for (int i = 0; i < q.rows(); ++i) {
      if (std::abs(q(i, j)) > 1e-12) {
        if (q(i, j) < 0.0) q.col(j) *= -1.0;
        break;
      }
    }
  }
}

double max_offdiag_abs(const Eigen::MatrixXd& m) {
  double worst = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (i != j) worst = std::max(worst, std::abs(m(i, j)));
    }
  }
  return worst;
}

// Recursively rotates the columns [begin, end) of q so that every listed
// matrix is diagonal on that block. Valid for commuting symmetric
// families; each level splits the block by the eigenvalues of the first
// matrix that acts non-trivially on it.
void refine_block(Eigen::MatrixXd& q, int begin, int end,
                  const std::vector<Eigen::MatrixXd>& mats, size_t from) {
  const int width = end - begin;
  if (width <= 1) return;
  for (size_t a = from; a < mats.size(); ++a) {
    const Eigen::MatrixXd block =
        q.middleCols(begin, width).transpose() * mats[a] * q.middleCols(begin, width);
    if (max_offdiag_abs(block) <= 1e-13) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (block + block.transpose()));
    // Reorder descending to keep the global convention.
    Eigen::MatrixXd rot(width, width);
    Eigen::VectorXd vals(width);
    for (int j = 0; j < width; ++j) {
      rot.col(j) = es.eigenvectors().col(width - 1 - j);
      vals(j) = es.eigenvalues()(width - 1 - j);
    }
    q.middleCols(begin, width) = q.middleCols(begin, width) * rot;
    // Recurse into this matrix's own degenerate sub-clusters.
    int start = 0;
    for (int j = 1; j <= width; ++j) {
      if (j == width || std::abs(vals(j) - vals(start)) > kClusterTol) {
        refine_block(q, begin + start, begin + j, mats, a + 1);
        start = j;
      }
    }
    return;
  }
}

}  // namespace

const char* criterion_for(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Pi:
      return kCriterionSquareOfMean;
    case ObjectiveKind::Ac:
      return kCriterionMeanOfSquares;
    case ObjectiveKind::Var:
      return kCriterionVariance;
  }
  return "?";
}

EigenDecomposition sym_eigendecomposition(const Eigen::MatrixXd& T,
                                          double sym_tol) {
  if (T.rows() != T.cols()) {
    throw std::invalid_argument("sym_eigendecomposition: matrix not square");
  }
  const double asym = (T - T.transpose()).cwiseAbs().maxCoeff();
  if (!(asym < sym_tol)) {
    std::ostringstream os;
    os << "sym_eigendecomposition: input asymmetry " << asym;
    throw std::invalid_argument(os.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (T + T.transpose()));
  const int n = static_cast<int>(T.rows());
  EigenDecomposition out;
  out.basis.resize(n, n);
  out.eigvals.resize(n);
  for (int j = 0; j < n; ++j) {
    out.basis.col(j) = es.eigenvectors().col(n - 1 - j);
    out.eigvals(j) = es.eigenvalues()(n - 1 - j);
  }
  fix_column_signs(out.basis);
  return out;
}

SpectralReport joint_eigendecomposition(const Mdp& mdp, double commute_tol) {
  mdp.validate();
  const int n = mdp.n_states;
  const int m = mdp.n_actions;
  for (int a = 0; a < m; ++a) {
    const double asym =
        (mdp.transitions[a] - mdp.transitions[a].transpose()).cwiseAbs().maxCoeff();
    if (!(asym < 1e-10)) {
      std::ostringstream os;
      os << "joint_eigendecomposition: T_" << a << " asymmetry " << asym;
      throw std::invalid_argument(os.str());
    }
  }

  double max_comm = 0.0;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      const Eigen::MatrixXd comm =
          mdp.transitions[a] * mdp.transitions[b] -
          mdp.transitions[b] * mdp.transitions[a];
      max_comm = std::max(max_comm, comm.cwiseAbs().maxCoeff());
    }
  }
  if (!(max_comm < commute_tol)) {
    throw AssumptionViolationError(
        "joint_eigendecomposition: transition matrices do not commute",
        max_comm);
  }

  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(n, n);
  for (const Eigen::MatrixXd& t : mdp.transitions) avg += t;
  avg /= m;
  EigenDecomposition base = sym_eigendecomposition(avg);

  // Inside degenerate eigenspaces of the average the basis is arbitrary;
  // rotate until every action is diagonal there too.
  int start = 0;
  for (int j = 1; j <= n; ++j) {
    if (j == n ||
        std::abs(base.eigvals(j) - base.eigvals(start)) > kClusterTol) {
      refine_block(base.basis, start, j, mdp.transitions, 0);
      start = j;
    }
  }
  fix_column_signs(base.basis);

  SpectralReport report;
  report.basis = base.basis;
  report.eigvals.resize(m, n);
  for (int a = 0; a < m; ++a) {
    const Eigen::MatrixXd d =
        report.basis.transpose() * mdp.transitions[a] * report.basis;
    const double leakage = max_offdiag_abs(d);
    if (!(leakage < kLeakageTol)) {
      throw AssumptionViolationError(
          "joint_eigendecomposition: off-diagonal leakage after refinement",
          leakage);
    }
    report.eigvals.row(a) = d.diagonal();
  }
  return report;
}

CriterionScores criterion_scores(const Eigen::MatrixXd& eigvals,
                                 const Eigen::VectorXd& weights) {
  if (weights.size() != eigvals.rows()) {
    throw std::invalid_argument("criterion_scores: weights/actions mismatch");
  }
  if (weights.minCoeff() < 0.0 ||
      std::abs(weights.sum() - 1.0) >= kStochasticTol) {
    throw std::invalid_argument(
        "criterion_scores: weights must be a probability vector");
  }
  const int n = static_cast<int>(eigvals.cols());
  CriterionScores s;
  s.square_of_mean.resize(n);
  s.mean_of_squares.resize(n);
  s.variance.resize(n);
  for (int i = 0; i < n; ++i) {
    const double mean = weights.dot(eigvals.col(i));
    const double mean_sq = weights.dot(eigvals.col(i).cwiseAbs2());
    s.square_of_mean(i) = mean * mean;
    s.mean_of_squares(i) = mean_sq;
    s.variance(i) = std::max(0.0, mean_sq - mean * mean);
  }
  return s;
}

void annotate_report(SpectralReport& report, const Eigen::VectorXd& weights,
                     int k) {
  const CriterionScores s = criterion_scores(report.eigvals, weights);
  report.criterion_scores[kCriterionSquareOfMean] = s.square_of_mean;
  report.criterion_scores[kCriterionMeanOfSquares] = s.mean_of_squares;
  report.criterion_scores[kCriterionVariance] = s.variance;
  for (const auto& [name, scores] : report.criterion_scores) {
    report.topk_indices[name] = topk_indices_for(scores, k);
  }
}

std::vector<int> topk_indices_for(const Eigen::VectorXd& scores, int k) {
  const int n = static_cast<int>(scores.size());
  if (k < 0 || k > n) {
    throw std::invalid_argument("topk_indices_for: k out of range");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  order.resize(k);
  return order;
}

Eigen::MatrixXd topk_subspace(const SpectralReport& report,
                              const std::string& criterion, int k) {
  const auto it = report.criterion_scores.find(criterion);
  if (it == report.criterion_scores.end()) {
    throw std::invalid_argument("topk_subspace: unknown criterion " +
                                criterion);
  }
  const std::vector<int> idx = topk_indices_for(it->second, k);
  Eigen::MatrixXd out(report.basis.rows(), k);
  for (int j = 0; j < k; ++j) out.col(j) = report.basis.col(idx[j]);
  return out;
}

SubspaceDistance principal_angles(const Eigen::MatrixXd& phi1,
                                  const Eigen::MatrixXd& phi2) {
  if (phi1.rows() != phi2.rows() || phi1.cols() != phi2.cols()) {
    throw std::invalid_argument("principal_angles: shape mismatch");
  }
  const int k = static_cast<int>(phi1.cols());
  if (k < 1 || phi1.rows() < k) {
    throw std::invalid_argument("principal_angles: need n >= k >= 1");
  }

  auto orthonormalize = [k](const Eigen::MatrixXd& phi) -> Eigen::MatrixXd {
    const double resid = (phi.transpose() * phi -
                          Eigen::MatrixXd::Identity(k, k))
                             .cwiseAbs()
                             .maxCoeff();
    if (resid <= 1e-12) return phi;
    if (!(resid < 1e-6)) {
      throw std::invalid_argument(
          "principal_angles: columns too far from orthonormal");
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(phi);
    const Eigen::MatrixXd r =
        qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j) {
      if (std::abs(r(j, j)) < 1e-10) {
        throw std::invalid_argument("principal_angles: rank-deficient input");
      }
    }
    return qr.householderQ() * Eigen::MatrixXd::Identity(phi.rows(), k);
  };

  const Eigen::MatrixXd q1 = orthonormalize(phi1);
  const Eigen::MatrixXd q2 = orthonormalize(phi2);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q1.transpose() * q2);

  SubspaceDistance out;
  out.principal_angles.resize(k);
  for (int i = 0; i < k; ++i) {
    const double sigma = std::clamp(svd.singularValues()(i), 0.0, 1.0);
    out.principal_angles(i) = std::acos(sigma);  // ascending: sigma descending
  }
  out.grassmann = out.principal_angles.norm();
  return out;
}

std::string spectral_report_to_json(const SpectralReport& report) {
  nlohmann::json j;
  const int n = static_cast<int>(report.basis.rows());
  const int m = static_cast<int>(report.eigvals.rows());
  nlohmann::json basis = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < n; ++c) row.push_back(report.basis(i, c));
    basis.push_back(std::move(row));
  }
  j["basis"] = std::move(basis);
  nlohmann::json eig = nlohmann::json::array();
  for (int a = 0; a < m; ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < report.eigvals.cols(); ++c) {
      row.push_back(report.eigvals(a, c));
    }
    eig.push_back(std::move(row));
  }
  j["eigvals"] = std::move(eig);
  nlohmann::json scores;
  for (const auto& [name, v] : report.criterion_scores) {
    scores[name] = std::vector<double>(v.data(), v.data() + v.size());
  }
  j["criterion_scores"] = std::move(scores);
  nlohmann::json topk;
  for (const auto& [name, idx] : report.topk_indices) {
    topk[name] = idx;
  }
  j["topk_indices"] = std::move(topk);
  return j.dump();
}

}  // namespace selfpred
