#pragma once

#include <map>
#include <string>
#include <vector>

#include "selfpred/mdp.hpp"
#include "selfpred/objectives.hpp"

namespace selfpred {

// Criterion names used in reports and selection.
inline constexpr const char* kCriterionSquareOfMean = "square-of-mean";
inline constexpr const char* kCriterionMeanOfSquares = "mean-of-squares";
inline constexpr const char* kCriterionVariance = "variance";

// Eigenvalue-selection criterion matching each objective's limit point.
const char* criterion_for(ObjectiveKind kind);

struct EigenDecomposition {
  Eigen::MatrixXd basis;    // orthogonal, columns are eigenvectors
  Eigen::VectorXd eigvals;  // descending
};

// Symmetric eigendecomposition with descending eigenvalues and a
// deterministic sign convention (first nonzero entry of each column
// positive). Throws std::invalid_argument for asymmetric input.
EigenDecomposition sym_eigendecomposition(const Eigen::MatrixXd& T,
                                          double sym_tol = 1e-10);

struct SpectralReport {
  Eigen::MatrixXd basis;    // n x n shared eigenbasis Q
  Eigen::MatrixXd eigvals;  // m x n, row a holds diag of Q^T T_a Q
  std::map<std::string, Eigen::VectorXd> criterion_scores;
  std::map<std::string, std::vector<int>> topk_indices;
};

// Simultaneous diagonalization of a commuting symmetric family:
// diagonalize the average, refine inside degenerate clusters, audit
// off-diagonal leakage. Throws AssumptionViolationError (with the max
// commutator norm) when the matrices do not commute within commute_tol.
SpectralReport joint_eigendecomposition(const Mdp& mdp,
                                        double commute_tol = 1e-8);

struct CriterionScores {
  Eigen::VectorXd square_of_mean;
  Eigen::VectorXd mean_of_squares;
  Eigen::VectorXd variance;  // mean_of_squares - square_of_mean
};

// Per eigen-index selection scores from per-action eigenvalues
// (rows = actions) and a probability weight per action.
CriterionScores criterion_scores(const Eigen::MatrixXd& eigvals,
                                 const Eigen::VectorXd& weights);

// Fills report.criterion_scores and report.topk_indices for all three
// criteria under the given action weights.
void annotate_report(SpectralReport& report, const Eigen::VectorXd& weights,
                     int k);

// Indices of the k largest scores, ties broken by lower index.
std::vector<int> topk_indices_for(const Eigen::VectorXd& scores, int k);

// Columns of the report basis at the top-k criterion scores, in
// score-descending order.
Eigen::MatrixXd topk_subspace(const SpectralReport& report,
                              const std::string& criterion, int k);

struct SubspaceDistance {
  Eigen::VectorXd principal_angles;  // ascending, in [0, pi/2]
  double grassmann = 0.0;            // euclidean norm of the angles
};

// Principal angles between the column spans of two n x k matrices with
// (approximately) orthonormal columns. Inputs with orthonormality
// residual below 1e-6 are re-orthonormalized internally; worse inputs
// and rank-deficient inputs are rejected.
SubspaceDistance principal_angles(const Eigen::MatrixXd& phi1,
                                  const Eigen::MatrixXd& phi2);

std::string spectral_report_to_json(const SpectralReport& report);

}  // namespace selfpred
