#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "selfpred/dynamics.hpp"
#include "selfpred/spectral.hpp"

namespace selfpred {

inline constexpr const char* kVersion = "0.1.0";

// Absolute difference below which two competing values count as a tie
// (the instance is then not credited to any method).
inline constexpr double kTieTol = 1e-9;

struct ExperimentConfig {
  int n_states = 10;
  int n_actions = 4;
  int k = 4;
  int n_mdps = 100;
  double gamma = 0.99;
  double reward_scale = 1.0;
  std::uint64_t seed = 0;

  // Integrator fields; step_size <= 0 means 0.5 * n_states.
  double step_size = 0.0;
  int max_iters = 20000;
  double grad_tol = 1e-9;
  int retraction_period = 100;
  bool adaptive = true;

  std::vector<double> epsilon_list = {0.01, 0.03, 0.1, 0.25};
  int n_reward_samples = 1000;
  std::string output_dir = ".";
  std::string format = "csv";  // csv | json

  void validate() const;
  IntegratorConfig integrator() const;
};

ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

struct CellStat {
  double mean = 0.0;
  double stderr_ = 0.0;  // 1.96 x standard error of the mean
};

// Negative-trace cross table: rows = objective evaluated, columns =
// representation trained; pr_best[o] is how often the representation
// trained on objective o attains the row minimum.
struct CrossTable {
  std::array<std::array<CellStat, 3>, 3> neg_trace;
  std::array<double, 3> pr_best = {0.0, 0.0, 0.0};
  int n_instances = 0;
  int n_skipped = 0;
  int n_unconverged = 0;
  int n_ties = 0;
  bool degenerate = false;  // single-action family
};
CrossTable run_cross_objective_table(const ExperimentConfig& cfg);

// Value-fitting table: rows = V, Q, Advantage MSE; columns =
// representation; pr_best[row][col] is how often that representation
// attains the row minimum.
struct ValueMseTable {
  std::array<std::array<CellStat, 3>, 3> mse;
  std::array<std::array<double, 3>, 3> pr_best{};
  int n_instances = 0;
  int n_skipped = 0;
  int n_unconverged = 0;
  int n_ties = 0;
};
ValueMseTable run_value_mse_table(const ExperimentConfig& cfg);

// Representation shift under policy perturbation, one row per epsilon.
struct RobustnessRow {
  double epsilon = 0.0;
  std::array<CellStat, 3> delta;       // Grassmann distances per objective
  std::array<double, 3> pr_smallest = {0.0, 0.0, 0.0};
  int n_runs = 0;
  int n_skipped = 0;
  int n_ties = 0;
};
std::vector<RobustnessRow> run_robustness_table(const ExperimentConfig& cfg);

// Trace-objective ratio curves on non-symmetric MDPs for Pi and Ac.
struct TraceRatioCurves {
  std::vector<int> grid;  // iteration indices of the sampled curve points
  // curves[objective][run][grid point]; objective 0 = pi, 1 = ac
  std::array<std::vector<std::vector<double>>, 2> curves;
  std::array<std::vector<double>, 2> median;        // per grid point
  std::array<std::vector<double>, 2> init_ratios;   // per run
  std::array<std::vector<double>, 2> final_ratios;  // per run
  int n_runs = 0;
  int n_excluded = 0;  // non-positive reference objective
};
TraceRatioCurves run_trace_ratio_curves(const ExperimentConfig& cfg);

// Eigenvector-picking demo on a two-action common-eigenbasis fixture.
struct EigenPickingDemo {
  Mdp mdp;
  SpectralReport report;
  double decomposition_residual = 0.0;  // max |ac - pi - var| over indices
};
EigenPickingDemo run_eigen_picking_demo(const ExperimentConfig& cfg);

// Writers: one table/figure file (csv or json per config.format) plus a
// manifest.json in cfg.output_dir; return the paths written.
std::vector<std::string> write_cross_table(const CrossTable& t,
                                           const ExperimentConfig& cfg);
std::vector<std::string> write_value_mse_table(const ValueMseTable& t,
                                               const ExperimentConfig& cfg);
std::vector<std::string> write_robustness_table(
    const std::vector<RobustnessRow>& rows, const ExperimentConfig& cfg);
std::vector<std::string> write_trace_ratio_curves(const TraceRatioCurves& t,
                                                  const ExperimentConfig& cfg);
std::vector<std::string> write_eigen_picking_demo(const EigenPickingDemo& d,
                                                  const ExperimentConfig& cfg);

std::string write_manifest(const ExperimentConfig& cfg,
                           const std::string& command, int n_skipped,
                           const std::vector<std::string>& outputs);

}  // namespace selfpred
