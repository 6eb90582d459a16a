#pragma once

#include <filesystem>

#include "cmbf/conic.hpp"
#include "cmbf/cvar.hpp"
#include "cmbf/scenario.hpp"

namespace cmbf::sadmm {

// Index bookkeeping for the consensus split: per-BS private vector
// q_i in R^{IK} (first K slots Q_{ik}, then q_{ijk} for j != i ordered by
// j then k) and the public vector qbar in R^{I(I-1)K} (ordered by source
// i, receiver j != i, user k).
struct ConsensusLayout {
  int num_cells = 0;
  int users_per_cell = 0;

  int private_dim() const { return num_cells * users_per_cell; }
  int public_dim() const {
    return num_cells * (num_cells - 1) * users_per_cell;
  }

  // slot of Q_{ik} in q_i
  int private_sum_slot(int k) const { return k; }
  // slot of q_{ijk} (j != i) in q_i
  int private_cross_slot(int i, int j, int k) const;
  // slot of qbar_{ijk} (source i, receiver j != i)
  int public_slot(int i, int j, int k) const;

  // materialized selection/summation matrix B_i (tests and the dense
  // reference path; the closed-form updates use the slot maps directly)
  Eigen::MatrixXd B(int i) const;
  // B_i qbar without materializing B_i
  Eigen::VectorXd apply_B(int i, const Eigen::VectorXd& qbar) const;
};

ConsensusLayout build_layout(int num_cells, int users_per_cell);

// Everything one BS holds between rounds.
struct AgentState {
  double P = 0.0;
  double eta = 0.0;
  Eigen::VectorXd q;       // R^{IK}
  Eigen::VectorXd lambda;  // R^{IK}
  std::vector<CMat> W;     // K lifted blocks
};

struct IterationTrace {
  struct Row {
    int iter = 0;          // 1-based round number
    int sample_index = 0;  // archive index drawn for the round
    double inst_objective = 0.0;
    double avg_objective = 0.0;
    double residual = 0.0;
    double wall_ms = 0.0;
  };
  std::vector<Row> rows;

  void save_csv(const std::filesystem::path& path) const;
};

enum class ZetaMode { constant, sqrt_decay };

struct SadmmParams {
  double theta = 0.9;
  double rho = 1.0;
  ZetaMode zeta_mode = ZetaMode::sqrt_decay;
  double zeta0 = 0.1;
  int max_iters = 500;
  double residual_stop = 1e-3;
  double avg_change_stop = 1e-4;
  int stop_window = 50;
  int rand_trials = 100;
  int num_threads = 0;  // 0: one thread per agent
  conic::SolveOptions solve;
};

struct SadmmResult {
  BeamformingSolution solution;
  IterationTrace trace;
  bool converged = false;
  double final_avg_objective = 0.0;
  int iterations = 0;
};

// One BS's conic subproblem: minimize
//   P * grad_P + lambda' q + (rho/2)||B_i qbar - q||^2
//   + (||P - P_m||^2 + ||q - q_m||^2) / (2 zeta)
// over the local feasible set {W_ik PSD, P = sum tr W_ik, Q_ik >= 0,
// q_ijk = interference caused at UE (j,k), per-user SINR with Q_ik as
// the foreign-interference budget}.
AgentState local_primal_update(const AgentState& agent,
                               const ConsensusLayout& layout,
                               const SystemModel& model, int cell,
                               const Eigen::VectorXd& qbar, double grad_P,
                               double rho, double zeta,
                               const conic::SolveOptions& solve = {});

// eta(m+1) = eta(m) - zeta * dF/deta  (closed form, no solver)
double local_eta_update(double eta, double grad_eta, double zeta);

// exact minimizer of the public objective: solves
// (sum_i B_i' B_i) qbar = sum_i B_i'(q_i + lambda_i / rho) blockwise
Eigen::VectorXd public_update(const std::vector<AgentState>& agents,
                              const ConsensusLayout& layout, double rho);

// lambda_i(m+1) = lambda_i(m) - rho (B_i qbar - q_i)
Eigen::VectorXd dual_update(const AgentState& agent,
                            const ConsensusLayout& layout, int cell,
                            const Eigen::VectorXd& qbar, double rho);

SadmmResult run(const SystemModel& model, const SampleDatabase& db,
                const SadmmParams& params, Rng& rng);

}  // namespace cmbf::sadmm
