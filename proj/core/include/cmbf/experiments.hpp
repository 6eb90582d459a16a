#pragma once

#include "cmbf/central.hpp"
#include "cmbf/sadmm.hpp"

namespace cmbf::experiments {

enum class Trainer { oracle, admm };

// Sectioned key=value configuration ([scenario] / [algorithm] / [run]);
// unknown keys are hard errors.
struct ExperimentConfig {
  ScenarioConfig scenario;

  struct Algorithm {
    double theta = 0.9;
    double rho = 1.0;
    sadmm::ZetaMode zeta_mode = sadmm::ZetaMode::constant;
    double zeta = 0.1;
    int max_iters = 500;
    double residual_stop = 1e-3;
    double avg_change_stop = 1e-4;
    int stop_window = 50;
    int oracle_samples = 500;
    int trials = 100;
    double solver_tol = 1e-8;
    Trainer trainer = Trainer::oracle;
  } algorithm;

  struct Run {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int eval_samples = 10000;
    std::vector<double> res_means = {0.0, 3.75, 7.5};
    std::vector<double> thetas = {0.0, 0.3, 0.6, 0.9};
    std::vector<int> nt_values = {8, 12, 16};
    std::vector<double> sinr_values = {4.0, 8.0, 12.0};
    std::vector<std::string> experiments;  // informational; verbs select
  } run;

  std::string dump_dir;  // set by --dump-conic; empty disables

  sadmm::SadmmParams sadmm_params() const;
  central::CentralOptions central_options() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

// gen: scenario + training archive to out_dir (database.csv, model.txt)
void run_gen(const ExperimentConfig& cfg);

// oracle: centralized SAA solve; writes oracle.csv (objective, P_i, eta_i)
central::CentralResult run_oracle(const ExperimentConfig& cfg);

struct ConvergenceSummary {
  double oracle_objective = 0.0;
  double final_avg_objective = 0.0;
  int band_entry_iter = -1;  // first iter from which avg stays within 10%
  int iterations = 0;
  bool converged = false;
};
// converge: ADMM + oracle on the same instance; writes
// convergence_trace.csv and convergence_summary.csv
ConvergenceSummary run_convergence(const ExperimentConfig& cfg);

struct SweepRow {
  std::string label;
  double value = 0.0;
  double avg_cost = 0.0;
  double max_cost = 0.0;
  double p99_cost = 0.0;
};

// sweep-res: one row per RES mean plus the No-RES baseline row; writes
// res_sweep.csv and raw per-point cost samples
std::vector<SweepRow> run_res_sweep(const ExperimentConfig& cfg);

// sweep-theta: per-theta held-out cost samples + summary table
std::vector<SweepRow> run_theta_cdf(const ExperimentConfig& cfg);

struct TwoSchemeRow {
  double value = 0.0;  // Nt or gamma
  double cvar_avg = 0.0, cvar_max = 0.0;
  double cost_avg = 0.0, cost_max = 0.0;
};
// sweep-nt / sweep-sinr: Min-CVaR and Min-Cost trained per point
std::vector<TwoSchemeRow> run_nt_sweep(const ExperimentConfig& cfg);
std::vector<TwoSchemeRow> run_sinr_sweep(const ExperimentConfig& cfg);

}  // namespace cmbf::experiments
