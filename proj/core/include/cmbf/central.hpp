#pragma once

#include "cmbf/conic.hpp"
#include "cmbf/scenario.hpp"

namespace cmbf::central {

// The requested QoS targets cannot be met by any beamformer set.
using InfeasibleError = conic::InfeasibleError;

struct CentralOptions {
  // epigraph programs are built over at most this many archive samples
  int sample_cap = 500;
  conic::SolveOptions solve;
};

struct CentralResult {
  BeamformingSolution solution;
  double objective = 0.0;
  int iterations = 0;  // interior-point iterations of the one solve
};

// SAA oracle for the lifted SDP: minimize
//   sum_i [ eta_i + (1/((1-theta)n)) sum_s t_{i,s} ]
// over {W_ik PSD, P_i, eta_i, t_{i,s} >= 0} with the per-user SINR
// constraints and the hinge majorants
//   t_{i,s} >= a_s (P_i - e_s) - eta_i,  t_{i,s} >= b_s (P_i - e_s) - eta_i.
CentralResult solve_saa(const SystemModel& model, const SampleDatabase& db,
                        double theta, const CentralOptions& opts = {});

// Rank-one fast path: requires every covariance to satisfy
// lambda2/lambda1 <= 1e-8; solves the SOCP over the beamforming vectors
// directly with the same SAA objective.
CentralResult solve_socp_fastpath(const SystemModel& model,
                                  const SampleDatabase& db, double theta,
                                  const CentralOptions& opts = {});

struct BaselineResult {
  BeamformingSolution solution;
  double total_power = 0.0;
  // transaction cost of each db sample with harvested energy forced to 0
  std::vector<double> cost_samples;
};

// Sum-power minimization under QoS, ignoring the energy market; the cost
// samples price the fixed power vector on each archive entry with e = 0.
BaselineResult solve_no_res_baseline(const SystemModel& model,
                                     const SampleDatabase& db,
                                     const CentralOptions& opts = {});

}  // namespace cmbf::central
