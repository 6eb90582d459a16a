#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace cmbf {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One base station's slice of the grid state: buy/sell prices ($/kWh) and
// harvested renewable energy (kW over a unit interval, so kW == kWh).
struct BsState {
  double buy = 0.0;
  double sell = 0.0;
  double harvested = 0.0;
};

// Immutable problem instance: channel covariances, SINR targets, noise
// powers and dimensions. Covariances are Hermitian PSD; construction
// symmetrizes and validates.
class SystemModel {
 public:
  // covariances indexed by (from_bs, to_bs, user), flattened from-major.
  SystemModel(int num_cells, int users_per_cell, int num_antennas,
              std::vector<CMat> covariances, Eigen::ArrayXXd sinr_target,
              Eigen::ArrayXXd noise_power);

  int num_cells() const { return num_cells_; }
  int users_per_cell() const { return users_per_cell_; }
  int num_antennas() const { return num_antennas_; }

  // R_{jik}: channel covariance from BS j to UE (i,k)
  const CMat& cov(int from_bs, int to_bs, int user) const {
    return covariances_[cov_index(from_bs, to_bs, user)];
  }
  double sinr_target(int cell, int user) const { return sinr_target_(cell, user); }
  double noise_power(int cell, int user) const { return noise_power_(cell, user); }

  std::size_t cov_index(int from_bs, int to_bs, int user) const;

 private:
  int num_cells_;
  int users_per_cell_;
  int num_antennas_;
  std::vector<CMat> covariances_;
  Eigen::ArrayXXd sinr_target_;
  Eigen::ArrayXXd noise_power_;
};

// Per-BS beamforming matrices, optionally extracted vectors, transmit
// powers and CVaR thresholds.
struct BeamformingSolution {
  // W[i*K + k]: lifted beamforming matrix of UE (i,k)
  std::vector<CMat> W;
  // extracted beamformers; empty when no rank-one extraction was done
  std::vector<CVec> w;
  Eigen::VectorXd power;      // P_i
  Eigen::VectorXd threshold;  // eta_i
  double extraction_tol = 0.0;

  bool has_vectors() const { return !w.empty(); }
  // recompute P_i = sum_k tr(W_ik) from the matrices
  static Eigen::VectorXd powers_from_matrices(const std::vector<CMat>& W,
                                              int num_cells, int users_per_cell);
  // lift extracted vectors back into a full solution (W = w w^H)
  static BeamformingSolution from_vectors(const SystemModel& model,
                                          std::vector<CVec> w,
                                          double extraction_tol);
};

// Long-term SINR of UE (i,k) evaluated on the lifted matrices:
// tr(R_iik W_ik) / (intra + inter interference + sigma^2).
double sinr(const SystemModel& model, const BeamformingSolution& sol, int cell,
            int user);

// Net two-way trading cost: buy the shortfall at `s.buy`, sell the surplus
// at `s.sell`. Requires s.buy >= s.sell >= 0.
double transaction_cost(double power, const BsState& s);

// Per-user QoS check: pass iff sinr >= gamma * (1 - rel_tol).
Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> check_qos(
    const SystemModel& model, const BeamformingSolution& sol, double rel_tol);

bool all_qos_pass(const SystemModel& model, const BeamformingSolution& sol,
                  double rel_tol);

}  // namespace cmbf
