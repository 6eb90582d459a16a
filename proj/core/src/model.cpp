#include "cmbf/model.hpp"

#include <cstdio>
#include <iostream>

namespace cmbf {

namespace {
constexpr double kHermitianWarnTol = 1e-8;
constexpr double kPsdEigTol = 1e-9;
}  // namespace

SystemModel::SystemModel(int num_cells, int users_per_cell, int num_antennas,
                         std::vector<CMat> covariances,
                         Eigen::ArrayXXd sinr_target,
                         Eigen::ArrayXXd noise_power)
    : num_cells_(num_cells),
      users_per_cell_(users_per_cell),
      num_antennas_(num_antennas),
      covariances_(std::move(covariances)),
      sinr_target_(std::move(sinr_target)),
      noise_power_(std::move(noise_power)) {
  if (num_cells_ < 1 || users_per_cell_ < 1 || num_antennas_ < 1)
    throw ModelError("SystemModel: dimensions must be positive");
  const std::size_t expected = static_cast<std::size_t>(num_cells_) *
                               num_cells_ * users_per_cell_;
  if (covariances_.size() != expected)
    throw ModelError("SystemModel: covariance count mismatch");
  if (sinr_target_.rows() != num_cells_ || sinr_target_.cols() != users_per_cell_ ||
      noise_power_.rows() != num_cells_ || noise_power_.cols() != users_per_cell_)
    throw ModelError("SystemModel: target/noise array shape mismatch");
  if ((sinr_target_ <= 0.0).any())
    throw ModelError("SystemModel: SINR targets must be > 0");
  if ((noise_power_ <= 0.0).any())
    throw ModelError("SystemModel: noise powers must be > 0");

  for (auto& R : covariances_) {
    if (R.rows() != num_antennas_ || R.cols() != num_antennas_)
      throw ModelError("SystemModel: covariance dimension mismatch");
    const double asym = (R - R.adjoint()).cwiseAbs().maxCoeff();
    if (asym > kHermitianWarnTol)
      std::cerr << "warning: covariance asymmetry " << asym
                << " above 1e-8; symmetrizing\n";
    R = 0.5 * (R + R.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<CMat> eig(R, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -kPsdEigTol)
      throw ModelError("SystemModel: covariance not PSD");
  }
}

std::size_t SystemModel::cov_index(int from_bs, int to_bs, int user) const {
  if (from_bs < 0 || from_bs >= num_cells_ || to_bs < 0 || to_bs >= num_cells_ ||
      user < 0 || user >= users_per_cell_)
    throw ModelError("SystemModel: covariance index out of range");
  return (static_cast<std::size_t>(from_bs) * num_cells_ + to_bs) *
             users_per_cell_ +
         user;
}

Eigen::VectorXd BeamformingSolution::powers_from_matrices(
    const std::vector<CMat>& W, int num_cells, int users_per_cell) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(num_cells);
  for (int i = 0; i < num_cells; ++i)
    for (int k = 0; k < users_per_cell; ++k)
      p(i) += W[static_cast<std::size_t>(i) * users_per_cell + k].real().trace();
  return p;
}

BeamformingSolution BeamformingSolution::from_vectors(const SystemModel& model,
                                                      std::vector<CVec> w,
                                                      double extraction_tol) {
  BeamformingSolution sol;
  sol.w = std::move(w);
  sol.W.reserve(sol.w.size());
  for (const auto& v : sol.w) sol.W.push_back(v * v.adjoint());
  sol.power = powers_from_matrices(sol.W, model.num_cells(),
                                   model.users_per_cell());
  sol.threshold = Eigen::VectorXd::Zero(model.num_cells());
  sol.extraction_tol = extraction_tol;
  return sol;
}

double sinr(const SystemModel& model, const BeamformingSolution& sol, int cell,
            int user) {
  const int I = model.num_cells();
  const int K = model.users_per_cell();
  if (sol.W.size() != static_cast<std::size_t>(I) * K)
    throw ModelError("sinr: solution block count mismatch");
  auto block = [&](int j, int l) -> const CMat& {
    const CMat& Wb = sol.W[static_cast<std::size_t>(j) * K + l];
    if (Wb.rows() != model.num_antennas() || Wb.cols() != model.num_antennas())
      throw ModelError("sinr: solution block dimension mismatch");
    return Wb;
  };
  auto power_into = [&](int j, int l) {
    return (model.cov(j, cell, user) * block(j, l)).real().trace();
  };
  const double signal = power_into(cell, user);
  double interference = 0.0;
  for (int l = 0; l < K; ++l)
    if (l != user) interference += power_into(cell, l);
  for (int j = 0; j < I; ++j) {
    if (j == cell) continue;
    for (int l = 0; l < K; ++l) interference += power_into(j, l);
  }
  return signal / (interference + model.noise_power(cell, user));
}

double transaction_cost(double power, const BsState& s) {
  if (s.buy < s.sell)
    throw ModelError("transaction_cost: buy price below sell price");
  if (s.sell < 0.0) throw ModelError("transaction_cost: negative sell price");
  const double net = power - s.harvested;
  return net >= 0.0 ? s.buy * net : s.sell * net;
}

Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> check_qos(
    const SystemModel& model, const BeamformingSolution& sol, double rel_tol) {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> pass(
      model.num_cells(), model.users_per_cell());
  for (int i = 0; i < model.num_cells(); ++i)
    for (int k = 0; k < model.users_per_cell(); ++k)
      pass(i, k) =
          sinr(model, sol, i, k) >= model.sinr_target(i, k) * (1.0 - rel_tol);
  return pass;
}

bool all_qos_pass(const SystemModel& model, const BeamformingSolution& sol,
                  double rel_tol) {
  return check_qos(model, sol, rel_tol).all();
}

}  // namespace cmbf
