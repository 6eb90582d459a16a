#include <cmath>

#include "cmbf/conic.hpp"

namespace cmbf::conic {

RankOneExtraction extract_rank_one(const CMat& W, double rel_tol) {
  RankOneExtraction out;
  const int n = static_cast<int>(W.rows());
  Eigen::SelfAdjointEigenSolver<CMat> eig(W);
  const auto& vals = eig.eigenvalues();  // ascending
  const double l1 = std::max(0.0, vals(n - 1));
  const double l2 = n > 1 ? std::max(0.0, vals(n - 2)) : 0.0;
  if (l1 <= 0.0) {
    out.vec = CVec::Zero(n);
    out.ok = true;
    out.ratio = 0.0;
    return out;
  }
  out.ratio = l2 / l1;
  out.ok = out.ratio <= rel_tol;
  out.vec = std::sqrt(l1) * eig.eigenvectors().col(n - 1);
  // normalize the phase: largest-magnitude entry real nonnegative
  int imax = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(out.vec(i)) > std::abs(out.vec(imax))) imax = i;
  if (std::abs(out.vec(imax)) > 0.0)
    out.vec *= std::conj(out.vec(imax)) / std::abs(out.vec(imax));
  return out;
}

namespace {

// SINR of candidate vectors, split into signal and interference parts so
// the common rescaling factor can be solved per user
struct SinrParts {
  double signal = 0.0;        // w_ik' R_iik w_ik
  double interference = 0.0;  // all other users' power into UE (i,k)
};

SinrParts sinr_parts(const SystemModel& model, const std::vector<CVec>& w,
                     int i, int k) {
  const int K = model.users_per_cell();
  SinrParts out;
  auto power_into = [&](int j, int l) {
    const CVec& v = w[static_cast<std::size_t>(j) * K + l];
    return (v.adjoint() * model.cov(j, i, k) * v).real()(0);
  };
  out.signal = power_into(i, k);
  for (int l = 0; l < K; ++l)
    if (l != k) out.interference += power_into(i, l);
  for (int j = 0; j < model.num_cells(); ++j) {
    if (j == i) continue;
    for (int l = 0; l < model.users_per_cell(); ++l)
      out.interference += power_into(j, l);
  }
  return out;
}

// smallest common power factor c^2 restoring every SINR constraint when
// all beamformers are scaled by c; negative when no factor works
double required_scaling_sq(const SystemModel& model,
                           const std::vector<CVec>& w) {
  double c2 = 0.0;
  for (int i = 0; i < model.num_cells(); ++i)
    for (int k = 0; k < model.users_per_cell(); ++k) {
      const auto parts = sinr_parts(model, w, i, k);
      const double gamma = model.sinr_target(i, k);
      const double margin = parts.signal - gamma * parts.interference;
      if (margin <= 0.0) return -1.0;
      c2 = std::max(c2, gamma * model.noise_power(i, k) / margin);
    }
  return c2;
}

}  // namespace

BeamformingSolution randomize_and_scale(const SystemModel& model,
                                        const std::vector<CMat>& W,
                                        int trials, Rng& rng) {
  if (trials < 1)
    throw SolverError("randomize_and_scale: trials must be >= 1");
  const int I = model.num_cells();
  const int K = model.users_per_cell();
  if (W.size() != static_cast<std::size_t>(I) * K)
    throw SolverError("randomize_and_scale: block count mismatch");
  const int Nt = model.num_antennas();

  // exact rank-one input: eigen-extraction, scaling only if numerics ask
  {
    std::vector<CVec> w;
    bool all_rank_one = true;
    for (const auto& Wb : W) {
      auto ex = extract_rank_one(Wb, 1e-6);
      if (!ex.ok) {
        all_rank_one = false;
        break;
      }
      w.push_back(std::move(ex.vec));
    }
    if (all_rank_one) {
      auto sol = BeamformingSolution::from_vectors(model, std::move(w), 1e-6);
      if (all_qos_pass(model, sol, 1e-6)) return sol;
      // tiny eigenvalue spill can leave a user slightly short; rescale
      const double c2 = required_scaling_sq(model, sol.w);
      if (c2 > 0.0) {
        for (auto& v : sol.w) v *= std::sqrt(c2);
        sol = BeamformingSolution::from_vectors(model, std::move(sol.w), 1e-6);
        if (all_qos_pass(model, sol, 1e-6)) return sol;
      }
    }
  }

  // eigen-factor each block once: w = U diag(sqrt(eig)) v
  std::vector<CMat> factors;
  factors.reserve(W.size());
  for (const auto& Wb : W) {
    Eigen::SelfAdjointEigenSolver<CMat> eig(Wb);
    factors.push_back(eig.eigenvectors() *
                      eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
  }

  double best_c2 = -1.0;
  std::vector<CVec> best;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<CVec> w(W.size());
    for (std::size_t b = 0; b < W.size(); ++b) {
      CVec v(Nt);
      for (int a = 0; a < Nt; ++a)
        v(a) = std::polar(1.0, rng.uniform(0.0, 2.0 * M_PI));
      w[b] = factors[b] * v;
    }
    const double c2 = required_scaling_sq(model, w);
    if (c2 > 0.0 && (best_c2 < 0.0 || c2 < best_c2)) {
      best_c2 = c2;
      best = std::move(w);
    }
  }
  if (best_c2 < 0.0)
    throw SolverError(
        "randomize_and_scale: no feasible candidate after all trials");
  const double c = std::sqrt(best_c2);
  for (auto& v : best) v *= c;
  auto sol = BeamformingSolution::from_vectors(model, std::move(best), 1e-6);
  if (!all_qos_pass(model, sol, 1e-6))
    throw SolverError("randomize_and_scale: scaled candidate fails QoS");
  return sol;
}

}  // namespace cmbf::conic
