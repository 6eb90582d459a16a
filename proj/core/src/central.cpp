#include "cmbf/central.hpp"

#include <algorithm>

namespace cmbf::central {

namespace {

using conic::BlockId;
using conic::ConicProblem;
using conic::LinExpr;

// W[i*K + k] lifted blocks plus the per-BS power equalities and the
// per-user SINR inequalities shared by all centralized programs
struct LiftedVars {
  std::vector<BlockId> W;
  std::vector<BlockId> P;
};

LiftedVars add_lifted_qos(ConicProblem& prob, const SystemModel& model) {
  const int I = model.num_cells();
  const int K = model.users_per_cell();
  LiftedVars v;
  for (int i = 0; i < I; ++i)
    for (int k = 0; k < K; ++k)
      v.W.push_back(prob.add_psd_block(model.num_antennas()));
  for (int i = 0; i < I; ++i) {
    v.P.push_back(prob.add_scalar());
    LinExpr e;
    e.add(v.P[i], 1.0);
    for (int k = 0; k < K; ++k)
      e.add_trace(v.W[static_cast<std::size_t>(i) * K + k],
                  -CMat::Identity(model.num_antennas(), model.num_antennas()));
    prob.add_eq(std::move(e));
  }
  for (int i = 0; i < I; ++i)
    for (int k = 0; k < K; ++k) {
      // scaled through by gamma so tiny targets keep the rows
      // well-conditioned: tr(R W_ik) - gamma * interference >= gamma sigma^2
      const double gamma = model.sinr_target(i, k);
      LinExpr e;
      for (int j = 0; j < I; ++j) {
        const CMat& R = model.cov(j, i, k);
        for (int l = 0; l < K; ++l) {
          const bool own = j == i && l == k;
          const double coeff = own ? 1.0 : -gamma;
          e.add_trace(v.W[static_cast<std::size_t>(j) * K + l], coeff * R);
        }
      }
      e.add_constant(-gamma * model.noise_power(i, k));
      prob.add_ineq_nonneg(std::move(e));
    }
  return v;
}

// objective eta_i + (1/((1-theta)n)) sum_s t_{i,s} with the two affine
// hinge majorants; returns the eta blocks for later readout
std::vector<BlockId> add_saa_objective(ConicProblem& prob,
                                       const std::vector<BlockId>& P,
                                       const SampleDatabase& db, double theta,
                                       int sample_cap) {
  const int I = static_cast<int>(P.size());
  const int n = static_cast<int>(
      std::min<std::size_t>(db.size(), static_cast<std::size_t>(sample_cap)));
  const double scale = 1.0 / ((1.0 - theta) * n);
  std::vector<BlockId> eta;
  for (int i = 0; i < I; ++i) {
    eta.push_back(prob.add_scalar());
    prob.add_objective(eta[i], 1.0);
    for (int s = 0; s < n; ++s) {
      const BsState& st = db.samples[s].bs[i];
      const BlockId t = prob.add_nonneg();
      prob.add_objective(t, scale);
      for (double price : {st.buy, st.sell}) {
        LinExpr e;  // t - price*(P - e) + eta >= 0
        e.add(t, 1.0).add(P[i], -price).add(eta[i], 1.0);
        e.add_constant(price * st.harvested);
        prob.add_ineq_nonneg(std::move(e));
      }
    }
  }
  return eta;
}

conic::ConicSolution solve_or_throw(const ConicProblem& prob,
                                    const conic::SolveOptions& opts) {
  auto sol = conic::solve(prob, opts);
  switch (sol.status) {
    case conic::SolveStatus::optimal:
      return sol;
    case conic::SolveStatus::infeasible:
      throw InfeasibleError(
          "QoS constraints infeasible: dual certificate found (SINR targets "
          "too aggressive for the channel geometry)");
    case conic::SolveStatus::unbounded:
      throw conic::SolverError("centralized program unbounded below");
    default:
      throw conic::SolverError("centralized solve failed to converge");
  }
}

void validate(const SampleDatabase& db, double theta, int num_cells) {
  if (db.samples.empty()) throw ConfigError("sample database is empty");
  if (db.num_bs != num_cells)
    throw ConfigError("database BS count does not match the model");
  if (theta < 0.0 || theta >= 1.0)
    throw ConfigError("theta must lie in [0, 1)");
}

}  // namespace

CentralResult solve_saa(const SystemModel& model, const SampleDatabase& db,
                        double theta, const CentralOptions& opts) {
  validate(db, theta, model.num_cells());
  const int I = model.num_cells();
  const int K = model.users_per_cell();

  ConicProblem prob;
  auto vars = add_lifted_qos(prob, model);
  auto eta = add_saa_objective(prob, vars.P, db, theta, opts.sample_cap);
  auto csol = solve_or_throw(prob, opts.solve);

  CentralResult out;
  out.objective = csol.objective;
  out.iterations = csol.iterations;
  auto& sol = out.solution;
  sol.power = Eigen::VectorXd(I);
  sol.threshold = Eigen::VectorXd(I);
  for (int i = 0; i < I; ++i) {
    sol.power(i) = csol.value(prob, vars.P[i]);
    sol.threshold(i) = csol.value(prob, eta[i]);
  }
  sol.W.reserve(vars.W.size());
  for (auto id : vars.W) sol.W.push_back(csol.psd_value(prob, id));
  // opportunistic extraction: keep the vectors when every block is
  // numerically rank-one already
  std::vector<CVec> w;
  for (const auto& Wb : sol.W) {
    auto ex = conic::extract_rank_one(Wb, 1e-6);
    if (!ex.ok) break;
    w.push_back(std::move(ex.vec));
  }
  if (w.size() == sol.W.size()) {
    sol.w = std::move(w);
    sol.extraction_tol = 1e-6;
  }
  (void)K;
  return out;
}

CentralResult solve_socp_fastpath(const SystemModel& model,
                                  const SampleDatabase& db, double theta,
                                  const CentralOptions& opts) {
  validate(db, theta, model.num_cells());
  const int I = model.num_cells();
  const int K = model.users_per_cell();
  const int Nt = model.num_antennas();

  // h_jik = sqrt(lambda1) * principal eigenvector; hard precondition
  std::vector<CVec> h(static_cast<std::size_t>(I) * I * K);
  for (int j = 0; j < I; ++j)
    for (int i = 0; i < I; ++i)
      for (int k = 0; k < K; ++k) {
        auto ex = conic::extract_rank_one(model.cov(j, i, k), 1e-8);
        if (!ex.ok)
          throw ModelError(
              "solve_socp_fastpath: covariance is not rank-one "
              "(lambda2/lambda1 > 1e-8)");
        h[model.cov_index(j, i, k)] = std::move(ex.vec);
      }

  ConicProblem prob;
  // w_ik as interleaved (re, im) scalar blocks
  std::vector<std::vector<BlockId>> wvar(static_cast<std::size_t>(I) * K);
  for (auto& blocks : wvar) {
    blocks.reserve(2 * Nt);
    for (int a = 0; a < 2 * Nt; ++a) blocks.push_back(prob.add_scalar());
  }
  auto re_part = [&](const CVec& ch, int block, LinExpr& e, double sign) {
    // sign * Re(ch^H w_block)
    for (int a = 0; a < Nt; ++a) {
      e.add(wvar[block][2 * a], sign * ch(a).real());
      e.add(wvar[block][2 * a + 1], sign * ch(a).imag());
    }
  };
  auto im_part = [&](const CVec& ch, int block, LinExpr& e) {
    // Im(ch^H w_block)
    for (int a = 0; a < Nt; ++a) {
      e.add(wvar[block][2 * a + 1], ch(a).real());
      e.add(wvar[block][2 * a], -ch(a).imag());
    }
  };

  // power cones: (1+P)/2 >= || (w_i, (1-P)/2) ||
  std::vector<BlockId> P;
  for (int i = 0; i < I; ++i) {
    P.push_back(prob.add_scalar());
    LinExpr head(0.5);
    head.add(P[i], 0.5);
    std::vector<LinExpr> tail;
    for (int k = 0; k < K; ++k)
      for (int a = 0; a < 2 * Nt; ++a) {
        LinExpr comp;
        comp.add(wvar[static_cast<std::size_t>(i) * K + k][a], 1.0);
        tail.push_back(std::move(comp));
      }
    LinExpr last(0.5);
    last.add(P[i], -0.5);
    tail.push_back(std::move(last));
    prob.add_soc(std::move(head), std::move(tail));
  }

  // SINR cones: Re(h_iik^H w_ik)/sqrt(gamma) >= || (interference, sigma) ||
  for (int i = 0; i < I; ++i)
    for (int k = 0; k < K; ++k) {
      LinExpr head;
      re_part(h[model.cov_index(i, i, k)], i * K + k, head,
              1.0 / std::sqrt(model.sinr_target(i, k)));
      std::vector<LinExpr> tail;
      for (int j = 0; j < I; ++j)
        for (int l = 0; l < K; ++l) {
          if (j == i && l == k) continue;
          const CVec& ch = h[model.cov_index(j, i, k)];
          LinExpr re, im;
          re_part(ch, j * K + l, re, 1.0);
          im_part(ch, j * K + l, im);
          tail.push_back(std::move(re));
          tail.push_back(std::move(im));
        }
      tail.emplace_back(std::sqrt(model.noise_power(i, k)));
      prob.add_soc(std::move(head), std::move(tail));
    }

  auto eta = add_saa_objective(prob, P, db, theta, opts.sample_cap);
  auto csol = solve_or_throw(prob, opts.solve);

  std::vector<CVec> w(static_cast<std::size_t>(I) * K);
  for (int b = 0; b < I * K; ++b) {
    w[b] = CVec(Nt);
    for (int a = 0; a < Nt; ++a)
      w[b](a) = Complex(csol.value(prob, wvar[b][2 * a]),
                        csol.value(prob, wvar[b][2 * a + 1]));
  }
  CentralResult out;
  out.objective = csol.objective;
  out.iterations = csol.iterations;
  out.solution = BeamformingSolution::from_vectors(model, std::move(w), 0.0);
  for (int i = 0; i < I; ++i)
    out.solution.threshold(i) = csol.value(prob, eta[i]);
  return out;
}

BaselineResult solve_no_res_baseline(const SystemModel& model,
                                     const SampleDatabase& db,
                                     const CentralOptions& opts) {
  if (db.samples.empty()) throw ConfigError("sample database is empty");
  if (db.num_bs != model.num_cells())
    throw ConfigError("database BS count does not match the model");
  const int I = model.num_cells();

  ConicProblem prob;
  auto vars = add_lifted_qos(prob, model);
  for (int i = 0; i < I; ++i) prob.add_objective(vars.P[i], 1.0);
  auto csol = solve_or_throw(prob, opts.solve);

  BaselineResult out;
  out.total_power = csol.objective;
  auto& sol = out.solution;
  sol.power = Eigen::VectorXd(I);
  for (int i = 0; i < I; ++i) sol.power(i) = csol.value(prob, vars.P[i]);
  sol.threshold = Eigen::VectorXd::Zero(I);
  sol.W.reserve(vars.W.size());
  for (auto id : vars.W) sol.W.push_back(csol.psd_value(prob, id));

  out.cost_samples.reserve(db.size());
  for (const auto& sample : db.samples) {
    double cost = 0.0;
    for (int i = 0; i < I; ++i) {
      BsState st = sample.bs[i];
      st.harvested = 0.0;
      cost += transaction_cost(sol.power(i), st);
    }
    out.cost_samples.push_back(cost);
  }
  return out;
}

}  // namespace cmbf::central
