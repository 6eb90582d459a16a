#include "cmbf/sadmm.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>

namespace cmbf::sadmm {

int ConsensusLayout::private_cross_slot(int i, int j, int k) const {
  const int jj = j < i ? j : j - 1;
  return users_per_cell + jj * users_per_cell + k;
}

int ConsensusLayout::public_slot(int i, int j, int k) const {
  const int jj = j < i ? j : j - 1;
  return (i * (num_cells - 1) + jj) * users_per_cell + k;
}

Eigen::MatrixXd ConsensusLayout::B(int i) const {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(private_dim(), public_dim());
  for (int k = 0; k < users_per_cell; ++k)
    for (int j = 0; j < num_cells; ++j)
      if (j != i) B(private_sum_slot(k), public_slot(j, i, k)) = 1.0;
  for (int j = 0; j < num_cells; ++j) {
    if (j == i) continue;
    for (int k = 0; k < users_per_cell; ++k)
      B(private_cross_slot(i, j, k), public_slot(i, j, k)) = 1.0;
  }
  return B;
}

Eigen::VectorXd ConsensusLayout::apply_B(int i,
                                         const Eigen::VectorXd& qbar) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(private_dim());
  for (int k = 0; k < users_per_cell; ++k)
    for (int j = 0; j < num_cells; ++j)
      if (j != i) out(private_sum_slot(k)) += qbar(public_slot(j, i, k));
  for (int j = 0; j < num_cells; ++j) {
    if (j == i) continue;
    for (int k = 0; k < users_per_cell; ++k)
      out(private_cross_slot(i, j, k)) = qbar(public_slot(i, j, k));
  }
  return out;
}

ConsensusLayout build_layout(int num_cells, int users_per_cell) {
  if (num_cells < 2)
    throw ConfigError(
        "build_layout: need at least two cells (single-cell problems have "
        "no consensus variables; use the centralized path)");
  if (users_per_cell < 1)
    throw ConfigError("build_layout: users_per_cell must be >= 1");
  return ConsensusLayout{num_cells, users_per_cell};
}

void IterationTrace::save_csv(const std::filesystem::path& path) const {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw ParseError("cannot open trace file: " + path.string());
  std::fprintf(f, "iter,sample_index,inst_objective,avg_objective,residual,wall_ms\n");
  for (const auto& r : rows)
    std::fprintf(f, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.sample_index,
                 r.inst_objective, r.avg_objective, r.residual, r.wall_ms);
  std::fclose(f);
}

AgentState local_primal_update(const AgentState& agent,
                               const ConsensusLayout& layout,
                               const SystemModel& model, int cell,
                               const Eigen::VectorXd& qbar, double grad_P,
                               double rho, double zeta,
                               const conic::SolveOptions& solve) {
  if (rho <= 0.0) throw ConfigError("local_primal_update: rho must be > 0");
  if (zeta <= 0.0) throw ConfigError("local_primal_update: zeta must be > 0");
  const int I = layout.num_cells;
  const int K = layout.users_per_cell;
  const int Nt = model.num_antennas();
  using conic::BlockId;
  using conic::LinExpr;

  conic::ConicProblem prob;
  std::vector<BlockId> W;
  for (int k = 0; k < K; ++k) W.push_back(prob.add_psd_block(Nt));
  const BlockId P = prob.add_scalar();
  // private vector: Q_ik >= 0, then q_ijk tied to the caused interference
  std::vector<BlockId> q(layout.private_dim());
  for (int k = 0; k < K; ++k) q[layout.private_sum_slot(k)] = prob.add_nonneg();
  for (int j = 0; j < I; ++j) {
    if (j == cell) continue;
    for (int k = 0; k < K; ++k)
      q[layout.private_cross_slot(cell, j, k)] = prob.add_scalar();
  }

  {  // P = sum_k tr W_ik
    LinExpr e;
    e.add(P, 1.0);
    for (int k = 0; k < K; ++k)
      e.add_trace(W[k], -CMat::Identity(Nt, Nt));
    prob.add_eq(std::move(e));
  }
  // q_ijk = sum_l tr(R_ijk W_il)
  for (int j = 0; j < I; ++j) {
    if (j == cell) continue;
    for (int k = 0; k < K; ++k) {
      LinExpr e;
      e.add(q[layout.private_cross_slot(cell, j, k)], 1.0);
      const CMat& R = model.cov(cell, j, k);
      for (int l = 0; l < K; ++l) e.add_trace(W[l], -R);
      prob.add_eq(std::move(e));
    }
  }
  // (1/gamma) tr(R_iik W_ik) - sum_{l != k} tr(R_iik W_il) - Q_ik >= sigma^2
  for (int k = 0; k < K; ++k) {
    LinExpr e;
    const CMat& R = model.cov(cell, cell, k);
    for (int l = 0; l < K; ++l)
      e.add_trace(W[l], (l == k ? 1.0 / model.sinr_target(cell, k) : -1.0) * R);
    e.add(q[layout.private_sum_slot(k)], -1.0);
    e.add_constant(-model.noise_power(cell, k));
    prob.add_ineq_nonneg(std::move(e));
  }

  // objective: grad_P * P + lambda' q + (rho/2)||B qbar - q||^2
  //            + (1/2zeta)(P - P_m)^2 + (1/2zeta)||q - q_m||^2
  prob.add_objective(P, grad_P);
  for (int s = 0; s < layout.private_dim(); ++s)
    prob.add_objective(q[s], agent.lambda(s));
  const Eigen::VectorXd target = layout.apply_B(cell, qbar);
  std::vector<LinExpr> quad;
  const double wr = std::sqrt(rho / 2.0);
  const double wp = std::sqrt(1.0 / (2.0 * zeta));
  for (int s = 0; s < layout.private_dim(); ++s) {
    LinExpr e(-wr * target(s));
    e.add(q[s], wr);
    quad.push_back(std::move(e));
    LinExpr p(-wp * agent.q(s));
    p.add(q[s], wp);
    quad.push_back(std::move(p));
  }
  {
    LinExpr p(-wp * agent.P);
    p.add(P, wp);
    quad.push_back(std::move(p));
  }
  prob.add_quadratic_objective(1.0, std::move(quad));

  auto csol = conic::solve(prob, solve);
  if (csol.status == conic::SolveStatus::infeasible)
    throw conic::InfeasibleError(
        "ADMM subproblem infeasible at BS " + std::to_string(cell) +
        " (QoS unreachable even with zero foreign interference)");
  if (!csol.ok())
    throw conic::SolverError("ADMM subproblem solve failed at BS " +
                             std::to_string(cell));

  AgentState out = agent;
  out.P = csol.value(prob, P);
  out.q = Eigen::VectorXd(layout.private_dim());
  for (int s = 0; s < layout.private_dim(); ++s)
    out.q(s) = csol.value(prob, q[s]);
  out.W.clear();
  for (int k = 0; k < K; ++k) out.W.push_back(csol.psd_value(prob, W[k]));
  return out;
}

double local_eta_update(double eta, double grad_eta, double zeta) {
  return eta - zeta * grad_eta;
}

Eigen::VectorXd public_update(const std::vector<AgentState>& agents,
                              const ConsensusLayout& layout, double rho) {
  if (rho <= 0.0) throw ConfigError("public_update: rho must be > 0");
  const int I = layout.num_cells;
  const int K = layout.users_per_cell;
  Eigen::VectorXd qbar(layout.public_dim());
  // one receiver group (j,k) at a time: slots qbar_{ijk}, i != j; the
  // normal matrix restricted to the group is identity + all-ones, whose
  // inverse subtracts the group mean scaled by 1/I
  Eigen::VectorXd r(I - 1);
  for (int j = 0; j < I; ++j)
    for (int k = 0; k < K; ++k) {
      int g = 0;
      for (int i = 0; i < I; ++i) {
        if (i == j) continue;
        r(g) = agents[i].q(layout.private_cross_slot(i, j, k)) +
               agents[i].lambda(layout.private_cross_slot(i, j, k)) / rho +
               agents[j].q(layout.private_sum_slot(k)) +
               agents[j].lambda(layout.private_sum_slot(k)) / rho;
        ++g;
      }
      const double shift = r.sum() / I;
      g = 0;
      for (int i = 0; i < I; ++i) {
        if (i == j) continue;
        qbar(layout.public_slot(i, j, k)) = r(g) - shift;
        ++g;
      }
    }
  return qbar;
}

Eigen::VectorXd dual_update(const AgentState& agent,
                            const ConsensusLayout& layout, int cell,
                            const Eigen::VectorXd& qbar, double rho) {
  return agent.lambda - rho * (layout.apply_B(cell, qbar) - agent.q);
}

SadmmResult run(const SystemModel& model, const SampleDatabase& db,
                const SadmmParams& params, Rng& rng) {
  const int I = model.num_cells();
  const int K = model.users_per_cell();
  const ConsensusLayout layout = build_layout(I, K);
  if (db.samples.empty()) throw ConfigError("sadmm::run: empty database");
  if (db.num_bs != I)
    throw ConfigError("sadmm::run: database BS count mismatch");
  if (params.theta < 0.0 || params.theta >= 1.0)
    throw ConfigError("sadmm::run: theta must lie in [0, 1)");

  std::vector<AgentState> agents(I);
  for (auto& a : agents) {
    a.q = Eigen::VectorXd::Zero(layout.private_dim());
    a.lambda = Eigen::VectorXd::Zero(layout.private_dim());
    a.W.assign(K, CMat::Zero(model.num_antennas(), model.num_antennas()));
  }
  Eigen::VectorXd qbar = Eigen::VectorXd::Zero(layout.public_dim());

  SadmmResult out;
  double obj_sum = 0.0;
  std::vector<double> avg_history;
  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<AgentState> best_agents;

  for (int m = 1; m <= params.max_iters; ++m) {
    const auto t0 = std::chrono::steady_clock::now();
    const int sample_index = static_cast<int>(rng.index(db.size()));
    const RandomState& s = db.samples[sample_index];
    const double zeta = params.zeta_mode == ZetaMode::constant
                            ? params.zeta0
                            : params.zeta0 / std::sqrt(static_cast<double>(m));

    // subgradients at the incumbent, then the primal solves in parallel
    std::vector<TailCostSubgradient> grads(I);
    for (int i = 0; i < I; ++i)
      grads[i] =
          tail_cost_subgradient(agents[i].P, agents[i].eta, s.bs[i], params.theta);
    std::vector<std::future<AgentState>> futs;
    futs.reserve(I);
    for (int i = 0; i < I; ++i)
      futs.push_back(std::async(std::launch::async, [&, i] {
        return local_primal_update(agents[i], layout, model, i, qbar,
                                   grads[i].d_power, params.rho, zeta,
                                   params.solve);
      }));
    for (int i = 0; i < I; ++i) {
      AgentState next = futs[i].get();
      next.eta = local_eta_update(agents[i].eta, grads[i].d_eta, zeta);
      agents[i] = std::move(next);
    }

    qbar = public_update(agents, layout, params.rho);
    for (int i = 0; i < I; ++i)
      agents[i].lambda = dual_update(agents[i], layout, i, qbar, params.rho);

    double inst = 0.0;
    double residual = 0.0;
    for (int i = 0; i < I; ++i) {
      inst += tail_cost(agents[i].P, agents[i].eta, s.bs[i], params.theta);
      residual += (layout.apply_B(i, qbar) - agents[i].q).norm();
    }
    obj_sum += inst;
    const double avg = obj_sum / m;
    avg_history.push_back(avg);
    if (residual < best_residual) {
      best_residual = residual;
      best_agents = agents;
    }

    const double wall_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - t0)
            .count();
    out.trace.rows.push_back({m, sample_index, inst, avg, residual, wall_ms});
    out.iterations = m;

    if (m > params.stop_window && residual <= params.residual_stop) {
      const double prev = avg_history[m - 1 - params.stop_window];
      const double rel = std::abs(avg - prev) / std::max(std::abs(prev), 1e-12);
      if (rel <= params.avg_change_stop) {
        out.converged = true;
        break;
      }
    }
  }

  const std::vector<AgentState>& final_agents =
      out.converged ? agents : best_agents;
  std::vector<CMat> Wall;
  Wall.reserve(static_cast<std::size_t>(I) * K);
  for (const auto& a : final_agents)
    for (const auto& Wb : a.W) Wall.push_back(Wb);
  Rng round_rng = rng.fork(0x726e64);
  out.solution =
      conic::randomize_and_scale(model, Wall, params.rand_trials, round_rng);
  for (int i = 0; i < I; ++i) out.solution.threshold(i) = final_agents[i].eta;
  out.final_avg_objective = avg_history.empty() ? 0.0 : avg_history.back();
  return out;
}

}  // namespace cmbf::sadmm
