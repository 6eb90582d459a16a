#include <cstdio>
#include <fstream>

#include "cmbf/conic.hpp"
#include "sym_util.hpp"

namespace cmbf::conic {

using detail::svec_index;
using detail::svec_len;

namespace {

// param slots of a Hermitian block of complex dim n (offset o):
//   o + m                 : X_mm (real diagonal)
//   o + n + 2*t           : X_mn = Re W_mn   (pair index t over m < n)
//   o + n + 2*t + 1       : Y_mn = Im W_mn
int pair_index(int m, int n_col, int cdim) {
  // pairs ordered (0,1), (0,2), ..., (0,cdim-1), (1,2), ...
  int t = 0;
  for (int a = 0; a < m; ++a) t += cdim - 1 - a;
  return t + (n_col - m - 1);
}

LinExpr scaled_expr(const LinExpr& e, double f) {
  LinExpr out(f * e.constant());
  for (const auto& t : e.scalar_terms()) out.add(t.block, f * t.coeff);
  for (const auto& t : e.trace_terms()) out.add_trace(t.block, f * t.coeff);
  return out;
}

}  // namespace

LinExpr& LinExpr::add(BlockId scalar, double coeff) {
  scalar_terms_.push_back({scalar, coeff});
  return *this;
}

LinExpr& LinExpr::add_trace(BlockId psd, CMat coeff) {
  trace_terms_.push_back({psd, std::move(coeff)});
  return *this;
}

BlockId ConicProblem::add_psd_block(int dim) {
  if (dim < 1) throw SolverError("add_psd_block: dim must be >= 1");
  if (form_) throw SolverError("problem already assembled");
  BlockId id{static_cast<int>(kinds_.size())};
  kinds_.push_back(BlockKind::hermitian_psd);
  offsets_.push_back(nx_);
  psd_dims_.push_back(dim);
  psd_block_ids_.push_back(id.index);
  nx_ += dim * dim;
  return id;
}

BlockId ConicProblem::add_scalar() {
  if (form_) throw SolverError("problem already assembled");
  BlockId id{static_cast<int>(kinds_.size())};
  kinds_.push_back(BlockKind::free_scalar);
  offsets_.push_back(nx_++);
  return id;
}

BlockId ConicProblem::add_nonneg() {
  if (form_) throw SolverError("problem already assembled");
  BlockId id{static_cast<int>(kinds_.size())};
  kinds_.push_back(BlockKind::nonneg_scalar);
  offsets_.push_back(nx_++);
  nonneg_block_ids_.push_back(id.index);
  return id;
}

int ConicProblem::psd_dim(BlockId id) const {
  if (kinds_.at(id.index) != BlockKind::hermitian_psd)
    throw SolverError("psd_dim: not a PSD block");
  for (std::size_t i = 0; i < psd_block_ids_.size(); ++i)
    if (psd_block_ids_[i] == id.index) return psd_dims_[i];
  throw SolverError("psd_dim: unknown block");
}

void ConicProblem::add_objective(BlockId scalar, double coeff) {
  objective_.emplace_back(offsets_.at(scalar.index), coeff);
}

void ConicProblem::add_objective_trace(BlockId psd, CMat coeff) {
  // lower tr(C W) onto the block's params
  const int o = offsets_.at(psd.index);
  const int n = psd_dim(psd);
  if (coeff.rows() != n || coeff.cols() != n)
    throw SolverError("add_objective_trace: coefficient dimension mismatch");
  for (int m = 0; m < n; ++m)
    objective_.emplace_back(o + m, coeff(m, m).real());
  for (int m = 0; m < n; ++m)
    for (int c = m + 1; c < n; ++c) {
      const int t = pair_index(m, c, n);
      objective_.emplace_back(o + n + 2 * t, 2.0 * coeff(m, c).real());
      objective_.emplace_back(o + n + 2 * t + 1, 2.0 * coeff(m, c).imag());
    }
}

void ConicProblem::add_quadratic_objective(double weight,
                                           std::vector<LinExpr> terms) {
  if (weight < 0.0)
    throw SolverError("add_quadratic_objective: negative weight");
  if (weight == 0.0 || terms.empty()) return;
  BlockId t = add_scalar();
  add_objective(t, weight);
  // t >= sum terms^2  <=>  || (2*terms, 1 - t) || <= 1 + t
  LinExpr head(1.0);
  head.add(t, 1.0);
  std::vector<LinExpr> tail;
  tail.reserve(terms.size() + 1);
  for (auto& e : terms) tail.push_back(scaled_expr(e, 2.0));
  LinExpr last(1.0);
  last.add(t, -1.0);
  tail.push_back(std::move(last));
  add_soc(std::move(head), std::move(tail));
}

void ConicProblem::add_eq(LinExpr expr) {
  if (form_) throw SolverError("problem already assembled");
  eqs_.push_back(std::move(expr));
}

void ConicProblem::add_ineq_nonneg(LinExpr expr) {
  if (form_) throw SolverError("problem already assembled");
  ineqs_.push_back(std::move(expr));
}

void ConicProblem::add_soc(LinExpr head, std::vector<LinExpr> tail) {
  if (form_) throw SolverError("problem already assembled");
  socs_.push_back({std::move(head), std::move(tail)});
}

void ConicProblem::lower_expr(const LinExpr& e,
                              std::vector<Eigen::Triplet<double>>& out, int row,
                              double sign) const {
  for (const auto& t : e.scalar_terms()) {
    if (t.block.index < 0 || t.block.index >= static_cast<int>(kinds_.size()))
      throw SolverError("expression references an undeclared block");
    if (kinds_[t.block.index] == BlockKind::hermitian_psd)
      throw SolverError("scalar term references a PSD block");
    out.emplace_back(row, offsets_[t.block.index], sign * t.coeff);
  }
  for (const auto& t : e.trace_terms()) {
    if (t.block.index < 0 || t.block.index >= static_cast<int>(kinds_.size()) ||
        kinds_[t.block.index] != BlockKind::hermitian_psd)
      throw SolverError("trace term must reference a PSD block");
    const int o = offsets_[t.block.index];
    const int n = psd_dim(t.block);
    const CMat& C = t.coeff;
    if (C.rows() != n || C.cols() != n)
      throw SolverError("trace coefficient dimension mismatch");
    for (int m = 0; m < n; ++m)
      out.emplace_back(row, o + m, sign * C(m, m).real());
    for (int m = 0; m < n; ++m)
      for (int c = m + 1; c < n; ++c) {
        const int p = pair_index(m, c, n);
        out.emplace_back(row, o + n + 2 * p, sign * 2.0 * C(m, c).real());
        out.emplace_back(row, o + n + 2 * p + 1, sign * 2.0 * C(m, c).imag());
      }
  }
}

void ConicProblem::ensure_assembled() const {
  if (form_) return;
  StandardForm f;
  f.nx = nx_;
  f.c = Eigen::VectorXd::Zero(nx_);
  for (const auto& [slot, coeff] : objective_) f.c(slot) += coeff;

  // equalities
  std::vector<Eigen::Triplet<double>> ta;
  f.b = Eigen::VectorXd::Zero(static_cast<int>(eqs_.size()));
  for (std::size_t r = 0; r < eqs_.size(); ++r) {
    lower_expr(eqs_[r], ta, static_cast<int>(r), 1.0);
    f.b(static_cast<int>(r)) = -eqs_[r].constant();
  }
  f.A.resize(static_cast<int>(eqs_.size()), nx_);
  f.A.setFromTriplets(ta.begin(), ta.end());

  // cone rows: nonneg vars, then general inequalities, then SOC, then PSD
  std::vector<Eigen::Triplet<double>> tg;
  std::vector<double> h;
  int row = 0;
  for (int id : nonneg_block_ids_) {
    tg.emplace_back(row, offsets_[id], -1.0);
    h.push_back(0.0);
    ++row;
  }
  for (const auto& e : ineqs_) {
    lower_expr(e, tg, row, -1.0);
    h.push_back(e.constant());
    ++row;
  }
  f.nonneg = row;
  for (const auto& soc : socs_) {
    lower_expr(soc.head, tg, row, -1.0);
    h.push_back(soc.head.constant());
    ++row;
    for (const auto& e : soc.tail) {
      lower_expr(e, tg, row, -1.0);
      h.push_back(e.constant());
      ++row;
    }
    f.soc_dims.push_back(1 + static_cast<int>(soc.tail.size()));
  }
  // PSD blocks: svec of the 2n x 2n real embedding [[X, -Y], [Y, X]]
  const double s2 = std::sqrt(2.0);
  for (std::size_t bi = 0; bi < psd_block_ids_.size(); ++bi) {
    const int id = psd_block_ids_[bi];
    const int n = psd_dims_[bi];
    const int d = 2 * n;
    const int o = offsets_[id];
    f.psd_dims.push_back(d);
    f.psd_offsets.push_back(o);
    f.psd_cdims.push_back(n);
    auto x_slot = [&](int r, int c) -> std::pair<int, double> {
      // returns (slot, coeff) for entry S_rc, r <= c; slot -1 when zero
      if (r < n && c < n) {
        if (r == c) return {o + r, 1.0};
        return {o + n + 2 * pair_index(r, c, n), 1.0};
      }
      if (r < n && c >= n) {
        const int cc = c - n;
        if (r == cc) return {-1, 0.0};
        if (r < cc) return {o + n + 2 * pair_index(r, cc, n) + 1, -1.0};
        return {o + n + 2 * pair_index(cc, r, n) + 1, 1.0};
      }
      const int rr = r - n, cc = c - n;
      if (rr == cc) return {o + rr, 1.0};
      return {o + n + 2 * pair_index(rr, cc, n), 1.0};
    };
    for (int c = 0; c < d; ++c)
      for (int r = 0; r <= c; ++r) {
        auto [slot, coeff] = x_slot(r, c);
        const int srow = row + svec_index(r, c, d);
        if (slot >= 0)
          tg.emplace_back(srow, slot, -(r == c ? 1.0 : s2) * coeff);
      }
    for (int t = 0; t < svec_len(d); ++t) h.push_back(0.0);
    row += svec_len(d);
  }
  f.G.resize(row, nx_);
  f.G.setFromTriplets(tg.begin(), tg.end());
  f.h = Eigen::Map<Eigen::VectorXd>(h.data(), static_cast<int>(h.size()));
  form_ = std::move(f);
}

const ConicProblem::StandardForm& ConicProblem::standard_form() const {
  ensure_assembled();
  return *form_;
}

void ConicProblem::dump(const std::string& path) const {
  const StandardForm& f = standard_form();
  std::ofstream out(path);
  if (!out) throw SolverError("dump: cannot open " + path);
  out << "# conic program, standard form: min c'x  s.t.  A x = b, G x + s = h, "
         "s in K\n";
  out << "# K = nonneg^l x SOC(q_i)... x PSD(d_i)... ; PSD slots are svec "
         "(column-major upper triangle, off-diagonals scaled by sqrt(2))\n";
  out << "nx " << f.nx << "\n";
  out << "nonneg " << f.nonneg << "\n";
  out << "soc";
  for (int q : f.soc_dims) out << " " << q;
  out << "\npsd";
  for (int d : f.psd_dims) out << " " << d;
  out << "\n";
  char buf[160];
  auto dump_vec = [&](const char* name, const Eigen::VectorXd& v) {
    out << name << " " << v.size() << "\n";
    for (int i = 0; i < v.size(); ++i) {
      if (v(i) == 0.0) continue;
      std::snprintf(buf, sizeof(buf), "%d %.17g\n", i, v(i));
      out << buf;
    }
    out << "end\n";
  };
  auto dump_mat = [&](const char* name, const Eigen::SparseMatrix<double>& M) {
    out << name << " " << M.rows() << " " << M.cols() << "\n";
    for (int k = 0; k < M.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(M, k); it; ++it) {
        std::snprintf(buf, sizeof(buf), "%ld %ld %.17g\n",
                      static_cast<long>(it.row()), static_cast<long>(it.col()),
                      it.value());
        out << buf;
      }
    out << "end\n";
  };
  dump_vec("c", f.c);
  dump_mat("A", f.A);
  dump_vec("b", f.b);
  dump_mat("G", f.G);
  dump_vec("h", f.h);
}

double ConicSolution::value(const ConicProblem& p, BlockId scalar) const {
  if (p.kind(scalar) == BlockKind::hermitian_psd)
    throw SolverError("value: block is a matrix");
  return x(p.x_offset(scalar));
}

CMat ConicSolution::psd_value(const ConicProblem& p, BlockId psd) const {
  const int n = p.psd_dim(psd);
  const int o = p.x_offset(psd);
  CMat W(n, n);
  for (int m = 0; m < n; ++m) W(m, m) = x(o + m);
  int t = 0;
  for (int m = 0; m < n; ++m)
    for (int c = m + 1; c < n; ++c, ++t)
      W(m, c) = std::conj(W(c, m) = Complex(x(o + n + 2 * t), -x(o + n + 2 * t + 1)));
  return W;
}

}  // namespace cmbf::conic
