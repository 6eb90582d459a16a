#pragma once

#include <Eigen/Sparse>
#include <optional>
#include <string>

#include "cmbf/model.hpp"
#include "cmbf/rng.hpp"

namespace cmbf::conic {

struct BlockId {
  int index = -1;
  bool valid() const { return index >= 0; }
};

enum class BlockKind { hermitian_psd, free_scalar, nonneg_scalar };

// Affine expression over declared blocks: scalar terms, trace terms
// against Hermitian PSD blocks, and a constant.
class LinExpr {
 public:
  LinExpr() = default;
  /* implicit */ LinExpr(double constant) : constant_(constant) {}

  LinExpr& add(BlockId scalar, double coeff);
  LinExpr& add_trace(BlockId psd, CMat coeff);  // + tr(coeff * W), coeff Hermitian
  LinExpr& add_constant(double v) {
    constant_ += v;
    return *this;
  }
  double constant() const { return constant_; }

  struct ScalarTerm {
    BlockId block;
    double coeff;
  };
  struct TraceTerm {
    BlockId block;
    CMat coeff;
  };
  const std::vector<ScalarTerm>& scalar_terms() const { return scalar_terms_; }
  const std::vector<TraceTerm>& trace_terms() const { return trace_terms_; }

 private:
  std::vector<ScalarTerm> scalar_terms_;
  std::vector<TraceTerm> trace_terms_;
  double constant_ = 0.0;
};

// Conic program over PSD / nonneg / free blocks with linear equality and
// inequality constraints, affine second-order-cone constraints, and a
// linear objective (convex quadratic terms are lowered to SOC epigraphs
// at build time). Immutable once handed to solve().
class ConicProblem {
 public:
  BlockId add_psd_block(int dim);
  BlockId add_scalar();
  BlockId add_nonneg();

  void add_objective(BlockId scalar, double coeff);
  void add_objective_trace(BlockId psd, CMat coeff);
  // adds weight * sum_i terms[i]^2 to the objective
  void add_quadratic_objective(double weight, std::vector<LinExpr> terms);

  void add_eq(LinExpr expr);          // expr == 0
  void add_ineq_nonneg(LinExpr expr); // expr >= 0
  // head >= || (tail_0, ..., tail_{m-1}) ||_2
  void add_soc(LinExpr head, std::vector<LinExpr> tail);

  int num_psd_blocks() const { return static_cast<int>(psd_dims_.size()); }
  int psd_dim(BlockId id) const;
  BlockKind kind(BlockId id) const { return kinds_[id.index]; }

  // assembled standard form:
  //   min c'x  s.t.  A x = b,  G x + s = h,  s in K
  // K = nonneg^l x SOC(q_1) x ... x PSD(d_1) x ...  (PSD over real
  // symmetric d x d, the 2n x 2n embedding of each Hermitian block)
  struct StandardForm {
    int nx = 0;
    Eigen::SparseMatrix<double> A, G;
    Eigen::VectorXd b, h, c;
    int nonneg = 0;
    std::vector<int> soc_dims;
    std::vector<int> psd_dims;   // embedded (real) dims
    std::vector<int> psd_offsets;  // x offset of each PSD block's params
    std::vector<int> psd_cdims;    // complex dims
  };
  const StandardForm& standard_form() const;

  // plain-text dump of the assembled standard form (documented in README)
  void dump(const std::string& path) const;

  // x slot of a scalar block / first param slot of a PSD block
  int x_offset(BlockId id) const { return offsets_[id.index]; }

 private:
  friend struct ProblemAccess;
  void lower_expr(const LinExpr& e,
                  std::vector<Eigen::Triplet<double>>& out, int row,
                  double sign) const;
  void ensure_assembled() const;

  std::vector<BlockKind> kinds_;
  std::vector<int> offsets_;   // block -> first x slot
  std::vector<int> psd_dims_;  // complex dim per psd block (block order)
  std::vector<int> psd_block_ids_;
  std::vector<int> nonneg_block_ids_;
  int nx_ = 0;

  std::vector<std::pair<int, double>> objective_;  // (x slot, coeff)
  std::vector<LinExpr> eqs_;
  std::vector<LinExpr> ineqs_;
  struct Soc {
    LinExpr head;
    std::vector<LinExpr> tail;
  };
  std::vector<Soc> socs_;

  mutable std::optional<StandardForm> form_;
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure, iteration_limit };

struct SolveOptions {
  double tol = 1e-8;
  int max_iters = 100;
  bool verbose = false;
  std::string dump_path;  // when non-empty, dump the problem before solving
};

struct ConicSolution {
  SolveStatus status = SolveStatus::numerical_failure;
  double objective = 0.0;
  Eigen::VectorXd x;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;

  double value(const ConicProblem& p, BlockId scalar) const;
  CMat psd_value(const ConicProblem& p, BlockId psd) const;
  bool ok() const { return status == SolveStatus::optimal; }
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A solve produced a certificate of primal infeasibility (the modeled
// constraints cannot all hold).
struct InfeasibleError : SolverError {
  using SolverError::SolverError;
};

ConicSolution solve(const ConicProblem& problem, const SolveOptions& opts = {});

// Principal-eigenpair extraction of a PSD matrix. ok iff the second
// eigenvalue ratio is below rel_tol; phase normalized so the largest
// entry of the vector is real nonnegative.
struct RankOneExtraction {
  CVec vec;
  bool ok = false;
  double ratio = 0.0;
};
RankOneExtraction extract_rank_one(const CMat& W, double rel_tol = 1e-6);

// Gaussian-randomization rounding with per-draw uniform rescaling; the
// returned solution always satisfies the QoS constraints or an exception
// is raised.
BeamformingSolution randomize_and_scale(const SystemModel& model,
                                        const std::vector<CMat>& W,
                                        int trials, Rng& rng);

}  // namespace cmbf::conic
