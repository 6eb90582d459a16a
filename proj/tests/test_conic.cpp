#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cmbf/conic.hpp"
#include "helpers.hpp"

using namespace cmbf;
using conic::BlockId;
using conic::ConicProblem;
using conic::LinExpr;

TEST_CASE("solve: scalar LP") {
  ConicProblem p;
  auto x = p.add_nonneg();
  p.add_objective(x, 1.0);
  LinExpr e(-1.0);
  e.add(x, 1.0);  // x - 1 >= 0
  p.add_ineq_nonneg(std::move(e));
  auto sol = conic::solve(p);
  REQUIRE(sol.ok());
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.value(p, x) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("solve: LP with equality and free variable") {
  // min 2x + y  s.t.  x + y = 3, x >= 0, y >= 1  -> x=0, y=3, obj 3
  ConicProblem p;
  auto x = p.add_nonneg();
  auto y = p.add_scalar();
  p.add_objective(x, 2.0);
  p.add_objective(y, 1.0);
  LinExpr eq(-3.0);
  eq.add(x, 1.0).add(y, 1.0);
  p.add_eq(std::move(eq));
  LinExpr ge(-1.0);
  ge.add(y, 1.0);
  p.add_ineq_nonneg(std::move(ge));
  auto sol = conic::solve(p);
  REQUIRE(sol.ok());
  CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(sol.value(p, x) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(sol.value(p, y) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("solve: infeasible LP certificate") {
  ConicProblem p;
  auto x = p.add_nonneg();
  p.add_objective(x, 1.0);
  LinExpr e(-1.0);
  e.add(x, -1.0);  // -x - 1 >= 0  -> x <= -1
  p.add_ineq_nonneg(std::move(e));
  auto sol = conic::solve(p);
  CHECK(sol.status == conic::SolveStatus::infeasible);
}

TEST_CASE("solve: unbounded LP certificate") {
  ConicProblem p;
  auto x = p.add_nonneg();
  p.add_objective(x, -1.0);
  auto sol = conic::solve(p);
  CHECK(sol.status == conic::SolveStatus::unbounded);
}

TEST_CASE("solve: SOC with constant tail") {
  // min t  s.t.  t >= ||(3,4)||  -> 5
  ConicProblem p;
  auto t = p.add_scalar();
  p.add_objective(t, 1.0);
  LinExpr head;
  head.add(t, 1.0);
  p.add_soc(std::move(head), {LinExpr(3.0), LinExpr(4.0)});
  auto sol = conic::solve(p);
  REQUIRE(sol.ok());
  CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("solve: SOC with variable tail") {
  // min x + y  s.t.  1 >= ||(x-3, y-4)||  -> 7 - sqrt(2)
  ConicProblem p;
  auto x = p.add_scalar();
  auto y = p.add_scalar();
  p.add_objective(x, 1.0);
  p.add_objective(y, 1.0);
  LinExpr t1(-3.0), t2(-4.0);
  t1.add(x, 1.0);
  t2.add(y, 1.0);
  p.add_soc(LinExpr(1.0), {std::move(t1), std::move(t2)});
  auto sol = conic::solve(p);
  REQUIRE(sol.ok());
  CHECK(sol.objective == doctest::Approx(7.0 - std::sqrt(2.0)).epsilon(1e-7));
}

TEST_CASE("solve: PSD trace toy") {
  // min tr(W)  s.t.  tr(W) >= 1, W PSD 2x2 (complex)  -> 1
  ConicProblem p;
  auto W = p.add_psd_block(2);
  p.add_objective_trace(W, CMat::Identity(2, 2));
  LinExpr e(-1.0);
  e.add_trace(W, CMat::Identity(2, 2));
  p.add_ineq_nonneg(std::move(e));
  auto sol = conic::solve(p);
  REQUIRE(sol.ok());
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
  const CMat Wv = sol.psd_value(p, W);
  Eigen::SelfAdjointEigenSolver<CMat> eig(Wv, Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-7);
}

TEST_CASE("solve: single-user SINR SDP") {
  // min tr(W) s.t. tr(R W) >= gamma sigma^2, R = I2, gamma=8 -> 8
  ConicProblem p;
  auto W = p.add_psd_block(2);
  p.add_objective_trace(W, CMat::Identity(2, 2));
  LinExpr e(-8.0);
  e.add_trace(W, CMat::Identity(2, 2));
  p.add_ineq_nonneg(std::move(e));
  auto sol = conic::solve(p);
  REQUIRE(sol.ok());
  CHECK(sol.objective == doctest::Approx(8.0).epsilon(1e-7));
}

TEST_CASE("solve: Hermitian coefficient SDP aligns with top eigenvector") {
  // min tr(W) s.t. tr(R W) >= 1 with R eigenvalues {1,3} -> 1/3
  CMat R(2, 2);
  R << Complex(2, 0), Complex(0, 1), Complex(0, -1), Complex(2, 0);
  ConicProblem p;
  auto W = p.add_psd_block(2);
  p.add_objective_trace(W, CMat::Identity(2, 2));
  LinExpr e(-1.0);
  e.add_trace(W, R);
  p.add_ineq_nonneg(std::move(e));
  auto sol = conic::solve(p);
  REQUIRE(sol.ok());
  CHECK(sol.objective == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  // the optimal W is rank-one along the top eigenvector of R
  auto ex = conic::extract_rank_one(sol.psd_value(p, W), 1e-5);
  CHECK(ex.ok);
}

TEST_CASE("solve: infeasible PSD toy") {
  // tr(W) <= -1 with W PSD
  ConicProblem p;
  auto W = p.add_psd_block(2);
  p.add_objective_trace(W, CMat::Identity(2, 2));
  LinExpr e(-1.0);
  e.add_trace(W, -CMat::Identity(2, 2));
  p.add_ineq_nonneg(std::move(e));
  auto sol = conic::solve(p);
  CHECK(sol.status == conic::SolveStatus::infeasible);
}

TEST_CASE("solve: quadratic objective epigraph") {
  // min (x-3)^2 + 2  -> 2 at x = 3
  ConicProblem p;
  auto x = p.add_scalar();
  LinExpr term(-3.0);
  term.add(x, 1.0);
  std::vector<LinExpr> terms;
  terms.push_back(std::move(term));
  p.add_quadratic_objective(1.0, std::move(terms));
  ConicProblem q;  // offset via a constrained scalar
  auto sol = conic::solve(p);
  REQUIRE(sol.ok());
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(sol.value(p, x) == doctest::Approx(3.0).epsilon(1e-5));
  (void)q;
}

TEST_CASE("solve: weighted multi-term quadratic plus linear") {
  // min x + 0.5[(x-2)^2 + (x-4)^2]  -> x* = 2 (derivative 1 + (x-2)+(x-4) = 0 => x=2.5)
  ConicProblem p;
  auto x = p.add_scalar();
  p.add_objective(x, 1.0);
  LinExpr t1(-2.0), t2(-4.0);
  t1.add(x, 1.0);
  t2.add(x, 1.0);
  std::vector<LinExpr> terms;
  terms.push_back(std::move(t1));
  terms.push_back(std::move(t2));
  p.add_quadratic_objective(0.5, std::move(terms));
  auto sol = conic::solve(p);
  REQUIRE(sol.ok());
  CHECK(sol.value(p, x) == doctest::Approx(2.5).epsilon(1e-5));
  const double expected = 2.5 + 0.5 * (0.25 + 2.25);
  CHECK(sol.objective == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("solve: duality-gap soundness on a mixed problem") {
  // min tr(W) + y  s.t. tr(RW) + y >= 5, y >= ||(1, tr(W)-2)||, W PSD
  CMat R(2, 2);
  R << Complex(1.5, 0), Complex(0.25, 0.5), Complex(0.25, -0.5), Complex(1, 0);
  ConicProblem p;
  auto W = p.add_psd_block(2);
  auto y = p.add_scalar();
  p.add_objective_trace(W, CMat::Identity(2, 2));
  p.add_objective(y, 1.0);
  LinExpr c1(-5.0);
  c1.add_trace(W, R);
  c1.add(y, 1.0);
  p.add_ineq_nonneg(std::move(c1));
  LinExpr head;
  head.add(y, 1.0);
  LinExpr tail2(-2.0);
  tail2.add_trace(W, CMat::Identity(2, 2));
  p.add_soc(std::move(head), {LinExpr(1.0), std::move(tail2)});
  auto sol = conic::solve(p);
  REQUIRE(sol.ok());
  // recompute residuals from returned primals
  const CMat Wv = sol.psd_value(p, W);
  const double yv = sol.value(p, y);
  const double trW = Wv.real().trace();
  const double c1v = (R * Wv).real().trace() + yv - 5.0;
  CHECK(c1v >= -1e-7);
  CHECK(yv >= std::hypot(1.0, trW - 2.0) - 1e-7);
  Eigen::SelfAdjointEigenSolver<CMat> eig(Wv, Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-7);
  CHECK(sol.gap <= 1e-7);
}

TEST_CASE("dump writes a self-describing problem file") {
  ConicProblem p;
  auto W = p.add_psd_block(2);
  auto x = p.add_nonneg();
  p.add_objective(x, 1.0);
  p.add_objective_trace(W, CMat::Identity(2, 2));
  LinExpr e(-1.0);
  e.add_trace(W, CMat::Identity(2, 2));
  e.add(x, 1.0);
  p.add_ineq_nonneg(std::move(e));
  const auto path = std::filesystem::temp_directory_path() / "cmbf_dump.txt";
  conic::SolveOptions opts;
  opts.dump_path = path.string();
  auto sol = conic::solve(p, opts);
  REQUIRE(sol.ok());
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string first;
  std::getline(in, first);
  CHECK(!first.empty());
  std::filesystem::remove(path);
}

TEST_CASE("extract_rank_one examples") {
  {  // exact rank-one recovery up to phase
    CVec v(3);
    v << Complex(1, 2), Complex(-0.5, 0.25), Complex(0, -1);
    auto ex = conic::extract_rank_one(v * v.adjoint(), 1e-6);
    CHECK(ex.ok);
    CHECK(ex.ratio <= 1e-10);
    CHECK((ex.vec * ex.vec.adjoint() - v * v.adjoint()).cwiseAbs().maxCoeff() <
          1e-10);
    // phase convention: largest-magnitude entry real nonnegative
    int imax = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(ex.vec(i)) > std::abs(ex.vec(imax))) imax = i;
    CHECK(std::abs(ex.vec(imax).imag()) < 1e-12);
    CHECK(ex.vec(imax).real() >= 0.0);
  }
  {  // identity: ratio 1, not rank-one
    auto ex = conic::extract_rank_one(CMat::Identity(2, 2), 1e-6);
    CHECK_FALSE(ex.ok);
    CHECK(ex.ratio == doctest::Approx(1.0).epsilon(1e-12));
  }
  {  // nearly rank-one within tolerance
    CMat W = CMat::Zero(2, 2);
    W(0, 0) = 1.0;
    W(1, 1) = 1e-9;
    auto ex = conic::extract_rank_one(W, 1e-6);
    CHECK(ex.ok);
    CHECK(ex.ratio == doctest::Approx(1e-9).epsilon(1e-6));
  }
  {  // zero matrix
    auto ex = conic::extract_rank_one(CMat::Zero(3, 3), 1e-6);
    CHECK(ex.ok);
    CHECK(ex.ratio == 0.0);
    CHECK(ex.vec.norm() == 0.0);
  }
}

TEST_CASE("randomize_and_scale: rank-one input returned unscaled") {
  auto model = test::uniform_model(1, 1, CMat::Identity(2, 2), 8.0, 1.0);
  CVec v(2);
  v << 2.0, 2.0;  // SINR = 8 exactly
  Rng rng(3);
  auto sol = conic::randomize_and_scale(model, {v * v.adjoint()}, 10, rng);
  CHECK(all_qos_pass(model, sol, 1e-6));
  CHECK(sol.power(0) == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("randomize_and_scale: full-rank input rounds to feasible") {
  auto model = test::uniform_model(1, 1, CMat::Identity(2, 2), 8.0, 1.0);
  const CMat W = 4.0 * CMat::Identity(2, 2);  // tr(RW) = 8, feasible
  Rng rng(17);
  auto sol = conic::randomize_and_scale(model, {W}, 100, rng);
  CHECK(all_qos_pass(model, sol, 1e-6));
  // with R = I any phase draw has unit-scaled SINR exactly 8: scaling ~1
  CHECK(sol.power(0) <= 8.0 * 1.5);
  CHECK_THROWS_AS(conic::randomize_and_scale(model, {W}, 0, rng),
                  conic::SolverError);
}

TEST_CASE("solve: never silent wrong answers on repeated solves") {
  // reentrancy smoke: same problem solved twice gives identical output
  ConicProblem p;
  auto x = p.add_nonneg();
  p.add_objective(x, 1.0);
  LinExpr e(-2.0);
  e.add(x, 1.0);
  p.add_ineq_nonneg(std::move(e));
  auto s1 = conic::solve(p);
  auto s2 = conic::solve(p);
  REQUIRE(s1.ok());
  REQUIRE(s2.ok());
  CHECK(s1.objective == s2.objective);
  CHECK(s1.iterations == s2.iterations);
}
