#include <doctest.h>

#include <cmath>

#include "cmbf/central.hpp"
#include "cmbf/cvar.hpp"
#include "helpers.hpp"

using namespace cmbf;
using test::single_sample_db;
using test::uniform_model;

namespace {

// random rank-one covariances R_jik = h h^H, cross links attenuated
SystemModel rank_one_model(int I, int K, int Nt, double gamma, Rng& rng) {
  std::vector<CMat> covs;
  covs.reserve(static_cast<std::size_t>(I) * I * K);
  for (int j = 0; j < I; ++j)
    for (int i = 0; i < I; ++i)
      for (int k = 0; k < K; ++k) {
        CVec h(Nt);
        for (int a = 0; a < Nt; ++a)
          h(a) = Complex(rng.normal(), rng.normal()) / std::sqrt(2.0);
        if (j != i) h *= 0.4;
        covs.push_back(h * h.adjoint());
      }
  return SystemModel(I, K, Nt, std::move(covs),
                     Eigen::ArrayXXd::Constant(I, K, gamma),
                     Eigen::ArrayXXd::Constant(I, K, 1.0));
}

// SAA objective recomputed from the returned powers/thresholds
double recompute_objective(const central::CentralResult& res,
                           const SampleDatabase& db, double theta) {
  double total = 0.0;
  const int I = static_cast<int>(res.solution.power.size());
  for (int i = 0; i < I; ++i) {
    double mean = 0.0;
    for (const auto& s : db.samples)
      mean += tail_cost(res.solution.power(i), res.solution.threshold(i),
                        s.bs[static_cast<std::size_t>(i)], theta);
    total += mean / static_cast<double>(db.size());
  }
  return total;
}

}  // namespace

TEST_CASE("saa: single user, identity covariance, unit price") {
  // SINR = tr(W)/sigma^2, so P* = gamma * sigma^2 = 8 and the theta=0
  // objective is the plain cost a * (P - e) = 8.
  const auto model = uniform_model(1, 1, CMat::Identity(2, 2), 8.0, 1.0);
  const auto db = single_sample_db(1, 1.0, 1.0, 0.0);
  const auto res = central::solve_saa(model, db, 0.0);
  CHECK(res.objective == doctest::Approx(8.0).epsilon(1e-6));
  CHECK(res.solution.power(0) == doctest::Approx(8.0).epsilon(1e-6));
  CHECK(all_qos_pass(model, res.solution, 1e-6));
}

TEST_CASE("saa: single antenna reduces to scalar power control") {
  // Nt = 1: tr(R W) = r P with r = 2.5, so P* = gamma sigma^2 / r.
  CMat R(1, 1);
  R(0, 0) = 2.5;
  const auto model = uniform_model(1, 1, R, 4.0, 1.0);
  const auto db = single_sample_db(1, 2.0, 1.0, 0.0);
  const auto res = central::solve_saa(model, db, 0.0);
  const double pstar = 4.0 / 2.5;
  CHECK(res.solution.power(0) == doctest::Approx(pstar).epsilon(1e-6));
  CHECK(res.objective == doctest::Approx(2.0 * pstar).epsilon(1e-6));
}

TEST_CASE("saa: zero harvest and unit prices minimize total power") {
  Rng rng(11);
  const auto model = rank_one_model(2, 2, 3, 2.0, rng);
  const auto db = single_sample_db(2, 1.0, 1.0, 0.0);
  const auto res = central::solve_saa(model, db, 0.0);
  const auto base = central::solve_no_res_baseline(model, db);
  CHECK(res.objective == doctest::Approx(base.total_power).epsilon(1e-5));
  CHECK(res.solution.power.sum() ==
        doctest::Approx(base.total_power).epsilon(1e-5));
}

TEST_CASE("saa: abundant harvest sells the whole surplus") {
  // e far above any sensible transmit power: every sample is a sale, the
  // cost is sell * (P - e), still increasing in P, so powers stay at the
  // minimum and the objective is sum_i b (P_i - e).
  Rng rng(12);
  const auto model = rank_one_model(2, 1, 2, 3.0, rng);
  const double e = 1000.0;
  const auto db = single_sample_db(2, 1.0, 0.5, e);
  const auto res = central::solve_saa(model, db, 0.0);
  const auto base = central::solve_no_res_baseline(model, db);
  const double expected = 0.5 * (base.total_power - 2.0 * e);
  CHECK(res.objective == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("saa: near-zero SINR target drives powers to zero") {
  const auto model = uniform_model(1, 1, CMat::Identity(2, 2), 1e-6, 1.0);
  const auto db = single_sample_db(1, 1.0, 1.0, 0.0);
  const auto res = central::solve_saa(model, db, 0.0);
  CHECK(res.solution.power(0) <= 2e-6);
  CHECK(res.objective <= 2e-6);
}

TEST_CASE("saa: infeasible targets raise InfeasibleError") {
  // identical covariances on every link make gamma > 1 impossible for two
  // mutually interfering users
  const auto model = uniform_model(2, 1, CMat::Identity(2, 2), 2.0, 1.0);
  const auto db = single_sample_db(2, 1.0, 1.0, 0.0);
  CHECK_THROWS_AS((void)central::solve_saa(model, db, 0.0),
                  central::InfeasibleError);
}

TEST_CASE("saa: objective matches the tail-cost average") {
  Rng rng(21);
  const auto model = rank_one_model(2, 2, 3, 4.0, rng);
  ScenarioConfig cfg;
  cfg.num_cells = 2;
  const auto db = sample_states(cfg, rng, 64);
  for (const double theta : {0.0, 0.5, 0.9}) {
    CAPTURE(theta);
    const auto res = central::solve_saa(model, db, theta);
    CHECK(recompute_objective(res, db, theta) ==
          doctest::Approx(res.objective).epsilon(1e-6));
    CHECK(all_qos_pass(model, res.solution, 1e-6));
  }
}

TEST_CASE("saa: harvest lowers the optimal objective") {
  Rng rng(31);
  const auto model = rank_one_model(2, 1, 2, 4.0, rng);
  const auto dry = single_sample_db(2, 1.5, 1.0, 0.0);
  const auto wet = single_sample_db(2, 1.5, 1.0, 5.0);
  const double obj_dry = central::solve_saa(model, dry, 0.5).objective;
  const double obj_wet = central::solve_saa(model, wet, 0.5).objective;
  CHECK(obj_wet < obj_dry);
}

TEST_CASE("socp fast path agrees with the lifted SDP") {
  Rng rng(41);
  ScenarioConfig cfg;
  cfg.num_cells = 2;
  cfg.users_per_cell = 2;
  for (const std::uint64_t seed : {7ULL, 8ULL, 9ULL}) {
    CAPTURE(seed);
    Rng mr(seed);
    const auto model = rank_one_model(2, 2, 3, 3.0, mr);
    const auto db = sample_states(cfg, mr, 16);
    const auto sdp = central::solve_saa(model, db, 0.9);
    const auto socp = central::solve_socp_fastpath(model, db, 0.9);
    CHECK(socp.objective ==
          doctest::Approx(sdp.objective).epsilon(1e-5));
    CHECK(socp.solution.has_vectors());
    CHECK(all_qos_pass(model, socp.solution, 1e-6));
  }
}

TEST_CASE("socp fast path rejects full-rank covariances") {
  const auto model = uniform_model(1, 1, CMat::Identity(2, 2), 2.0, 1.0);
  const auto db = single_sample_db(1, 1.0, 1.0, 0.0);
  CHECK_THROWS_AS((void)central::solve_socp_fastpath(model, db, 0.0),
                  ModelError);
}

TEST_CASE("no-RES baseline prices the fixed powers at the buy rate") {
  Rng rng(51);
  const auto model = rank_one_model(2, 1, 2, 3.0, rng);
  ScenarioConfig cfg;
  cfg.num_cells = 2;
  const auto db = sample_states(cfg, rng, 32);
  const auto base = central::solve_no_res_baseline(model, db);
  REQUIRE(base.cost_samples.size() == db.size());
  CHECK(base.total_power ==
        doctest::Approx(base.solution.power.sum()).epsilon(1e-12));
  for (std::size_t s = 0; s < db.size(); ++s) {
    double expect = 0.0;
    for (int i = 0; i < 2; ++i)
      expect += db.samples[s].bs[static_cast<std::size_t>(i)].buy *
                base.solution.power(i);
    CHECK(base.cost_samples[s] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("sample cap truncates the archive deterministically") {
  Rng rng(61);
  const auto model = rank_one_model(2, 1, 2, 3.0, rng);
  ScenarioConfig cfg;
  cfg.num_cells = 2;
  auto db = sample_states(cfg, rng, 40);
  central::CentralOptions opts;
  opts.sample_cap = 24;
  auto head = db;
  head.samples.resize(24);
  const auto capped = central::solve_saa(model, db, 0.5, opts);
  const auto direct = central::solve_saa(model, head, 0.5);
  CHECK(capped.objective == doctest::Approx(direct.objective).epsilon(1e-9));
}
