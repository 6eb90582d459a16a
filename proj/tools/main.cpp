#include <CLI11.hpp>
#include <cstdio>

#include "cmbf/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "cmbf: distributed multicell beamforming under CVaR energy-trading "
      "cost"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool dump_conic = false;
  app.add_option("--config", config_path, "experiment config file");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "run seed (overrides config)")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_flag("--dump-conic", dump_conic,
               "dump assembled conic standard forms next to the outputs");

  auto* gen = app.add_subcommand("gen", "emit scenario + sample database");
  auto* converge =
      app.add_subcommand("converge", "stochastic ADMM vs SAA oracle trace");
  auto* sweep_res = app.add_subcommand("sweep-res", "average cost vs RES mean");
  auto* sweep_theta =
      app.add_subcommand("sweep-theta", "held-out cost CDFs per theta");
  auto* sweep_nt = app.add_subcommand("sweep-nt", "cost vs antenna count");
  auto* sweep_sinr = app.add_subcommand("sweep-sinr", "cost vs SINR target");
  auto* oracle = app.add_subcommand("oracle", "centralized SAA solve only");

  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    cmbf::experiments::ExperimentConfig cfg;
    if (!config_path.empty())
      cfg = cmbf::experiments::load_config(config_path);
    if (!out_dir.empty()) cfg.run.out_dir = out_dir;
    if (seed_set) cfg.run.seed = seed;
    if (dump_conic) cfg.dump_dir = cfg.run.out_dir;
    std::filesystem::create_directories(cfg.run.out_dir);

    if (gen->parsed()) {
      cmbf::experiments::run_gen(cfg);
    } else if (oracle->parsed()) {
      auto res = cmbf::experiments::run_oracle(cfg);
      std::printf("oracle objective %.10g (%d IPM iterations)\n",
                  res.objective, res.iterations);
    } else if (converge->parsed()) {
      auto sum = cmbf::experiments::run_convergence(cfg);
      std::printf(
          "oracle %.10g  final avg %.10g  band entry %d  iters %d  "
          "converged %d\n",
          sum.oracle_objective, sum.final_avg_objective, sum.band_entry_iter,
          sum.iterations, sum.converged ? 1 : 0);
    } else if (sweep_res->parsed()) {
      for (const auto& r : cmbf::experiments::run_res_sweep(cfg))
        std::printf("%-8s mean %-6g avg %.6g max %.6g\n", r.label.c_str(),
                    r.value, r.avg_cost, r.max_cost);
    } else if (sweep_theta->parsed()) {
      for (const auto& r : cmbf::experiments::run_theta_cdf(cfg))
        std::printf("%-8s theta %-4g avg %.6g p99 %.6g max %.6g\n",
                    r.label.c_str(), r.value, r.avg_cost, r.p99_cost,
                    r.max_cost);
    } else if (sweep_nt->parsed()) {
      for (const auto& r : cmbf::experiments::run_nt_sweep(cfg))
        std::printf(
            "nt %-3g cvar avg %.6g / max %.6g   cost avg %.6g / max %.6g\n",
            r.value, r.cvar_avg, r.cvar_max, r.cost_avg, r.cost_max);
    } else if (sweep_sinr->parsed()) {
      for (const auto& r : cmbf::experiments::run_sinr_sweep(cfg))
        std::printf(
            "gamma %-4g cvar avg %.6g / max %.6g   cost avg %.6g / max %.6g\n",
            r.value, r.cvar_avg, r.cvar_max, r.cost_avg, r.cost_max);
    }
    return kExitOk;
  } catch (const cmbf::conic::InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitInfeasible;
  } catch (const cmbf::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const cmbf::ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const cmbf::ModelError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
}
