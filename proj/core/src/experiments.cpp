#include "cmbf/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cmbf/cvar.hpp"

namespace cmbf::experiments {

namespace {

constexpr std::uint64_t kGold = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix_seed(std::uint64_t base, int tag, int index, int which) {
  return base ^ (kGold * (static_cast<std::uint64_t>(tag) * 4096 +
                          static_cast<std::uint64_t>(index) * 4 + which + 1));
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, int line) {
  std::size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + v + "'");
  }
  if (pos != v.size())
    throw ParseError("line " + std::to_string(line) + ": bad number '" + v + "'");
  return d;
}

int parse_int(const std::string& v, int line) {
  const double d = parse_double(v, line);
  const int i = static_cast<int>(d);
  if (d != i)
    throw ParseError("line " + std::to_string(line) + ": expected integer '" +
                     v + "'");
  return i;
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("line " + std::to_string(line) + ": expected bool '" + v +
                   "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& v, int line) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(parse_double(s, line));
  return out;
}

std::vector<int> parse_int_list(const std::string& v, int line) {
  std::vector<int> out;
  for (const auto& s : split_list(v)) out.push_back(parse_int(s, line));
  return out;
}

struct CsvWriter {
  std::FILE* f = nullptr;
  explicit CsvWriter(const std::filesystem::path& path) {
    f = std::fopen(path.string().c_str(), "w");
    if (!f) throw ParseError("cannot open output file: " + path.string());
  }
  ~CsvWriter() {
    if (f) std::fclose(f);
  }
  void line(const std::string& s) { std::fprintf(f, "%s\n", s.c_str()); }
  void num_row(std::initializer_list<double> vals) {
    bool first = true;
    for (double v : vals) {
      std::fprintf(f, first ? "%.17g" : ",%.17g", v);
      first = false;
    }
    std::fprintf(f, "\n");
  }
};

void write_costs(const std::filesystem::path& path,
                 const std::vector<double>& costs) {
  CsvWriter w(path);
  w.line("cost");
  for (double c : costs) std::fprintf(w.f, "%.17g\n", c);
}

std::filesystem::path out_path(const ExperimentConfig& cfg,
                               const std::string& name) {
  std::filesystem::create_directories(cfg.run.out_dir);
  return std::filesystem::path(cfg.run.out_dir) / name;
}

// total grid cost of a fixed power vector on each archive sample
std::vector<double> eval_costs(const Eigen::VectorXd& power,
                               const SampleDatabase& db) {
  std::vector<double> out;
  out.reserve(db.size());
  for (const auto& s : db.samples) {
    double c = 0.0;
    for (int i = 0; i < db.num_bs; ++i) c += transaction_cost(power(i), s.bs[i]);
    out.push_back(c);
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

SweepRow make_row(std::string label, double value,
                  const std::vector<double>& costs) {
  SweepRow r;
  r.label = std::move(label);
  r.value = value;
  r.avg_cost = mean(costs);
  r.max_cost = *std::max_element(costs.begin(), costs.end());
  r.p99_cost = empirical_var(costs, 0.99);
  return r;
}

struct Trained {
  Eigen::VectorXd power;
  double objective = 0.0;
};

Trained train(const ExperimentConfig& cfg, const SystemModel& model,
              const SampleDatabase& db, double theta, std::uint64_t seed,
              const std::string& dump_name) {
  Trained out;
  if (cfg.algorithm.trainer == Trainer::oracle) {
    auto copts = cfg.central_options();
    if (!cfg.dump_dir.empty())
      copts.solve.dump_path =
          (std::filesystem::path(cfg.dump_dir) / (dump_name + ".txt")).string();
    auto res = central::solve_saa(model, db, theta, copts);
    out.power = res.solution.power;
    out.objective = res.objective;
  } else {
    auto params = cfg.sadmm_params();
    params.theta = theta;
    Rng rng(seed);
    auto res = sadmm::run(model, db, params, rng);
    out.power = res.solution.power;
    out.objective = res.final_avg_objective;
  }
  return out;
}

}  // namespace

sadmm::SadmmParams ExperimentConfig::sadmm_params() const {
  sadmm::SadmmParams p;
  p.theta = algorithm.theta;
  p.rho = algorithm.rho;
  p.zeta_mode = algorithm.zeta_mode;
  p.zeta0 = algorithm.zeta;
  p.max_iters = algorithm.max_iters;
  p.residual_stop = algorithm.residual_stop;
  p.avg_change_stop = algorithm.avg_change_stop;
  p.stop_window = algorithm.stop_window;
  p.rand_trials = algorithm.trials;
  p.solve.tol = algorithm.solver_tol;
  return p;
}

central::CentralOptions ExperimentConfig::central_options() const {
  central::CentralOptions o;
  o.sample_cap = algorithm.oracle_samples;
  o.solve.tol = algorithm.solver_tol;
  return o;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  ExperimentConfig cfg;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ParseError("line " + std::to_string(line) + ": bad section header");
      section = s.substr(1, s.size() - 2);
      if (section != "scenario" && section != "algorithm" && section != "run")
        throw ConfigError("line " + std::to_string(line) +
                          ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(line) + ": expected key=value");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    auto unknown = [&]() -> ConfigError {
      return ConfigError("line " + std::to_string(line) + ": unknown key '" +
                         key + "' in section [" + section + "]");
    };
    if (section == "scenario") {
      auto& sc = cfg.scenario;
      if (key == "cells") sc.num_cells = parse_int(val, line);
      else if (key == "users") sc.users_per_cell = parse_int(val, line);
      else if (key == "antennas") sc.num_antennas = parse_int(val, line);
      else if (key == "correlation") sc.correlation = parse_double(val, line);
      else if (key == "cross_gain") sc.cross_gain = parse_double(val, line);
      else if (key == "sinr_target") sc.sinr_target = parse_double(val, line);
      else if (key == "noise_power") sc.noise_power = parse_double(val, line);
      else if (key == "price_mean") sc.price_mean = parse_double(val, line);
      else if (key == "price_width") sc.price_width = parse_double(val, line);
      else if (key == "sell_ratio") sc.sell_ratio = parse_double(val, line);
      else if (key == "shared_prices") sc.shared_prices = parse_bool(val, line);
      else if (key == "res_family") {
        if (val == "weibull") sc.res_family = ResFamily::weibull;
        else if (val == "exponential") sc.res_family = ResFamily::exponential;
        else if (val == "constant") sc.res_family = ResFamily::constant;
        else throw ConfigError("line " + std::to_string(line) +
                               ": unknown res_family '" + val + "'");
      }
      else if (key == "res_mean") sc.res_mean = parse_double(val, line);
      else if (key == "res_shape") sc.res_shape = parse_double(val, line);
      else if (key == "res_constant") sc.res_constant = parse_double(val, line);
      else if (key == "samples") sc.sample_count = parse_int(val, line);
      else if (key == "seed")
        sc.seed = static_cast<std::uint64_t>(std::stoull(val));
      else throw unknown();
    } else if (section == "algorithm") {
      auto& al = cfg.algorithm;
      if (key == "theta") al.theta = parse_double(val, line);
      else if (key == "rho") al.rho = parse_double(val, line);
      else if (key == "zeta_mode") {
        if (val == "constant") al.zeta_mode = sadmm::ZetaMode::constant;
        else if (val == "sqrt_decay") al.zeta_mode = sadmm::ZetaMode::sqrt_decay;
        else throw ConfigError("line " + std::to_string(line) +
                               ": unknown zeta_mode '" + val + "'");
      }
      else if (key == "zeta") al.zeta = parse_double(val, line);
      else if (key == "max_iters") al.max_iters = parse_int(val, line);
      else if (key == "residual_stop") al.residual_stop = parse_double(val, line);
      else if (key == "avg_change_stop")
        al.avg_change_stop = parse_double(val, line);
      else if (key == "stop_window") al.stop_window = parse_int(val, line);
      else if (key == "oracle_samples") al.oracle_samples = parse_int(val, line);
      else if (key == "trials") al.trials = parse_int(val, line);
      else if (key == "solver_tol") al.solver_tol = parse_double(val, line);
      else if (key == "trainer") {
        if (val == "oracle") al.trainer = Trainer::oracle;
        else if (val == "admm") al.trainer = Trainer::admm;
        else throw ConfigError("line " + std::to_string(line) +
                               ": unknown trainer '" + val + "'");
      }
      else throw unknown();
    } else if (section == "run") {
      auto& r = cfg.run;
      if (key == "seed") r.seed = static_cast<std::uint64_t>(std::stoull(val));
      else if (key == "out_dir") r.out_dir = val;
      else if (key == "eval_samples") r.eval_samples = parse_int(val, line);
      else if (key == "res_means") r.res_means = parse_double_list(val, line);
      else if (key == "thetas") r.thetas = parse_double_list(val, line);
      else if (key == "nt_values") r.nt_values = parse_int_list(val, line);
      else if (key == "sinr_values") r.sinr_values = parse_double_list(val, line);
      else if (key == "experiments") r.experiments = split_list(val);
      else throw unknown();
    } else {
      throw ConfigError("line " + std::to_string(line) +
                        ": key outside any section");
    }
  }
  cfg.scenario.validate();
  if (cfg.algorithm.theta < 0.0 || cfg.algorithm.theta >= 1.0)
    throw ConfigError("algorithm.theta must lie in [0, 1)");
  if (cfg.run.eval_samples < 1)
    throw ConfigError("run.eval_samples must be >= 1");
  for (const auto& name : cfg.run.experiments)
    if (name != "convergence" && name != "res-sweep" && name != "theta-cdf" &&
        name != "nt-sweep" && name != "sinr-sweep")
      throw ConfigError("unknown experiment name '" + name + "'");
  return cfg;
}

void run_gen(const ExperimentConfig& cfg) {
  Rng chan_rng(cfg.scenario.seed);
  SystemModel model = make_channels(cfg.scenario, chan_rng);
  Rng db_rng(mix_seed(cfg.run.seed, 0, 0, 1));
  SampleDatabase db =
      sample_states(cfg.scenario, db_rng, cfg.scenario.sample_count);
  save_database(db, out_path(cfg, "database.csv"));

  CsvWriter w(out_path(cfg, "model.txt"));
  std::fprintf(w.f, "cells %d\nusers %d\nantennas %d\n", model.num_cells(),
               model.users_per_cell(), model.num_antennas());
  for (int j = 0; j < model.num_cells(); ++j)
    for (int i = 0; i < model.num_cells(); ++i)
      for (int k = 0; k < model.users_per_cell(); ++k) {
        std::fprintf(w.f, "cov %d %d %d\n", j, i, k);
        const CMat& R = model.cov(j, i, k);
        for (int r = 0; r < R.rows(); ++r) {
          for (int c = 0; c < R.cols(); ++c)
            std::fprintf(w.f, "%s(%.17g,%.17g)", c ? " " : "", R(r, c).real(),
                         R(r, c).imag());
          std::fprintf(w.f, "\n");
        }
      }
}

central::CentralResult run_oracle(const ExperimentConfig& cfg) {
  Rng chan_rng(cfg.scenario.seed);
  SystemModel model = make_channels(cfg.scenario, chan_rng);
  Rng db_rng(mix_seed(cfg.run.seed, 0, 0, 1));
  SampleDatabase db =
      sample_states(cfg.scenario, db_rng, cfg.scenario.sample_count);
  auto copts = cfg.central_options();
  if (!cfg.dump_dir.empty())
    copts.solve.dump_path =
        (std::filesystem::path(cfg.dump_dir) / "oracle.txt").string();
  auto res = central::solve_saa(model, db, cfg.algorithm.theta, copts);

  CsvWriter sum(out_path(cfg, "oracle_summary.csv"));
  sum.line("objective,iterations");
  std::fprintf(sum.f, "%.17g,%d\n", res.objective, res.iterations);
  CsvWriter per(out_path(cfg, "oracle.csv"));
  per.line("bs,power,eta");
  for (int i = 0; i < model.num_cells(); ++i)
    std::fprintf(per.f, "%d,%.17g,%.17g\n", i, res.solution.power(i),
                 res.solution.threshold(i));
  return res;
}

ConvergenceSummary run_convergence(const ExperimentConfig& cfg) {
  Rng chan_rng(cfg.scenario.seed);
  SystemModel model = make_channels(cfg.scenario, chan_rng);
  Rng db_rng(mix_seed(cfg.run.seed, 0, 0, 1));
  SampleDatabase db =
      sample_states(cfg.scenario, db_rng, cfg.scenario.sample_count);

  auto copts = cfg.central_options();
  if (!cfg.dump_dir.empty())
    copts.solve.dump_path =
        (std::filesystem::path(cfg.dump_dir) / "converge_oracle.txt").string();
  auto oracle = central::solve_saa(model, db, cfg.algorithm.theta, copts);

  auto params = cfg.sadmm_params();
  Rng admm_rng(mix_seed(cfg.run.seed, 1, 0, 1));
  auto res = sadmm::run(model, db, params, admm_rng);
  res.trace.save_csv(out_path(cfg, "convergence_trace.csv"));

  ConvergenceSummary sum;
  sum.oracle_objective = oracle.objective;
  sum.final_avg_objective = res.final_avg_objective;
  sum.iterations = res.iterations;
  sum.converged = res.converged;
  // first iteration from which the running average never leaves the band
  const double ref = std::max(std::abs(oracle.objective), 1e-12);
  int entry = -1;
  for (int idx = static_cast<int>(res.trace.rows.size()) - 1; idx >= 0; --idx) {
    const auto& row = res.trace.rows[idx];
    if (std::abs(row.avg_objective - oracle.objective) / ref > 0.1) break;
    entry = row.iter;
  }
  sum.band_entry_iter = entry;

  CsvWriter w(out_path(cfg, "convergence_summary.csv"));
  w.line(
      "oracle_objective,final_avg_objective,band_entry_iter,iterations,"
      "converged");
  std::fprintf(w.f, "%.17g,%.17g,%d,%d,%d\n", sum.oracle_objective,
               sum.final_avg_objective, sum.band_entry_iter, sum.iterations,
               sum.converged ? 1 : 0);
  return sum;
}

std::vector<SweepRow> run_res_sweep(const ExperimentConfig& cfg) {
  if (cfg.run.res_means.empty())
    throw ConfigError("res sweep: empty res_means list");
  for (double m : cfg.run.res_means)
    if (m < 0.0) throw ConfigError("res sweep: negative RES mean");

  Rng chan_rng(cfg.scenario.seed);
  SystemModel model = make_channels(cfg.scenario, chan_rng);

  std::vector<SweepRow> rows;
  // No-RES baseline: sum-power solve, evaluation prices drawn at the
  // first sweep point's settings with harvested energy forced to zero
  {
    ScenarioConfig sc = cfg.scenario;
    sc.res_family = ResFamily::constant;
    sc.res_constant = 0.0;
    Rng eval_rng(mix_seed(cfg.run.seed, 2, 0, 2));
    SampleDatabase eval = sample_states(sc, eval_rng, cfg.run.eval_samples);
    auto base = central::solve_no_res_baseline(model, eval,
                                               cfg.central_options());
    write_costs(out_path(cfg, "costs_res_no_res.csv"), base.cost_samples);
    rows.push_back(make_row("no_res", 0.0, base.cost_samples));
  }
  for (std::size_t p = 0; p < cfg.run.res_means.size(); ++p) {
    ScenarioConfig sc = cfg.scenario;
    sc.res_mean = cfg.run.res_means[p];
    if (sc.res_mean == 0.0) {
      sc.res_family = ResFamily::constant;
      sc.res_constant = 0.0;
    }
    const int tag = 2;
    Rng train_rng(mix_seed(cfg.run.seed, tag, static_cast<int>(p) + 1, 1));
    SampleDatabase train_db = sample_states(sc, train_rng, sc.sample_count);
    Rng eval_rng(mix_seed(cfg.run.seed, tag, static_cast<int>(p) + 1, 2));
    SampleDatabase eval = sample_states(sc, eval_rng, cfg.run.eval_samples);
    auto trained =
        train(cfg, model, train_db, cfg.algorithm.theta,
              mix_seed(cfg.run.seed, tag, static_cast<int>(p) + 1, 3),
              "res_" + std::to_string(p));
    auto costs = eval_costs(trained.power, eval);
    write_costs(out_path(cfg, "costs_res_" + std::to_string(p) + ".csv"),
                costs);
    rows.push_back(make_row("res_mean", sc.res_mean, costs));
  }

  CsvWriter w(out_path(cfg, "res_sweep.csv"));
  w.line("label,res_mean,avg_cost,p99_cost,max_cost,saving_vs_no_res");
  const double no_res_avg = rows.front().avg_cost;
  for (const auto& r : rows)
    std::fprintf(w.f, "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.label.c_str(),
                 r.value, r.avg_cost, r.p99_cost, r.max_cost,
                 (no_res_avg - r.avg_cost) / no_res_avg);
  return rows;
}

std::vector<SweepRow> run_theta_cdf(const ExperimentConfig& cfg) {
  if (cfg.run.thetas.empty()) throw ConfigError("theta sweep: empty list");
  for (double t : cfg.run.thetas)
    if (t < 0.0 || t >= 1.0)
      throw ConfigError("theta sweep: theta must lie in [0, 1)");

  Rng chan_rng(cfg.scenario.seed);
  SystemModel model = make_channels(cfg.scenario, chan_rng);
  const int tag = 3;
  // one training archive and one held-out set shared across thetas
  Rng train_rng(mix_seed(cfg.run.seed, tag, 0, 1));
  SampleDatabase train_db =
      sample_states(cfg.scenario, train_rng, cfg.scenario.sample_count);
  Rng eval_rng(mix_seed(cfg.run.seed, tag, 0, 2));
  SampleDatabase eval =
      sample_states(cfg.scenario, eval_rng, cfg.run.eval_samples);

  std::vector<SweepRow> rows;
  for (std::size_t p = 0; p < cfg.run.thetas.size(); ++p) {
    const double theta = cfg.run.thetas[p];
    auto trained = train(cfg, model, train_db, theta,
                         mix_seed(cfg.run.seed, tag, static_cast<int>(p), 3),
                         "theta_" + std::to_string(p));
    auto costs = eval_costs(trained.power, eval);
    write_costs(out_path(cfg, "costs_theta_" + std::to_string(p) + ".csv"),
                costs);
    auto row = make_row(theta == 0.0 ? "min-cost" : "min-cvar", theta, costs);
    rows.push_back(std::move(row));
  }

  CsvWriter w(out_path(cfg, "theta_table.csv"));
  w.line("label,theta,avg_cost,p99_cost,max_cost");
  for (const auto& r : rows)
    std::fprintf(w.f, "%s,%.17g,%.17g,%.17g,%.17g\n", r.label.c_str(), r.value,
                 r.avg_cost, r.p99_cost, r.max_cost);
  return rows;
}

namespace {

std::vector<TwoSchemeRow> run_two_scheme_sweep(
    const ExperimentConfig& cfg, const std::vector<double>& values,
    bool sweep_nt, const std::string& stem, const std::string& value_name) {
  if (values.empty()) throw ConfigError(stem + ": empty value list");
  std::vector<TwoSchemeRow> rows;
  const int tag = sweep_nt ? 4 : 5;
  for (std::size_t p = 0; p < values.size(); ++p) {
    ScenarioConfig sc = cfg.scenario;
    if (sweep_nt) {
      if (values[p] < 1.0) throw ConfigError(stem + ": antennas must be >= 1");
      sc.num_antennas = static_cast<int>(values[p]);
    } else {
      if (values[p] <= 0.0) throw ConfigError(stem + ": gamma must be > 0");
      sc.sinr_target = values[p];
    }
    Rng chan_rng(sc.seed);
    SystemModel model = make_channels(sc, chan_rng);
    Rng train_rng(mix_seed(cfg.run.seed, tag, static_cast<int>(p), 1));
    SampleDatabase train_db = sample_states(sc, train_rng, sc.sample_count);
    Rng eval_rng(mix_seed(cfg.run.seed, tag, static_cast<int>(p), 2));
    SampleDatabase eval = sample_states(sc, eval_rng, cfg.run.eval_samples);

    TwoSchemeRow row;
    row.value = values[p];
    auto cvar = train(cfg, model, train_db, cfg.algorithm.theta,
                      mix_seed(cfg.run.seed, tag, static_cast<int>(p), 3),
                      stem + "_cvar_" + std::to_string(p));
    auto cvar_costs = eval_costs(cvar.power, eval);
    write_costs(
        out_path(cfg, "costs_" + stem + "_" + std::to_string(p) + "_cvar.csv"),
        cvar_costs);
    row.cvar_avg = mean(cvar_costs);
    row.cvar_max = *std::max_element(cvar_costs.begin(), cvar_costs.end());
    auto cost = train(cfg, model, train_db, 0.0,
                      mix_seed(cfg.run.seed, tag, static_cast<int>(p), 4),
                      stem + "_cost_" + std::to_string(p));
    auto cost_costs = eval_costs(cost.power, eval);
    write_costs(
        out_path(cfg, "costs_" + stem + "_" + std::to_string(p) + "_cost.csv"),
        cost_costs);
    row.cost_avg = mean(cost_costs);
    row.cost_max = *std::max_element(cost_costs.begin(), cost_costs.end());
    rows.push_back(row);
  }

  CsvWriter w(out_path(cfg, stem + "_sweep.csv"));
  w.line(value_name + ",avg_cvar,max_cvar,avg_cost,max_cost");
  for (const auto& r : rows)
    std::fprintf(w.f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.value, r.cvar_avg,
                 r.cvar_max, r.cost_avg, r.cost_max);
  return rows;
}

}  // namespace

std::vector<TwoSchemeRow> run_nt_sweep(const ExperimentConfig& cfg) {
  std::vector<double> values(cfg.run.nt_values.begin(),
                             cfg.run.nt_values.end());
  return run_two_scheme_sweep(cfg, values, true, "nt", "nt");
}

std::vector<TwoSchemeRow> run_sinr_sweep(const ExperimentConfig& cfg) {
  return run_two_scheme_sweep(cfg, cfg.run.sinr_values, false, "sinr", "gamma");
}

}  // namespace cmbf::experiments
