#include "cmbf/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cmbf {

void ScenarioConfig::validate() const {
  if (num_cells < 1 || users_per_cell < 1 || num_antennas < 1)
    throw ConfigError("scenario: dimensions must be positive");
  if (correlation < 0.0 || correlation >= 1.0)
    throw ConfigError("scenario: correlation must lie in [0, 1)");
  if (cross_gain < 0.0) throw ConfigError("scenario: negative cross gain");
  if (sinr_target <= 0.0) throw ConfigError("scenario: SINR target must be > 0");
  if (noise_power <= 0.0) throw ConfigError("scenario: noise power must be > 0");
  if (sell_ratio < 0.0 || sell_ratio > 1.0)
    throw ConfigError("scenario: sell ratio must lie in [0, 1]");
  if (price_mean - price_width / 2.0 < 0.0)
    throw ConfigError("scenario: price support dips below zero");
  if (res_mean < 0.0 || res_shape <= 0.0 || res_constant < 0.0)
    throw ConfigError("scenario: invalid RES distribution parameters");
  if (sample_count < 1) throw ConfigError("scenario: sample count must be >= 1");
}

SystemModel make_channels(const ScenarioConfig& cfg, Rng& rng) {
  cfg.validate();
  const int I = cfg.num_cells;
  const int K = cfg.users_per_cell;
  const int Nt = cfg.num_antennas;
  std::vector<CMat> covs;
  covs.reserve(static_cast<std::size_t>(I) * I * K);
  for (int j = 0; j < I; ++j) {
    for (int i = 0; i < I; ++i) {
      for (int k = 0; k < K; ++k) {
        const double gain = (j == i) ? 1.0 : cfg.cross_gain;
        const double beta = rng.uniform(0.0, 2.0 * M_PI);
        CMat R(Nt, Nt);
        for (int m = 0; m < Nt; ++m) {
          for (int n = 0; n < Nt; ++n) {
            const double mag =
                gain * std::pow(cfg.correlation, std::abs(m - n));
            R(m, n) = mag * std::polar(1.0, beta * (m - n));
          }
        }
        covs.push_back(std::move(R));
      }
    }
  }
  Eigen::ArrayXXd gamma = Eigen::ArrayXXd::Constant(I, K, cfg.sinr_target);
  Eigen::ArrayXXd sigma2 = Eigen::ArrayXXd::Constant(I, K, cfg.noise_power);
  return SystemModel(I, K, Nt, std::move(covs), std::move(gamma),
                     std::move(sigma2));
}

namespace {

double draw_res(const ScenarioConfig& cfg, Rng& rng) {
  switch (cfg.res_family) {
    case ResFamily::weibull: {
      // scale solved from the requested mean: mean = scale * Gamma(1 + 1/k)
      const double scale =
          cfg.res_mean / std::tgamma(1.0 + 1.0 / cfg.res_shape);
      return rng.weibull(cfg.res_shape, scale);
    }
    case ResFamily::exponential:
      return rng.exponential(cfg.res_mean);
    case ResFamily::constant:
      return cfg.res_constant;
  }
  throw ConfigError("scenario: unknown RES family");
}

}  // namespace

SampleDatabase sample_states(const ScenarioConfig& cfg, Rng& rng, int n) {
  cfg.validate();
  if (n < 1) throw ConfigError("sample_states: sample count must be >= 1");
  SampleDatabase db;
  db.num_bs = cfg.num_cells;
  db.samples.reserve(static_cast<std::size_t>(n));
  const double lo = cfg.price_mean - cfg.price_width / 2.0;
  const double hi = cfg.price_mean + cfg.price_width / 2.0;
  for (int s = 0; s < n; ++s) {
    RandomState state;
    state.bs.resize(cfg.num_cells);
    double shared_a = rng.uniform(lo, hi);
    for (int i = 0; i < cfg.num_cells; ++i) {
      const double a = cfg.shared_prices ? shared_a : rng.uniform(lo, hi);
      state.bs[i].buy = a;
      state.bs[i].sell = cfg.sell_ratio * a;
      state.bs[i].harvested = draw_res(cfg, rng);
      db.max_buy_price = std::max(db.max_buy_price, a);
    }
    db.samples.push_back(std::move(state));
  }
  return db;
}

void save_database(const SampleDatabase& db, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("save_database: cannot open " + path.string());
  out << "sample_index,bs_index,a,b,e\n";
  char buf[128];
  for (std::size_t s = 0; s < db.samples.size(); ++s) {
    const auto& state = db.samples[s];
    for (std::size_t i = 0; i < state.bs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g\n", s, i,
                    state.bs[i].buy, state.bs[i].sell, state.bs[i].harvested);
      out << buf;
    }
  }
}

SampleDatabase load_database(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_database: cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  SampleDatabase db;
  bool header_seen = false;
  auto fail = [&](const std::string& what) {
    throw ParseError("load_database: " + what + " at line " +
                     std::to_string(lineno));
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;  // first non-empty line is the header
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5) fail("expected 5 columns");
    std::size_t sample_idx = 0, bs_idx = 0;
    BsState bs;
    try {
      sample_idx = std::stoul(fields[0]);
      bs_idx = std::stoul(fields[1]);
      bs.buy = std::stod(fields[2]);
      bs.sell = std::stod(fields[3]);
      bs.harvested = std::stod(fields[4]);
    } catch (const std::exception&) {
      fail("malformed number");
    }
    if (bs.buy < bs.sell) fail("buy price below sell price");
    if (bs.sell < 0.0) fail("negative sell price");
    if (bs.harvested < 0.0) fail("negative harvested energy");
    if (sample_idx >= db.samples.size()) db.samples.resize(sample_idx + 1);
    auto& state = db.samples[sample_idx];
    if (bs_idx >= state.bs.size()) state.bs.resize(bs_idx + 1);
    state.bs[bs_idx] = bs;
    db.max_buy_price = std::max(db.max_buy_price, bs.buy);
    db.num_bs = std::max(db.num_bs, static_cast<int>(bs_idx) + 1);
  }
  if (db.samples.empty()) throw ParseError("load_database: empty database");
  for (const auto& state : db.samples)
    if (static_cast<int>(state.bs.size()) != db.num_bs)
      throw ParseError("load_database: inconsistent BS count across samples");
  return db;
}

}  // namespace cmbf
