#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cmbf/model.hpp"
#include "cmbf/rng.hpp"

namespace cmbf {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One grid-wide realization s = (a_i, b_i, e_i) for every BS.
struct RandomState {
  std::vector<BsState> bs;
};

// Archive of i.i.d. grid states plus the recorded maximum buy price.
struct SampleDatabase {
  std::vector<RandomState> samples;
  int num_bs = 0;
  double max_buy_price = 0.0;

  std::size_t size() const { return samples.size(); }
  // per-BS cost samples of a fixed power vector, summed grid-wide
  // (used by the reporting paths)
};

enum class ResFamily { weibull, exponential, constant };

struct ScenarioConfig {
  int num_cells = 4;
  int users_per_cell = 4;
  int num_antennas = 8;
  double correlation = 0.9;   // antenna correlation alpha in [0,1)
  double cross_gain = 0.25;   // large-scale gain of other-cell channels
  double sinr_target = 8.0;   // linear
  double noise_power = 1.0;
  double price_mean = 1.0;    // uniform buy-price mean
  double price_width = 1.0;   // uniform support is mean +- width/2
  double sell_ratio = 0.9;    // b = ratio * a
  bool shared_prices = true;  // one grid-wide price draw per sample
  ResFamily res_family = ResFamily::weibull;
  double res_mean = 3.75;
  double res_shape = 2.0;      // Weibull shape
  double res_constant = 0.0;   // for ResFamily::constant
  int sample_count = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

// Exponential-correlation channel covariances: entry (m,n) of R_jik is
// g * alpha^|m-n| * e^{i beta (m-n)} with a fresh phase beta per (j,i,k)
// and g = 1 same-cell, cross_gain otherwise.
SystemModel make_channels(const ScenarioConfig& cfg, Rng& rng);

// n i.i.d. grid states; b = sell_ratio * a; RES per the configured family.
SampleDatabase sample_states(const ScenarioConfig& cfg, Rng& rng, int n);

// CSV archive: header then one row (sample_index, bs_index, a, b, e) per
// BS per sample. Round-trips bit-exactly.
void save_database(const SampleDatabase& db, const std::filesystem::path& path);
SampleDatabase load_database(const std::filesystem::path& path);

}  // namespace cmbf
