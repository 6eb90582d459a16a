#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cmbf {

// Deterministic random stream. All transforms are hand-rolled on top of
// mt19937_64 so that identical seeds give identical draws on every
// platform (the std distribution objects are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform on [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal (Box-Muller, one value per call for reproducibility)
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double exponential(double mean) {
    double u = uniform();
    while (u >= 1.0) u = uniform();
    return -mean * std::log1p(-u);
  }

  double weibull(double shape, double scale) {
    double u = uniform();
    while (u >= 1.0) u = uniform();
    return scale * std::pow(-std::log1p(-u), 1.0 / shape);
  }

  std::uint64_t next_u64() { return gen_(); }

  // integer in [0, n)
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // derive an independent stream for a named sub-task
  Rng fork(std::uint64_t salt) {
    return Rng(gen_() ^ (salt * 0x9e3779b97f4a7c15ULL));
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace cmbf
