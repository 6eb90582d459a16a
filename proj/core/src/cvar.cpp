#include "cmbf/cvar.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace cmbf {

namespace {
void check_theta(double theta) {
  if (theta < 0.0 || theta >= 1.0)
    throw std::invalid_argument("theta must lie in [0, 1)");
}
}  // namespace

double empirical_var(std::span<const double> costs, double theta) {
  check_theta(theta);
  if (costs.empty()) throw std::invalid_argument("empirical_var: empty sample set");
  std::vector<double> sorted(costs.begin(), costs.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // smallest v with #{c <= v}/n >= theta
  for (std::size_t idx = 0; idx < sorted.size(); ++idx)
    if (static_cast<double>(idx + 1) / n >= theta) return sorted[idx];
  return sorted.back();
}

double empirical_cvar(std::span<const double> costs, double theta) {
  check_theta(theta);
  if (costs.empty())
    throw std::invalid_argument("empirical_cvar: empty sample set");
  const double n = static_cast<double>(costs.size());
  const double scale = 1.0 / ((1.0 - theta) * n);
  // the minimizer over eta can be taken at a sample point; evaluate the
  // objective at every sample value via suffix sums
  std::vector<double> sorted(costs.begin(), costs.end());
  std::sort(sorted.begin(), sorted.end());
  double best = std::numeric_limits<double>::infinity();
  double suffix_sum = 0.0;  // sum of samples strictly above the candidate
  double suffix_cnt = 0.0;
  for (std::size_t r = sorted.size(); r-- > 0;) {
    const double eta = sorted[r];
    best = std::min(best, eta + scale * (suffix_sum - eta * suffix_cnt));
    suffix_sum += eta;
    suffix_cnt += 1.0;
  }
  return best;
}

double tail_cost(double power, double eta, const BsState& s, double theta) {
  check_theta(theta);
  const double excess = transaction_cost(power, s) - eta;
  return eta + (excess > 0.0 ? excess / (1.0 - theta) : 0.0);
}

TailCostSubgradient tail_cost_subgradient(double power, double eta,
                                          const BsState& s, double theta) {
  check_theta(theta);
  TailCostSubgradient g;
  const double cost = transaction_cost(power, s);
  if (cost >= eta) {
    g.d_power = (power >= s.harvested ? s.buy : s.sell) / (1.0 - theta);
    g.d_eta = -theta / (1.0 - theta);
  } else {
    g.d_power = 0.0;
    g.d_eta = 1.0;
  }
  return g;
}

}  // namespace cmbf
