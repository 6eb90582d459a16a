#pragma once

#include <span>

#include "cmbf/model.hpp"

namespace cmbf {

// Empirical theta-quantile: smallest sample value v with
// #{samples <= v} / n >= theta (lower endpoint of the solution interval).
double empirical_var(std::span<const double> costs, double theta);

// Empirical CVaR: min over eta of eta + (1/((1-theta)n)) sum (c - eta)^+,
// computed exactly by minimizing over the sample points.
double empirical_cvar(std::span<const double> costs, double theta);

// Single-sample CVaR surrogate:
// eta + (1/(1-theta)) * [transaction_cost(power, s) - eta]^+
double tail_cost(double power, double eta, const BsState& s, double theta);

struct TailCostSubgradient {
  double d_power = 0.0;
  double d_eta = 0.0;
};

// Subgradient of tail_cost at (power, eta) for sample s. At the kinks the
// ">=" branch wins.
TailCostSubgradient tail_cost_subgradient(double power, double eta,
                                          const BsState& s, double theta);

}  // namespace cmbf
