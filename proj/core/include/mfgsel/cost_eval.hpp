#pragma once

#include <cstdint>
#include <vector>

#include "mfgsel/coefficients.hpp"
#include "mfgsel/model.hpp"

namespace mfgsel {

// Per-player cost of the admissible equilibrium with terminal slope A:
//   J(A) = A^2/2 [ int ((1+eta^2) w^2 k^2 - 2 eta k + w^-2) dt + (1 - w_T k_T)^2 ]
//        + sigma^2/2 [ w_T^2 k_T + int (1+eta^2) w^2 k dt ],
// evaluated with composite Simpson on the table grid.  A = 0 is the null
// equilibrium and always the cheapest: its cost is the pure-noise part.
double cost_closed_form(double A, const ModelParams& params,
                        const CoefficientTable& table);

struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;
};

// State marginal along the slope-A equilibrium:
// mean = w_t (xi - A k_t), variance = w_t^2 sigma^2 k_t.
MeanVariance equilibrium_marginal(double A, double t,
                                  const ModelParams& params,
                                  const CoefficientTable& table);

struct MonteCarloCost {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t n_paths = 0;
};

// Simulates the controlled state under the slope-A equilibrium control
// alpha = -eta X - A w^-1 and averages the realized cost
// int 1/2 (alpha^2 + X^2) dt + 1/2 (X_T + A)^2 (trapezoid in time).
MonteCarloCost cost_monte_carlo(double A, std::size_t n_paths,
                                const ModelParams& params,
                                const CoefficientTable& table,
                                std::uint64_t seed, unsigned threads);

struct CostRow {
  double A = 0.0;
  double closed_form = 0.0;
  double mc_estimate = 0.0;
  double mc_se = 0.0;
};

std::vector<CostRow> cost_table(const std::vector<double>& slopes,
                                std::size_t n_paths,
                                const ModelParams& params,
                                const CoefficientTable& table,
                                std::uint64_t seed, unsigned threads);

}  // namespace mfgsel
