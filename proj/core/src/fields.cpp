#include "mfgsel/fields.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mfgsel {

double entropy_eval(double t, double x, const CoefficientTable& table) {
  if (!(t >= 0.0) || t > table.horizon() * (1.0 + 1e-12))
    throw std::invalid_argument("entropy_eval: t outside [0, horizon]");
  const double fan = table.r_delta() - table.r_at(t);  // <= 0 before delta
  if (std::abs(x) >= fan || fan <= 0.0) return -sign0(x);
  return -x / fan;
}

std::vector<double> admissible_labels(double xi, const CoefficientTable& table) {
  if (std::abs(xi) >= table.k_delta())
    throw std::invalid_argument(
        "admissible_labels: |xi| >= k_delta, no equilibrium family (xi=" +
        std::to_string(xi) + ", k_delta=" + std::to_string(table.k_delta()) +
        ")");
  if (xi == 0.0) return {-1.0, 0.0, 1.0};
  return {-1.0, xi / table.k_delta(), 1.0};
}

EquilibriumTriple equilibrium_path(double A, double xi,
                                   const CoefficientTable& table) {
  const auto labels = admissible_labels(xi, table);
  bool ok = false;
  for (double cand : labels) ok = ok || std::abs(A - cand) <= 1e-12;
  if (!ok)
    throw std::invalid_argument("equilibrium_path: label " + std::to_string(A) +
                                " not admissible for xi=" + std::to_string(xi));

  EquilibriumTriple eq;
  eq.A = A;
  eq.h = A;
  eq.z = 0.0;
  const auto& k = table.k();
  eq.mu.resize(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) eq.mu[i] = xi - A * k[i];

  const TerminalCondition g{table.r_delta()};
  if (std::abs(g(eq.mu.back()) - A) > 1e-9)
    throw std::runtime_error(
        "equilibrium_path: terminal matching failed, g(mu_T)-A = " +
        std::to_string(g(eq.mu.back()) - A));
  return eq;
}

}  // namespace mfgsel
