#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <vector>

#include "mfgsel/model.hpp"

namespace mfgsel {

// eta sampled at every grid node: backward classic Runge-Kutta on
//   d eta/dt = eta^2 - 2 kappa eta - 1,  eta(T) = 1.
// Throws std::runtime_error if the iteration leaves the finite range.
std::vector<double> solve_riccati(const ModelParams& params, const TimeGrid& grid);

// Deterministic coefficient table shared by every other module:
//   w_t = exp(int_t^T (eta_s - kappa) ds)          (w_T = 1)
//   k_t = int_0^t w_s^-2 ds   (increasing clock)
//   r_t = int_t^T w_s^-2 ds = k_T - k_t            (decreasing clock)
// Cumulative integrals use the composite-Simpson prefix rule; r is defined
// from k so k_t + r_t = k_T holds to rounding by construction.
class CoefficientTable {
 public:
  CoefficientTable(TimeGrid grid, std::vector<double> eta, double kappa);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<double>& eta() const { return eta_; }
  const std::vector<double>& w() const { return w_; }
  const std::vector<double>& winv() const { return winv_; }
  const std::vector<double>& winv2() const { return winv2_; }
  const std::vector<double>& k() const { return k_; }
  const std::vector<double>& r() const { return r_; }

  double horizon() const { return grid_.horizon(); }
  double delta() const { return grid_.delta(); }
  std::size_t delta_index() const { return grid_.delta_index; }
  double r_delta() const { return r_[grid_.delta_index]; }
  double k_delta() const { return k_[grid_.delta_index]; }
  double k_total() const { return k_.back(); }

  // Off-node evaluation by cubic Hermite with the exact nodal derivatives
  // (eta' from the Riccati right-hand side, w' = -(eta-kappa) w, k' = w^-2);
  // C^1 in t and exact at the nodes.
  double eta_at(double t) const;
  double w_at(double t) const;
  double k_at(double t) const;
  double r_at(double t) const { return k_.back() - k_at(t); }

  void write_csv(std::ostream& out) const;

 private:
  std::size_t cell_of(double t) const;

  double kappa_ = 0.0;
  TimeGrid grid_;
  std::vector<double> eta_, w_, winv_, winv2_, k_, r_;
};

CoefficientTable build_coefficients(const ModelParams& params,
                                    const TimeGrid& grid,
                                    const std::vector<double>& eta);

// Convenience: Riccati solve + table in one call.
CoefficientTable build_coefficients(const ModelParams& params,
                                    const TimeGrid& grid);

// Non-owning shared_ptr view for interfaces that hold the table by
// shared_ptr; the caller keeps the table alive.
inline std::shared_ptr<const CoefficientTable> borrow_table(
    const CoefficientTable& table) {
  return std::shared_ptr<const CoefficientTable>(
      std::shared_ptr<const CoefficientTable>(), &table);
}

}  // namespace mfgsel
