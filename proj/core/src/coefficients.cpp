#include "mfgsel/coefficients.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "mfgsel/quadrature.hpp"

namespace mfgsel {

namespace {

double riccati_rhs(double eta, double kappa) {
  return eta * eta - 2.0 * kappa * eta - 1.0;
}

// Cubic Hermite basis on s in [0,1].
double hermite(double y0, double d0, double y1, double d1, double h, double s) {
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 +
         (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1;
}

void write_double(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

std::vector<double> solve_riccati(const ModelParams& params,
                                  const TimeGrid& grid) {
  params.validate();
  const std::size_t n = grid.steps();
  std::vector<double> eta(n + 1);
  eta[n] = 1.0;
  for (std::size_t i = n; i-- > 0;) {
    const double h = grid.nodes[i] - grid.nodes[i + 1];  // negative step
    const double y = eta[i + 1];
    const double k1 = riccati_rhs(y, params.kappa);
    const double k2 = riccati_rhs(y + 0.5 * h * k1, params.kappa);
    const double k3 = riccati_rhs(y + 0.5 * h * k2, params.kappa);
    const double k4 = riccati_rhs(y + h * k3, params.kappa);
    eta[i] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(eta[i]))
      throw std::runtime_error("solve_riccati: non-finite eta at t=" +
                               std::to_string(grid.nodes[i]));
  }
  return eta;
}

CoefficientTable::CoefficientTable(TimeGrid grid, std::vector<double> eta,
                                   double kappa)
    : kappa_(kappa), grid_(std::move(grid)), eta_(std::move(eta)) {
  const std::size_t n = grid_.steps();
  if (eta_.size() != n + 1)
    throw std::invalid_argument("CoefficientTable: eta size mismatch");
  for (double e : eta_)
    if (!std::isfinite(e))
      throw std::invalid_argument("CoefficientTable: non-finite eta sample");

  std::vector<double> drift(n + 1);
  for (std::size_t i = 0; i <= n; ++i) drift[i] = eta_[i] - kappa_;
  const std::vector<double> prefix = cumulative_simpson(drift, grid_.dt);
  const double total = prefix.back();

  w_.resize(n + 1);
  winv_.resize(n + 1);
  winv2_.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double expo = total - prefix[i];  // int_t^T (eta - kappa)
    w_[i] = std::exp(expo);
    winv_[i] = std::exp(-expo);
    winv2_[i] = std::exp(-2.0 * expo);
    if (!std::isfinite(w_[i]) || !(w_[i] > 0.0))
      throw std::runtime_error("CoefficientTable: w out of range");
  }

  k_ = cumulative_simpson(winv2_, grid_.dt);
  r_.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) r_[i] = k_.back() - k_[i];
  for (std::size_t i = 0; i < n; ++i)
    if (!(k_[i + 1] > k_[i]))
      throw std::runtime_error("CoefficientTable: clock k not increasing");
}

std::size_t CoefficientTable::cell_of(double t) const {
  if (!(t >= 0.0) || t > grid_.horizon() * (1.0 + 1e-12))
    throw std::invalid_argument("CoefficientTable: t outside [0, horizon]");
  const std::size_t n = grid_.steps();
  auto i = static_cast<std::size_t>(t / grid_.dt);
  if (i >= n) i = n - 1;
  // keep t inside [nodes[i], nodes[i+1]]
  while (i > 0 && t < grid_.nodes[i]) --i;
  while (i + 1 < n && t >= grid_.nodes[i + 1]) ++i;
  return i;
}

double CoefficientTable::eta_at(double t) const {
  const std::size_t i = cell_of(t);
  const double h = grid_.nodes[i + 1] - grid_.nodes[i];
  const double s = (t - grid_.nodes[i]) / h;
  return hermite(eta_[i], riccati_rhs(eta_[i], kappa_), eta_[i + 1],
                 riccati_rhs(eta_[i + 1], kappa_), h, s);
}

double CoefficientTable::w_at(double t) const {
  const std::size_t i = cell_of(t);
  const double h = grid_.nodes[i + 1] - grid_.nodes[i];
  const double s = (t - grid_.nodes[i]) / h;
  // dw/dt = -(eta - kappa) w
  return hermite(w_[i], -(eta_[i] - kappa_) * w_[i], w_[i + 1],
                 -(eta_[i + 1] - kappa_) * w_[i + 1], h, s);
}

double CoefficientTable::k_at(double t) const {
  const std::size_t i = cell_of(t);
  const double h = grid_.nodes[i + 1] - grid_.nodes[i];
  const double s = (t - grid_.nodes[i]) / h;
  return hermite(k_[i], winv2_[i], k_[i + 1], winv2_[i + 1], h, s);
}

void CoefficientTable::write_csv(std::ostream& out) const {
  out << "t,eta,w,r,k\n";
  for (std::size_t i = 0; i < grid_.nodes.size(); ++i) {
    write_double(out, grid_.nodes[i]);
    out.put(',');
    write_double(out, eta_[i]);
    out.put(',');
    write_double(out, w_[i]);
    out.put(',');
    write_double(out, r_[i]);
    out.put(',');
    write_double(out, k_[i]);
    out.put('\n');
  }
}

CoefficientTable build_coefficients(const ModelParams& params,
                                    const TimeGrid& grid,
                                    const std::vector<double>& eta) {
  params.validate();
  return CoefficientTable(grid, eta, params.kappa);
}

CoefficientTable build_coefficients(const ModelParams& params,
                                    const TimeGrid& grid) {
  return build_coefficients(params, grid, solve_riccati(params, grid));
}

}  // namespace mfgsel
