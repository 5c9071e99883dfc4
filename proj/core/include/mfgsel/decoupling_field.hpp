#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "mfgsel/coefficients.hpp"
#include "mfgsel/fields.hpp"

namespace mfgsel {

// Smallest common-noise level with direct field evaluation; the exponent
// sharpness lambda = sigma0^-2 reaches 2500 here.  Below the floor the
// simulators switch to the entropy field.
inline constexpr double min_sigma0_for_field = 0.02;

// Piecewise-affine terminal data prepared for Cole-Hopf integration:
// per-piece slope/intercept of g and the quadratic pieces of the potential
// H(y) = -int_0^y g(v) dv (continuous, H(0) = 0).
struct TerminalSpec {
  struct Piece {
    double lo, hi;         // support; +-infinity at the outer ends
    double slope, value0;  // g(y) = value0 + slope*y
    double hA, hB, hC;     // H(y) = hA y^2 + hB y + hC
  };
  std::vector<Piece> pieces;
  bool odd = false;

  double value(double y) const;
  double antiderivative(double y) const;
};

TerminalSpec make_terminal(const TerminalCondition& g);
TerminalSpec make_terminal(const SmoothedTerminal& g);

// Viscous decoupling field
//   theta(t,x) = int (x-y)/r_t exp(lambda h(y)) dy / int exp(lambda h(y)) dy,
//   h(y) = H(y) - (x-y)^2 / (2 r_t),  lambda = sigma0^-2.
// Every piece of lambda h is quadratic, so both integrals are evaluated in
// closed form: erf/erfcx on concave pieces, Dawson on convex ones, all
// exponents taken relative to the global maximum of lambda h.  For an odd
// terminal the field is evaluated for x > 0 and mirrored, which makes the
// odd symmetry exact in floating point.
class ViscousField final : public SpaceTimeField {
 public:
  ViscousField(std::shared_ptr<const CoefficientTable> table, double sigma0,
               TerminalSpec terminal);

  double value(double t, double x) const override;

  double sigma0() const { return sigma0_; }
  double lambda() const { return lambda_; }
  const TerminalSpec& terminal() const { return terminal_; }
  const CoefficientTable& table() const { return *table_; }
  std::shared_ptr<const CoefficientTable> table_ptr() const { return table_; }

 private:
  double eval_raw(double t, double x) const;

  std::shared_ptr<const CoefficientTable> table_;
  double sigma0_;
  double lambda_;
  TerminalSpec terminal_;
};

// Independent check of the same ratio: adaptive Gauss-Kronrod quadrature of
// numerator and denominator over a truncated domain, sharing only the
// definition of h and the max-exponent normalization (which cancels in the
// ratio).  Slow; for verification lattices only.
double quadrature_oracle(double t, double x, double sigma0,
                         const CoefficientTable& table,
                         const TerminalSpec& terminal);

// Gap between the viscous field and the entropy profile.
double psi(const ViscousField& field, double t, double x);

// Closed-form majorant of |psi| valid before the plateau onset and strictly
// inside the outer characteristic cone: t < delta, 0 < |x| < r_t - r_delta.
double psi_bound(double t, double x, double sigma0,
                 const CoefficientTable& table);

struct PdeResidual {
  double value;     // theta_t - w^-2 theta theta_x + (sigma0^2/2) w^-2 theta_xx
  double theta_t;
  double theta_x;
  double theta_xx;
};

// Central-difference residual of the quasilinear PDE satisfied by the field;
// second-order in both stencil widths.
PdeResidual pde_residual(const ViscousField& field, double t, double x,
                         double h_t, double h_x);

struct L1Comparison {
  double gap_integral;   // int |theta_smoothed - theta| dx at fixed t
  double bound;          // 2 gamma^2 / r_delta (terminal-time L1 distance)
  double min_pointwise;  // min over the lattice of theta_smoothed - theta
};

// Compares the fields started from the smoothed and the plain terminal at a
// fixed time over a truncated spatial domain (composite Simpson lattice).
L1Comparison l1_comparison(const std::shared_ptr<const CoefficientTable>& table,
                           double sigma0, double gamma, double t,
                           std::size_t intervals = 6000);

}  // namespace mfgsel
