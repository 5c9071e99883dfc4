#pragma once

#include <memory>
#include <vector>

#include "mfgsel/coefficients.hpp"
#include "mfgsel/model.hpp"

namespace mfgsel {

// Terminal feedback: clipped linear ramp of slope -1/r_delta, saturating at
// -sign(x) for |x| > r_delta.  Odd, non-increasing, |g| <= 1.
struct TerminalCondition {
  double r_delta;

  double operator()(double x) const {
    if (x > r_delta) return -1.0;
    if (x < -r_delta) return 1.0;
    return -x / r_delta;
  }
};

// One-sided mollification of the ramp: a plateau of width gamma inserted left
// of the upper corner and the ramp shifted by gamma across it.  Matches g
// outside (r_delta - 2 gamma, r_delta + gamma); deliberately not odd.
struct SmoothedTerminal {
  double r_delta;
  double gamma;

  SmoothedTerminal(double r_delta_, double gamma_)
      : r_delta(r_delta_), gamma(gamma_) {
    if (!(gamma > 0.0) || !(gamma < 0.5 * r_delta))
      throw std::invalid_argument(
          "SmoothedTerminal: need 0 < gamma < r_delta/2");
  }

  double operator()(double x) const {
    const TerminalCondition g{r_delta};
    if (x <= r_delta - 2.0 * gamma) return g(x);
    if (x <= r_delta - gamma) return g(r_delta - 2.0 * gamma);  // plateau
    if (x <= r_delta + gamma) return g(x - gamma);
    return -1.0;
  }

  double plateau_value() const { return -1.0 + 2.0 * gamma / r_delta; }
};

// Anything evaluable on the time-space cylinder; drift fields for the
// simulators implement this.
class SpaceTimeField {
 public:
  virtual ~SpaceTimeField() = default;
  virtual double value(double t, double x) const = 0;
};

// Vanishing-viscosity profile of the master equation:
//   -sign(x) before delta and outside the rarefaction fan,
//   -x/(r_delta - r_t) inside the fan (t > delta, |x| < r_delta - r_t).
double entropy_eval(double t, double x, const CoefficientTable& table);

class EntropyField final : public SpaceTimeField {
 public:
  explicit EntropyField(std::shared_ptr<const CoefficientTable> table)
      : table_(std::move(table)) {}
  double value(double t, double x) const override {
    return entropy_eval(t, x, *table_);
  }

 private:
  std::shared_ptr<const CoefficientTable> table_;
};

// A deterministic equilibrium of the common-noise-free game: constant
// terminal label A with mean path mu_t = xi - A k_t and vanishing martingale
// part.  Admissible labels: A in {-1, xi/k_delta, +1} (the middle one only
// for xi != 0), and none exist for |xi| >= k_delta.
struct EquilibriumTriple {
  double A = 0.0;
  double h = 0.0;                    // backward-component label, equals A
  double z = 0.0;                    // martingale integrand, identically 0
  std::vector<double> mu;            // mean path at the grid nodes
};

std::vector<double> admissible_labels(double xi, const CoefficientTable& table);

EquilibriumTriple equilibrium_path(double A, double xi,
                                   const CoefficientTable& table);

}  // namespace mfgsel
