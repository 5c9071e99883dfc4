#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "mfgsel/coefficients.hpp"
#include "mfgsel/fields.hpp"
#include "mfgsel/rng.hpp"

namespace mfgsel {

// One simulated conditional-mean path.  The raw Gaussian draws are retained
// so diagnostics can rebuild the stochastic integral and flip tests can rerun
// the exact same randomness.
struct SdePath {
  std::vector<double> values;   // at the grid nodes
  std::vector<double> normals;  // one standard normal per step
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
};

// Explicit Euler for d mu = -w^-2 field(t, mu) dt + sigma0 w^-1 dB with the
// drift frozen at the left node.  `normals` supplies the B increments as
// standard normals (scaled by sqrt(dt) internally).
SdePath euler_mean_path(const SpaceTimeField& drift_field, double sigma0,
                        const CoefficientTable& table,
                        std::vector<double> normals, double x0);

// Draws the normals from the (seed, kind, path_index, substream) Philox
// stream and runs euler_mean_path from x0 = xi.
SdePath simulate_mu(const SpaceTimeField& drift_field, double sigma0,
                    const CoefficientTable& table, double xi,
                    std::uint64_t seed, std::uint64_t path_index,
                    StreamKind kind = StreamKind::mfg_path,
                    std::uint64_t substream = 0);

std::vector<SdePath> simulate_ensemble(const SpaceTimeField& drift_field,
                                       double sigma0,
                                       const CoefficientTable& table,
                                       double xi, std::size_t n_paths,
                                       std::uint64_t seed, unsigned threads,
                                       std::uint64_t substream = 0);

// Amplitude/time thresholds separating the diffusive phase from escape:
// epsilon0 = sigma0^2 L^2 with L = |ln sigma0|^l_exponent, t_tilde = sqrt(sigma0).
struct TransitionPoint {
  double epsilon0;
  double t_tilde;
  double L;
  double sigma0;
};

TransitionPoint make_transition_point(double sigma0,
                                      double l_exponent = 1.0 / 9.0);

struct FirstExit {
  bool hit = false;
  int side = 0;        // sign of the path at the first threshold crossing
  double time = 0.0;   // horizon when no crossing
  std::size_t index = 0;
};

// First node with |value| > eps0.
FirstExit tau_epsilon(const SdePath& path, const CoefficientTable& table,
                      double eps0);

// Largest admissible envelope rate: c_delta = (k_delta - k_{delta/2}) / (2 k_T).
double escape_rate_ceiling(const CoefficientTable& table);

struct EscapeDiagnostics {
  FirstExit exit;
  bool violated = false;
  double tau_escape = 0.0;  // first envelope violation; horizon when none
};

// After the first threshold crossing the escaping side must stay above the
// floor sigma0^2 L + (1 - gamma)(k_t - k_tau) (mirrored on the minus side);
// requires 0 < gamma < c_delta.
EscapeDiagnostics tau_gamma_escape(const SdePath& path,
                                   const CoefficientTable& table,
                                   const TransitionPoint& transition,
                                   double gamma);

// Tube classification against the +-k rays on [delta, T]:
// +1 when sup |mu_t - k_t| <= tolerance, -1 when sup |mu_t + k_t| <= tolerance.
int classify_path(const std::vector<double>& values,
                  const CoefficientTable& table, double tolerance);

struct SelectionReport {
  std::size_t n_paths = 0;
  std::size_t n_plus = 0, n_minus = 0, n_unclassified = 0;
  double frac_plus = 0.0, frac_minus = 0.0, frac_unclassified = 0.0;
  double se_plus = 0.0, se_unclassified = 0.0;  // binomial standard errors
  double tolerance = 0.0;
  // quantiles {0.25, 0.5, 0.75, 0.9} of tau_epsilon when a transition point
  // is supplied (horizon counts as censored-at-horizon)
  std::vector<double> hitting_quantiles;
};

SelectionReport selection_stats(
    const std::vector<SdePath>& ensemble, const CoefficientTable& table,
    double tolerance,
    const std::optional<TransitionPoint>& transition = std::nullopt);

// Fractions and binomial standard errors from per-run class labels.
SelectionReport selection_from_classes(const std::vector<int>& classes,
                                       double tolerance);

// Monte Carlo estimate of the escape probability of the worst-case drifted
// process dX = -sign(X) dk + dW_k over a clock span kbar:
// P(sup |X| >= a).  Lower-bounded by hitting_bound_value for a calibrated c.
double hitting_probability_estimate(double a, double clock_span,
                                    std::size_t n_paths, std::uint64_t seed,
                                    double dt, unsigned threads);

inline double hitting_bound_value(double a, double clock_span, double c) {
  return std::exp(-c * clock_span - c * a * a / clock_span) / c;
}

}  // namespace mfgsel
