#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfgsel {

// sign with the convention sign(0) = 0, so odd fields vanish at the origin.
inline double sign0(double x) { return (x > 0.0) - (x < 0.0); }

// Scalar model parameters of the linear-quadratic game with common noise.
//   kappa   mean-reversion rate in the state dynamics
//   sigma   idiosyncratic noise level
//   sigma0  common noise level (0 allowed: deterministic-mean limit)
//   horizon terminal time T
//   delta   onset time of the terminal-condition plateau, 0 < delta < T
//   xi      common initial mean (0 in the symmetric experiments)
struct ModelParams {
  double kappa = 0.0;
  double sigma = 1.0;
  double sigma0 = 0.0;
  double horizon = 1.0;
  double delta = 0.5;
  double xi = 0.0;

  void validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw std::invalid_argument("ModelParams: horizon must be positive");
    if (!(delta > 0.0) || !(delta < horizon))
      throw std::invalid_argument("ModelParams: need 0 < delta < horizon");
    if (!(sigma > 0.0))
      throw std::invalid_argument("ModelParams: sigma must be positive");
    if (sigma0 < 0.0)
      throw std::invalid_argument("ModelParams: sigma0 must be >= 0");
    if (!std::isfinite(kappa) || !std::isfinite(xi))
      throw std::invalid_argument("ModelParams: non-finite parameter");
  }
};

// Uniform grid on [0, horizon].  delta is snapped to the nearest node so that
// every piecewise-defined quantity switches exactly on a node.
struct TimeGrid {
  std::vector<double> nodes;   // size steps()+1, nodes[i] = horizon*i/n
  std::size_t delta_index = 0; // node carrying the snapped delta
  double dt = 0.0;             // nominal spacing horizon/n

  static TimeGrid uniform(double horizon, double dt, double delta) {
    if (!(horizon > 0.0) || !(dt > 0.0) || !(dt < horizon))
      throw std::invalid_argument("TimeGrid: need 0 < dt < horizon");
    if (!(delta > 0.0) || !(delta < horizon))
      throw std::invalid_argument("TimeGrid: need 0 < delta < horizon");
    const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
    if (n < 4) throw std::invalid_argument("TimeGrid: too few steps");
    TimeGrid g;
    g.dt = horizon / static_cast<double>(n);
    g.nodes.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
      g.nodes[i] = horizon * static_cast<double>(i) / static_cast<double>(n);
    const auto di = static_cast<std::size_t>(
        std::llround(delta / horizon * static_cast<double>(n)));
    if (di == 0 || di >= n)
      throw std::invalid_argument("TimeGrid: delta snaps outside (0, horizon)");
    if (std::abs(g.nodes[di] - delta) > 0.5 * g.dt + 1e-12)
      throw std::logic_error("TimeGrid: delta snap failed");
    g.delta_index = di;
    return g;
  }

  std::size_t steps() const { return nodes.size() - 1; }
  double horizon() const { return nodes.back(); }
  double delta() const { return nodes[delta_index]; }
};

}  // namespace mfgsel
