#include "mfgsel/mfg_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mfgsel/model.hpp"
#include "mfgsel/parallel.hpp"

namespace mfgsel {

SdePath euler_mean_path(const SpaceTimeField& drift_field, double sigma0,
                        const CoefficientTable& table,
                        std::vector<double> normals, double x0) {
  const TimeGrid& grid = table.grid();
  const std::size_t steps = grid.steps();
  if (normals.size() != steps)
    throw std::invalid_argument("euler_mean_path: need one normal per step");
  SdePath path;
  path.values.resize(steps + 1);
  path.values[0] = x0;
  const double dt = grid.dt;
  const double sqdt = std::sqrt(dt);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = grid.nodes[n];
    const double mu = path.values[n];
    const double drift = -table.winv2()[n] * drift_field.value(t, mu);
    const double diff = sigma0 * table.winv()[n] * sqdt * normals[n];
    const double next = mu + drift * dt + diff;
    if (!std::isfinite(next))
      throw std::runtime_error("euler_mean_path: state blew up at t = " +
                               std::to_string(t));
    path.values[n + 1] = next;
  }
  path.normals = std::move(normals);
  return path;
}

SdePath simulate_mu(const SpaceTimeField& drift_field, double sigma0,
                    const CoefficientTable& table, double xi,
                    std::uint64_t seed, std::uint64_t path_index,
                    StreamKind kind, std::uint64_t substream) {
  const std::size_t steps = table.grid().steps();
  NormalStream stream(seed, stream_id(kind, path_index, substream));
  std::vector<double> normals(steps);
  for (double& z : normals) z = stream.next();
  SdePath path = euler_mean_path(drift_field, sigma0, table,
                                 std::move(normals), xi);
  path.seed = seed;
  path.path_index = path_index;
  return path;
}

std::vector<SdePath> simulate_ensemble(const SpaceTimeField& drift_field,
                                       double sigma0,
                                       const CoefficientTable& table,
                                       double xi, std::size_t n_paths,
                                       std::uint64_t seed, unsigned threads,
                                       std::uint64_t substream) {
  std::vector<SdePath> out(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    out[p] = simulate_mu(drift_field, sigma0, table, xi, seed, p,
                         StreamKind::mfg_path, substream);
  });
  return out;
}

TransitionPoint make_transition_point(double sigma0, double l_exponent) {
  if (!(sigma0 > 0.0) || sigma0 >= 1.0)
    throw std::invalid_argument(
        "make_transition_point: need 0 < sigma0 < 1, got " +
        std::to_string(sigma0));
  TransitionPoint tp;
  tp.sigma0 = sigma0;
  tp.L = std::pow(std::abs(std::log(sigma0)), l_exponent);
  tp.epsilon0 = sigma0 * sigma0 * tp.L * tp.L;
  tp.t_tilde = std::sqrt(sigma0);
  return tp;
}

FirstExit tau_epsilon(const SdePath& path, const CoefficientTable& table,
                      double eps0) {
  const TimeGrid& grid = table.grid();
  if (path.values.size() != grid.nodes.size())
    throw std::invalid_argument("tau_epsilon: path/grid size mismatch");
  FirstExit fx;
  for (std::size_t n = 0; n < path.values.size(); ++n) {
    if (std::abs(path.values[n]) > eps0) {
      fx.hit = true;
      fx.side = path.values[n] > 0.0 ? 1 : -1;
      fx.time = grid.nodes[n];
      fx.index = n;
      return fx;
    }
  }
  fx.time = grid.horizon();
  fx.index = path.values.size() - 1;
  return fx;
}

double escape_rate_ceiling(const CoefficientTable& table) {
  const double k_half = table.k_at(table.delta() / 2.0);
  return (table.k_delta() - k_half) / (2.0 * table.k_total());
}

EscapeDiagnostics tau_gamma_escape(const SdePath& path,
                                   const CoefficientTable& table,
                                   const TransitionPoint& transition,
                                   double gamma) {
  const double ceiling = escape_rate_ceiling(table);
  if (!(gamma > 0.0) || gamma >= ceiling)
    throw std::invalid_argument(
        "tau_gamma_escape: gamma must lie in (0, " + std::to_string(ceiling) +
        "), got " + std::to_string(gamma));
  EscapeDiagnostics diag;
  diag.exit = tau_epsilon(path, table, transition.epsilon0);
  diag.tau_escape = table.horizon();
  if (!diag.exit.hit) return diag;
  const TimeGrid& grid = table.grid();
  const double base = transition.sigma0 * transition.sigma0 * transition.L;
  const double k_tau = table.k()[diag.exit.index];
  const double side = static_cast<double>(diag.exit.side);
  for (std::size_t n = diag.exit.index; n < path.values.size(); ++n) {
    const double floor = base + (1.0 - gamma) * (table.k()[n] - k_tau);
    if (side * path.values[n] < floor) {
      diag.violated = true;
      diag.tau_escape = grid.nodes[n];
      return diag;
    }
  }
  return diag;
}

int classify_path(const std::vector<double>& values,
                  const CoefficientTable& table, double tolerance) {
  const TimeGrid& grid = table.grid();
  if (values.size() != grid.nodes.size())
    throw std::invalid_argument("classify_path: path/grid size mismatch");
  double sup_plus = 0.0, sup_minus = 0.0;
  for (std::size_t n = grid.delta_index; n < values.size(); ++n) {
    sup_plus = std::max(sup_plus, std::abs(values[n] - table.k()[n]));
    sup_minus = std::max(sup_minus, std::abs(values[n] + table.k()[n]));
  }
  if (sup_plus <= tolerance) return 1;
  if (sup_minus <= tolerance) return -1;
  return 0;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

SelectionReport selection_from_classes(const std::vector<int>& classes,
                                       double tolerance) {
  if (classes.empty())
    throw std::invalid_argument("selection_from_classes: no runs");
  SelectionReport rep;
  rep.n_paths = classes.size();
  rep.tolerance = tolerance;
  for (int cls : classes) {
    if (cls > 0)
      ++rep.n_plus;
    else if (cls < 0)
      ++rep.n_minus;
    else
      ++rep.n_unclassified;
  }
  const double n = static_cast<double>(rep.n_paths);
  rep.frac_plus = static_cast<double>(rep.n_plus) / n;
  rep.frac_minus = static_cast<double>(rep.n_minus) / n;
  rep.frac_unclassified = static_cast<double>(rep.n_unclassified) / n;
  rep.se_plus = std::sqrt(rep.frac_plus * (1.0 - rep.frac_plus) / n);
  rep.se_unclassified =
      std::sqrt(rep.frac_unclassified * (1.0 - rep.frac_unclassified) / n);
  return rep;
}

SelectionReport selection_stats(
    const std::vector<SdePath>& ensemble, const CoefficientTable& table,
    double tolerance, const std::optional<TransitionPoint>& transition) {
  if (ensemble.empty())
    throw std::invalid_argument("selection_stats: empty ensemble");
  std::vector<int> classes;
  classes.reserve(ensemble.size());
  std::vector<double> taus;
  if (transition) taus.reserve(ensemble.size());
  for (const SdePath& path : ensemble) {
    classes.push_back(classify_path(path.values, table, tolerance));
    if (transition)
      taus.push_back(tau_epsilon(path, table, transition->epsilon0).time);
  }
  SelectionReport rep = selection_from_classes(classes, tolerance);
  if (transition) {
    std::sort(taus.begin(), taus.end());
    for (double p : {0.25, 0.5, 0.75, 0.9})
      rep.hitting_quantiles.push_back(quantile_sorted(taus, p));
  }
  return rep;
}

double hitting_probability_estimate(double a, double clock_span,
                                    std::size_t n_paths, std::uint64_t seed,
                                    double dt, unsigned threads) {
  if (!(a > 0.0) || !(clock_span > 0.0) || !(dt > 0.0) || n_paths == 0)
    throw std::invalid_argument("hitting_probability_estimate: bad arguments");
  const std::size_t steps =
      static_cast<std::size_t>(std::llround(clock_span / dt));
  if (steps == 0)
    throw std::invalid_argument(
        "hitting_probability_estimate: dt exceeds the clock span");
  const double h = clock_span / static_cast<double>(steps);
  const double sqh = std::sqrt(h);
  std::vector<unsigned char> hits(n_paths, 0);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    NormalStream stream(seed, stream_id(StreamKind::hitting_path, p, 0));
    double x = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
      x += -sign0(x) * h + sqh * stream.next();
      if (std::abs(x) >= a) {
        hits[p] = 1;
        return;
      }
    }
  });
  std::size_t count = 0;
  for (unsigned char hbit : hits) count += hbit;
  return static_cast<double>(count) / static_cast<double>(n_paths);
}

}  // namespace mfgsel
