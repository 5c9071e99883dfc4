#include "mfgsel/cost_eval.hpp"

#include <cmath>
#include <stdexcept>

#include "mfgsel/parallel.hpp"
#include "mfgsel/quadrature.hpp"
#include "mfgsel/rng.hpp"

namespace mfgsel {

double cost_closed_form(double A, const ModelParams& params,
                        const CoefficientTable& table) {
  const std::size_t n = table.grid().nodes.size();
  std::vector<double> f1(n), f2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double eta = table.eta()[i];
    const double w2 = table.w()[i] * table.w()[i];
    const double k = table.k()[i];
    const double one_eta2 = 1.0 + eta * eta;
    f1[i] = one_eta2 * w2 * k * k - 2.0 * eta * k + table.winv2()[i];
    f2[i] = one_eta2 * w2 * k;
  }
  const double dt = table.grid().dt;
  const double wT = table.w().back();
  const double kT = table.k_total();
  const double drift_part =
      simpson_total(f1, dt) + (1.0 - wT * kT) * (1.0 - wT * kT);
  const double noise_part = wT * wT * kT + simpson_total(f2, dt);
  return 0.5 * A * A * drift_part +
         0.5 * params.sigma * params.sigma * noise_part;
}

MeanVariance equilibrium_marginal(double A, double t,
                                  const ModelParams& params,
                                  const CoefficientTable& table) {
  const double w = table.w_at(t);
  const double k = table.k_at(t);
  MeanVariance mv;
  mv.mean = w * (params.xi - A * k);
  mv.variance = w * w * params.sigma * params.sigma * k;
  return mv;
}

MonteCarloCost cost_monte_carlo(double A, std::size_t n_paths,
                                const ModelParams& params,
                                const CoefficientTable& table,
                                std::uint64_t seed, unsigned threads) {
  if (n_paths < 2)
    throw std::invalid_argument("cost_monte_carlo: need at least 2 paths");
  const TimeGrid& grid = table.grid();
  const std::size_t steps = grid.steps();
  const double dt = grid.dt;
  const double sqdt = std::sqrt(dt);
  std::vector<double> costs(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    NormalStream stream(seed, stream_id(StreamKind::cost_path, p, 0));
    double x = params.xi;
    double alpha = -table.eta()[0] * x - A * table.winv()[0];
    double f_prev = 0.5 * (alpha * alpha + x * x);
    double acc = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
      const double drift = (params.kappa - table.eta()[n]) * x -
                           A * table.winv()[n];
      x += drift * dt + params.sigma * sqdt * stream.next();
      if (!std::isfinite(x))
        throw std::runtime_error("cost_monte_carlo: state blew up");
      alpha = -table.eta()[n + 1] * x - A * table.winv()[n + 1];
      const double f_next = 0.5 * (alpha * alpha + x * x);
      acc += 0.5 * (f_prev + f_next) * dt;
      f_prev = f_next;
    }
    costs[p] = acc + 0.5 * (x + A) * (x + A);
  });
  double mean = 0.0;
  for (double c : costs) mean += c;
  mean /= static_cast<double>(n_paths);
  double var = 0.0;
  for (double c : costs) var += (c - mean) * (c - mean);
  var /= static_cast<double>(n_paths - 1);
  MonteCarloCost out;
  out.estimate = mean;
  out.standard_error = std::sqrt(var / static_cast<double>(n_paths));
  out.n_paths = n_paths;
  return out;
}

std::vector<CostRow> cost_table(const std::vector<double>& slopes,
                                std::size_t n_paths,
                                const ModelParams& params,
                                const CoefficientTable& table,
                                std::uint64_t seed, unsigned threads) {
  std::vector<CostRow> rows;
  rows.reserve(slopes.size());
  for (double A : slopes) {
    CostRow row;
    row.A = A;
    row.closed_form = cost_closed_form(A, params, table);
    const MonteCarloCost mc =
        cost_monte_carlo(A, n_paths, params, table, seed, threads);
    row.mc_estimate = mc.estimate;
    row.mc_se = mc.standard_error;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mfgsel
