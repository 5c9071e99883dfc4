#include "mfgsel/nplayer_sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "mfgsel/decoupling_field.hpp"
#include "mfgsel/parallel.hpp"

namespace mfgsel {

double leave_one_out_mean(const std::vector<double>& states, std::size_t i) {
  const std::size_t n = states.size();
  if (n < 2)
    throw std::invalid_argument("leave_one_out_mean: need at least 2 states");
  if (i >= n) throw std::invalid_argument("leave_one_out_mean: index out of range");
  const double sum = std::accumulate(states.begin(), states.end(), 0.0);
  return (sum - states[i]) / static_cast<double>(n - 1);
}

std::vector<double> pooled_increments(std::size_t n_players, std::size_t steps,
                                      std::uint64_t seed,
                                      std::uint64_t run_index,
                                      const std::vector<std::uint32_t>& order) {
  if (n_players < 1)
    throw std::invalid_argument("pooled_increments: need at least one player");
  if (!order.empty()) {
    if (order.size() != n_players)
      throw std::invalid_argument("pooled_increments: order size mismatch");
    std::vector<char> seen(n_players, 0);
    for (std::uint32_t id : order) {
      if (id >= n_players || seen[id])
        throw std::invalid_argument("pooled_increments: order is not a permutation");
      seen[id] = 1;
    }
  }
  std::vector<double> acc(steps, 0.0);
  for (std::size_t slot = 0; slot < n_players; ++slot) {
    const std::uint64_t player = order.empty() ? slot : order[slot];
    NormalStream stream(
        seed, stream_id(StreamKind::nplayer_particle, run_index, player));
    for (std::size_t n = 0; n < steps; ++n) acc[n] += stream.next();
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_players));
  for (double& a : acc) a *= scale;
  return acc;
}

AggregatePath simulate_aggregate(std::size_t n_players,
                                 const ModelParams& params,
                                 const CoefficientTable& table,
                                 std::uint64_t seed,
                                 std::uint64_t run_index) {
  if (n_players < 2)
    throw std::invalid_argument("simulate_aggregate: need at least 2 players");
  const double sigma0_eff =
      params.sigma / std::sqrt(static_cast<double>(n_players));
  if (sigma0_eff < min_sigma0_for_field) {
    const double n_max =
        std::floor(std::pow(params.sigma / min_sigma0_for_field, 2.0));
    throw std::invalid_argument(
        "simulate_aggregate: sigma/sqrt(N) = " + std::to_string(sigma0_eff) +
        " is below the field floor " + std::to_string(min_sigma0_for_field) +
        "; at sigma = " + std::to_string(params.sigma) +
        " the largest admissible N is " + std::to_string(n_max));
  }
  ViscousField field(borrow_table(table), sigma0_eff,
                     make_terminal(TerminalCondition{table.r_delta()}));
  AggregatePath agg;
  agg.n_players = n_players;
  agg.sigma0_effective = sigma0_eff;
  agg.path = euler_mean_path(
      field, sigma0_eff, table,
      pooled_increments(n_players, table.grid().steps(), seed, run_index),
      params.xi);
  agg.path.seed = seed;
  agg.path.path_index = run_index;
  return agg;
}

namespace {

// Monomials x^p m^q with p + q <= degree, in the fixed order
// (0,0),(1,0),(0,1),(2,0),(1,1),(0,2),...
struct Basis {
  static constexpr int max_degree = 15;
  int degree = 0;
  std::vector<std::pair<int, int>> powers;

  explicit Basis(int d) : degree(d) {
    if (d > max_degree)
      throw std::invalid_argument("basis degree too large");
    for (int total = 0; total <= d; ++total)
      for (int p = total; p >= 0; --p) powers.emplace_back(p, total - p);
  }
  std::size_t size() const { return powers.size(); }
  void eval(double x, double m, double* out) const {
    double xp[max_degree + 1], mp[max_degree + 1];
    xp[0] = mp[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
      xp[j] = xp[j - 1] * x;
      mp[j] = mp[j - 1] * m;
    }
    for (std::size_t j = 0; j < powers.size(); ++j)
      out[j] = xp[powers[j].first] * mp[powers[j].second];
  }
};

struct NodeModel {
  double x_mean = 0.0, x_scale = 1.0;
  double m_mean = 0.0, m_scale = 1.0;
  std::vector<double> beta;  // empty until the first fit
};

double eval_model(const NodeModel& model, const Basis& basis, double x,
                  double m, std::vector<double>& scratch) {
  const double xh = (x - model.x_mean) / model.x_scale;
  const double mh = (m - model.m_mean) / model.m_scale;
  basis.eval(xh, mh, scratch.data());
  double val = 0.0;
  for (std::size_t j = 0; j < model.beta.size(); ++j)
    val += model.beta[j] * scratch[j];
  return std::clamp(val, -1.0, 1.0);
}

void freeze_stats(NodeModel& model, const double* xs, std::size_t n,
                  double loo_sum) {
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += xs[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (xs[i] - mean) * (xs[i] - mean);
  var /= static_cast<double>(n);
  model.x_mean = mean;
  model.x_scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  // leave-one-out means are affine in the state, so their moments follow
  double mvar = 0.0;
  const double nn = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = (loo_sum - xs[i]) / nn;
    mvar += (m - mean) * (m - mean);
  }
  mvar /= static_cast<double>(n);
  model.m_mean = mean;
  model.m_scale = mvar > 1e-24 ? std::sqrt(mvar) : 1.0;
}

}  // namespace

ParticleSolution solve_exact_picard(std::size_t n_players,
                                    const ModelParams& params,
                                    const CoefficientTable& table,
                                    std::uint64_t seed,
                                    std::uint64_t run_index,
                                    const PicardConfig& cfg) {
  if (n_players < 2 || n_players > 256)
    throw std::invalid_argument(
        "solve_exact_picard: n_players must lie in [2, 256], got " +
        std::to_string(n_players));
  if (cfg.max_iterations < 1 || !(cfg.damping > 0.0) || cfg.damping > 1.0 ||
      cfg.basis_degree < 0 || !(cfg.tolerance > 0.0))
    throw std::invalid_argument("solve_exact_picard: bad Picard configuration");

  const TimeGrid& grid = table.grid();
  const std::size_t steps = grid.steps();
  const std::size_t N = n_players;
  const double dt = grid.dt;
  const double sqdt = std::sqrt(dt);

  ParticleSolution sol;
  sol.n_players = N;
  sol.sigma0_effective = params.sigma / std::sqrt(static_cast<double>(N));
  sol.seed = seed;
  sol.run_index = run_index;

  // Same per-player streams as simulate_aggregate pools, step-major storage.
  std::vector<double> z(steps * N);
  for (std::size_t i = 0; i < N; ++i) {
    NormalStream stream(seed,
                        stream_id(StreamKind::nplayer_particle, run_index, i));
    for (std::size_t n = 0; n < steps; ++n) z[n * N + i] = stream.next();
  }
  if (cfg.flip_noise)
    for (double& zi : z) zi = -zi;

  int degree = cfg.basis_degree;
  bool fallback = false;
  while (degree > 0 &&
         static_cast<std::size_t>((degree + 1) * (degree + 2) / 2) > N) {
    --degree;
    fallback = true;
  }
  const Basis basis(degree);
  const std::size_t ncols = basis.size();
  sol.degree_fallback = fallback;
  sol.basis_degree_used = degree;

  const TerminalCondition terminal{table.r_delta()};
  const double x0 = params.xi / table.w()[0];

  std::vector<NodeModel> models(steps);
  std::vector<double> x((steps + 1) * N);
  std::vector<double> v(steps * N, 0.0);
  std::vector<double> targets(N);
  std::vector<double> scratch(ncols);
  std::vector<double> row_sums(steps + 1, 0.0);

  auto forward = [&]() {
    std::fill_n(x.begin(), N, x0);
    for (std::size_t n = 0; n < steps; ++n) {
      double* row = &x[n * N];
      double sum = 0.0;
      for (std::size_t i = 0; i < N; ++i) sum += row[i];
      row_sums[n] = sum;
      const double winv2 = table.winv2()[n];
      const double diff = params.sigma * table.winv()[n] * sqdt;
      for (std::size_t i = 0; i < N; ++i) {
        const double m = (sum - row[i]) / static_cast<double>(N - 1);
        const double val = models[n].beta.empty()
                               ? 0.0
                               : eval_model(models[n], basis, row[i], m, scratch);
        v[n * N + i] = val;
        const double next = row[i] - winv2 * val * dt + diff * z[n * N + i];
        if (!std::isfinite(next))
          throw std::runtime_error("solve_exact_picard: particle blew up");
        x[(n + 1) * N + i] = next;
      }
    }
    double* last = &x[steps * N];
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) sum += last[i];
    row_sums[steps] = sum;
    for (std::size_t i = 0; i < N; ++i)
      targets[i] = terminal((sum - last[i]) / static_cast<double>(N - 1));
  };

  bool stats_frozen = false;
  Eigen::MatrixXd Phi(static_cast<Eigen::Index>(N),
                      static_cast<Eigen::Index>(ncols));
  Eigen::VectorXd Y(static_cast<Eigen::Index>(N));

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    forward();
    if (!stats_frozen) {
      for (std::size_t n = 0; n < steps; ++n)
        freeze_stats(models[n], &x[n * N], N, row_sums[n]);
      stats_frozen = true;
    }
    for (std::size_t i = 0; i < N; ++i)
      Y(static_cast<Eigen::Index>(i)) = targets[i];

    double delta = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
      NodeModel& model = models[n];
      const double* row = &x[n * N];
      for (std::size_t i = 0; i < N; ++i) {
        const double m = (row_sums[n] - row[i]) / static_cast<double>(N - 1);
        const double xh = (row[i] - model.x_mean) / model.x_scale;
        const double mh = (m - model.m_mean) / model.m_scale;
        basis.eval(xh, mh, scratch.data());
        for (std::size_t j = 0; j < ncols; ++j)
          Phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              scratch[j];
      }
      // The leave-one-out mean is exactly affine in the own state, so the
      // design is structurally rank deficient; a rank-revealing decomposition
      // picks the minimum-norm coefficients.
      Eigen::VectorXd fit = Phi.completeOrthogonalDecomposition().solve(Y);
      std::vector<double> beta_new(ncols);
      if (model.beta.empty()) {
        for (std::size_t j = 0; j < ncols; ++j)
          beta_new[j] = cfg.damping * fit(static_cast<Eigen::Index>(j));
      } else {
        for (std::size_t j = 0; j < ncols; ++j)
          beta_new[j] = (1.0 - cfg.damping) * model.beta[j] +
                        cfg.damping * fit(static_cast<Eigen::Index>(j));
      }
      std::vector<double> old_beta = std::move(model.beta);
      model.beta = std::move(beta_new);
      for (std::size_t i = 0; i < N; ++i) {
        const double m = (row_sums[n] - row[i]) / static_cast<double>(N - 1);
        const double fresh = eval_model(model, basis, row[i], m, scratch);
        delta = std::max(delta, std::abs(fresh - v[n * N + i]));
      }
    }
    sol.iterations = iter;
    sol.final_delta = delta;
    if (delta < cfg.tolerance) {
      sol.converged = true;
      break;
    }
  }

  forward();  // trajectory consistent with the final coefficients
  sol.mean_rescaled.resize(steps + 1);
  sol.value_mean.resize(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n)
    sol.mean_rescaled[n] = row_sums[n] / static_cast<double>(N);
  for (std::size_t n = 0; n < steps; ++n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) sum += v[n * N + i];
    sol.value_mean[n] = sum / static_cast<double>(N);
  }
  sol.value_mean[steps] =
      std::accumulate(targets.begin(), targets.end(), 0.0) /
      static_cast<double>(N);
  sol.terminal_states.assign(&x[steps * N], &x[steps * N] + N);

  sol.gamma_smoothing = std::min(
      std::pow(static_cast<double>(N), -0.25), 0.45 * table.r_delta());
  if (sol.sigma0_effective >= min_sigma0_for_field) {
    ViscousField smoothed(
        borrow_table(table), sol.sigma0_effective,
        make_terminal(SmoothedTerminal(table.r_delta(), sol.gamma_smoothing)));
    double slack = 0.0;
    for (std::size_t n = 0; n <= steps; ++n) {
      const double gap = sol.value_mean[n] -
                         smoothed.value(grid.nodes[n], sol.mean_rescaled[n]);
      slack = std::max(slack, gap);
    }
    sol.diag_slack = slack;
  }
  return sol;
}

double sup_gap(const ParticleSolution& solution,
               const AggregatePath& aggregate) {
  if (solution.mean_rescaled.size() != aggregate.path.values.size())
    throw std::invalid_argument("sup_gap: grid mismatch");
  double gap = 0.0;
  for (std::size_t n = 0; n < solution.mean_rescaled.size(); ++n)
    gap = std::max(gap,
                   std::abs(solution.mean_rescaled[n] - aggregate.path.values[n]));
  return gap;
}

NPlayerReport nplayer_report(std::size_t n_players, std::size_t n_runs,
                             const ModelParams& params,
                             const CoefficientTable& table, double tolerance,
                             std::uint64_t seed, bool exact,
                             const PicardConfig& cfg, unsigned threads) {
  if (n_runs == 0) throw std::invalid_argument("nplayer_report: no runs");
  NPlayerReport report;
  report.runs.resize(n_runs);
  parallel_for(n_runs, threads, [&](std::size_t r) {
    NPlayerRunRow row;
    row.run_id = r;
    const AggregatePath agg =
        simulate_aggregate(n_players, params, table, seed, r);
    if (exact) {
      const ParticleSolution sol =
          solve_exact_picard(n_players, params, table, seed, r, cfg);
      row.terminal_mean = sol.mean_rescaled.back();
      row.cls = classify_path(sol.mean_rescaled, table, tolerance);
      row.picard_iters = sol.iterations;
      row.converged = sol.converged;
      row.sup_gap_vs_aggregate = sup_gap(sol, agg);
      row.diag_slack = sol.diag_slack;
    } else {
      row.terminal_mean = agg.path.values.back();
      row.cls = classify_path(agg.path.values, table, tolerance);
    }
    report.runs[r] = row;
  });
  std::vector<int> classes(n_runs);
  for (std::size_t r = 0; r < n_runs; ++r) classes[r] = report.runs[r].cls;
  report.selection = selection_from_classes(classes, tolerance);
  return report;
}

}  // namespace mfgsel
