#include "mfgsel/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mfgsel/coefficients.hpp"
#include "mfgsel/cost_eval.hpp"
#include "mfgsel/decoupling_field.hpp"
#include "mfgsel/fields.hpp"
#include "mfgsel/mfg_sim.hpp"
#include "mfgsel/model.hpp"
#include "mfgsel/nplayer_sim.hpp"

namespace mfgsel {

namespace {

constexpr std::uint64_t master_seed = 12345;

struct Ctx {
  ModelParams params;  // sigma0 set per use
  CoefficientTable table;
  unsigned threads;

  explicit Ctx(unsigned threads_)
      : params{/*kappa=*/0.0, /*sigma=*/1.0, /*sigma0=*/0.1,
               /*horizon=*/1.0, /*delta=*/0.5, /*xi=*/0.0},
        table(build_coefficients(params,
                                 TimeGrid::uniform(1.0, 1e-3, 0.5))),
        threads(threads_) {}

  ViscousField make_field(double sigma0) const {
    return ViscousField(borrow_table(table), sigma0,
                        make_terminal(TerminalCondition{table.r_delta()}));
  }
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream ss;
  ss << std::setprecision(prec) << v;
  return ss.str();
}

// --- 1: the three admissible equilibria and their terminal consistency ----

CriterionResult criterion_equilibria(const Ctx& ctx) {
  CriterionResult res{1, "three-equilibria", true, ""};
  const TerminalCondition g{ctx.table.r_delta()};
  double worst = 0.0;
  for (double xi : {0.0, 0.05}) {
    const std::vector<double> labels = admissible_labels(xi, ctx.table);
    if (labels.size() != 3) {
      res.pass = false;
      res.detail = "expected 3 labels at xi=" + fmt(xi);
      return res;
    }
    const double mid_expected = xi / ctx.table.k_delta();
    if (std::abs(labels[1] - mid_expected) > 1e-9) {
      res.pass = false;
      res.detail = "middle label " + fmt(labels[1], 17) + " != xi/k_delta";
      return res;
    }
    for (double A : labels) {
      EquilibriumTriple eq;
      try {
        eq = equilibrium_path(A, xi, ctx.table);
      } catch (const std::exception& e) {
        res.pass = false;
        res.detail = std::string("equilibrium_path failed: ") + e.what();
        return res;
      }
      worst = std::max(worst, std::abs(g(eq.mu.back()) - A));
      for (std::size_t i = 0; i < eq.mu.size(); ++i)
        worst = std::max(worst,
                         std::abs(eq.mu[i] - (xi - A * ctx.table.k()[i])));
    }
  }
  res.pass = worst <= 1e-9;
  res.detail = "max residual " + fmt(worst, 3) + " (tol 1e-9)";
  return res;
}

// --- 2: cost ordering, canonical values, Monte Carlo agreement ------------

CriterionResult criterion_cost(const Ctx& ctx) {
  CriterionResult res{2, "cost-ordering", true, ""};
  const double j_minus = cost_closed_form(-1.0, ctx.params, ctx.table);
  const double j_zero = cost_closed_form(0.0, ctx.params, ctx.table);
  const double j_plus = cost_closed_form(1.0, ctx.params, ctx.table);
  const double j_zero_exact = 0.5;
  const double j_edge_exact = 0.5 + (1.0 + std::exp(-2.0)) / 4.0;
  std::ostringstream detail;
  detail << "J0=" << fmt(j_zero, 12) << " J+=" << fmt(j_plus, 12);
  if (!(j_zero < j_plus)) {
    res.pass = false;
    detail << " [ordering violated]";
  }
  if (j_plus != j_minus) {  // A enters squared: must match bitwise
    res.pass = false;
    detail << " [J+ != J- bitwise]";
  }
  if (std::abs(j_zero - j_zero_exact) > 1e-9 ||
      std::abs(j_plus - j_edge_exact) > 1e-9) {
    res.pass = false;
    detail << " [canonical values off: dJ0=" << fmt(j_zero - j_zero_exact, 3)
           << " dJ+=" << fmt(j_plus - j_edge_exact, 3) << "]";
  }
  for (double A : {-1.0, 0.0, 1.0}) {
    const MonteCarloCost mc = cost_monte_carlo(A, 100000, ctx.params,
                                               ctx.table, master_seed,
                                               ctx.threads);
    const double closed = cost_closed_form(A, ctx.params, ctx.table);
    const double gap = std::abs(mc.estimate - closed);
    if (gap > 3.0 * mc.standard_error) {
      res.pass = false;
      detail << " [MC off at A=" << fmt(A, 2) << ": gap " << fmt(gap, 3)
             << " > 3se " << fmt(3.0 * mc.standard_error, 3) << "]";
    }
  }
  res.detail = detail.str();
  return res;
}

// --- 3: field vs independent quadrature + PDE residual order --------------

CriterionResult criterion_field_accuracy(const Ctx& ctx) {
  CriterionResult res{3, "field-vs-oracle", true, ""};
  double worst = 0.0;
  for (double sigma0 : {0.5, 0.2, 0.1}) {
    const ViscousField field = ctx.make_field(sigma0);
    for (int it = 0; it < 21; ++it) {
      const double t = 0.95 * it / 20.0;
      for (int ix = 0; ix < 21; ++ix) {
        const double x = -0.6 + 1.2 * ix / 20.0;
        const double direct = field.value(t, x);
        const double oracle = quadrature_oracle(t, x, sigma0, ctx.table,
                                                field.terminal());
        worst = std::max(worst, std::abs(direct - oracle));
      }
    }
  }
  std::ostringstream detail;
  detail << "max |field-oracle| " << fmt(worst, 3) << " (tol 1e-8)";
  if (worst > 1e-8) res.pass = false;

  const ViscousField field = ctx.make_field(0.5);
  const double r1 = pde_residual(field, 0.3, 0.1, 1e-2, 1e-2).value;
  const double r2 = pde_residual(field, 0.3, 0.1, 5e-3, 5e-3).value;
  const double ratio = std::abs(r1) / std::abs(r2);
  detail << ", residual ratio " << fmt(ratio, 4) << " (want [2.5, 6])";
  if (!(ratio >= 2.5 && ratio <= 6.0)) res.pass = false;
  res.detail = detail.str();
  return res;
}

// --- 4: the psi majorant inside its validity region -----------------------

CriterionResult criterion_psi_bound(const Ctx& ctx) {
  CriterionResult res{4, "psi-bound", true, ""};
  double worst = -1e300;
  for (double sigma0 : {0.2, 0.1, 0.05}) {
    const ViscousField field = ctx.make_field(sigma0);
    for (int i = 1; i <= 9; ++i) {
      const double t = 0.05 * i;
      const double band = ctx.table.r_at(t) - ctx.table.r_delta();
      for (int jf = 1; jf <= 9; ++jf) {
        const double f = 0.1 * jf;
        for (double s : {1.0, -1.0}) {
          const double x = s * f * band;
          const double gap = std::abs(psi(field, t, x)) -
                             psi_bound(t, x, sigma0, ctx.table);
          worst = std::max(worst, gap);
        }
      }
    }
  }
  res.pass = worst <= 1e-6;
  res.detail = "max (|psi| - bound) " + fmt(worst, 3) + " (tol 1e-6)";
  return res;
}

// --- 5: smoothed-terminal L1 contraction ----------------------------------

CriterionResult criterion_l1(const Ctx& ctx) {
  CriterionResult res{5, "smoothing-l1", true, ""};
  const double gamma = 0.05;
  double worst_gap = 0.0, worst_min = 0.0;
  for (double sigma0 : {0.3, 0.1}) {
    for (double t : {0.0, 0.5, 0.9}) {
      const L1Comparison cmp =
          l1_comparison(borrow_table(ctx.table), sigma0, gamma, t);
      worst_gap = std::max(worst_gap, cmp.gap_integral - cmp.bound);
      worst_min = std::min(worst_min, cmp.min_pointwise);
    }
  }
  if (worst_gap > 1e-6 || worst_min < -1e-9) res.pass = false;
  res.detail = "max (l1 - bound) " + fmt(worst_gap, 3) +
               " (tol 1e-6), min pointwise " + fmt(worst_min, 3) +
               " (floor -1e-9)";
  return res;
}

// --- 6 and 7 share the three selection ensembles --------------------------

struct EnsembleStats {
  double sigma0;
  SelectionReport report;
  double frac_late;     // tau_eps > sqrt(sigma0)
  double se_late;
  double frac_violate;  // envelope violations among threshold hitters
  double se_violate;
  std::size_t hitters;
};

EnsembleStats ensemble_stats(const Ctx& ctx, double sigma0,
                             std::size_t n_paths) {
  const ViscousField field = ctx.make_field(sigma0);
  const std::vector<SdePath> ensemble =
      simulate_ensemble(field, sigma0, ctx.table, ctx.params.xi, n_paths,
                        master_seed, ctx.threads);
  const TransitionPoint tp = make_transition_point(sigma0);
  const double gamma = 0.5 * escape_rate_ceiling(ctx.table);
  EnsembleStats st;
  st.sigma0 = sigma0;
  st.report = selection_stats(ensemble, ctx.table, 0.15, tp);
  std::size_t late = 0, hitters = 0, violate = 0;
  for (const SdePath& path : ensemble) {
    const EscapeDiagnostics diag = tau_gamma_escape(path, ctx.table, tp, gamma);
    if (!diag.exit.hit || diag.exit.time > tp.t_tilde) ++late;
    if (diag.exit.hit && diag.exit.side > 0) {  // upper-threshold hitters only
      ++hitters;
      if (diag.violated) ++violate;
    }
  }
  const double n = static_cast<double>(n_paths);
  st.frac_late = static_cast<double>(late) / n;
  st.se_late = std::sqrt(st.frac_late * (1.0 - st.frac_late) / n);
  st.hitters = hitters;
  st.frac_violate =
      hitters ? static_cast<double>(violate) / static_cast<double>(hitters)
              : 0.0;
  st.se_violate =
      hitters ? std::sqrt(st.frac_violate * (1.0 - st.frac_violate) /
                          static_cast<double>(hitters))
              : 0.0;
  return st;
}

bool trend_non_increasing(double prev, double se_prev, double next,
                          double se_next) {
  return next <= prev + 3.0 * std::sqrt(se_prev * se_prev + se_next * se_next);
}

CriterionResult criterion_selection(const std::vector<EnsembleStats>& stats) {
  CriterionResult res{6, "limit-selection", true, ""};
  const EnsembleStats& fine = stats.back();  // sigma0 = 0.05
  std::ostringstream detail;
  detail << "frac_plus(0.05)=" << fmt(fine.report.frac_plus, 4)
         << " (want [0.46, 0.54]), unclassified="
         << fmt(fine.report.frac_unclassified, 4) << " (max 0.05)";
  if (!(fine.report.frac_plus >= 0.46 && fine.report.frac_plus <= 0.54))
    res.pass = false;
  if (fine.report.frac_unclassified > 0.05) res.pass = false;
  for (std::size_t i = 0; i + 1 < stats.size(); ++i) {
    if (!trend_non_increasing(stats[i].report.frac_unclassified,
                              stats[i].report.se_unclassified,
                              stats[i + 1].report.frac_unclassified,
                              stats[i + 1].report.se_unclassified)) {
      res.pass = false;
      detail << " [unclassified trend broken at sigma0="
             << fmt(stats[i + 1].sigma0, 3) << "]";
    }
  }
  res.detail = detail.str();
  return res;
}

CriterionResult criterion_transition(const std::vector<EnsembleStats>& stats) {
  CriterionResult res{7, "transition-window", true, ""};
  const EnsembleStats& fine = stats.back();
  std::ostringstream detail;
  detail << "P(tau_eps > sqrt(s0))=" << fmt(fine.frac_late, 4)
         << " (max 0.1), envelope violations=" << fmt(fine.frac_violate, 4)
         << " of " << fine.hitters << " hitters (max 0.05)";
  if (fine.frac_late > 0.1) res.pass = false;
  if (fine.frac_violate > 0.05) res.pass = false;
  for (std::size_t i = 0; i + 1 < stats.size(); ++i) {
    if (!trend_non_increasing(stats[i].frac_late, stats[i].se_late,
                              stats[i + 1].frac_late, stats[i + 1].se_late)) {
      res.pass = false;
      detail << " [late trend broken]";
    }
    if (!trend_non_increasing(stats[i].frac_violate, stats[i].se_violate,
                              stats[i + 1].frac_violate,
                              stats[i + 1].se_violate)) {
      res.pass = false;
      detail << " [violation trend broken]";
    }
  }
  res.detail = detail.str();
  return res;
}

// --- 8: finite-population selection ---------------------------------------

CriterionResult criterion_nplayer_selection(const Ctx& ctx) {
  CriterionResult res{8, "nplayer-selection", true, ""};
  const PicardConfig picard;
  std::vector<SelectionReport> reports;
  for (std::size_t n_players : {std::size_t{64}, std::size_t{256},
                                std::size_t{1024}}) {
    const NPlayerReport rep =
        nplayer_report(n_players, 500, ctx.params, ctx.table, 0.15,
                       master_seed, /*exact=*/false, picard, ctx.threads);
    reports.push_back(rep.selection);
  }
  const SelectionReport& big = reports.back();  // N = 1024
  std::ostringstream detail;
  detail << "frac_plus(N=1024)=" << fmt(big.frac_plus, 4)
         << " (want [0.43, 0.57]), unclassified="
         << fmt(big.frac_unclassified, 4) << " (max 0.1)";
  if (!(big.frac_plus >= 0.43 && big.frac_plus <= 0.57)) res.pass = false;
  if (big.frac_unclassified > 0.1) res.pass = false;
  for (std::size_t i = 0; i + 1 < reports.size(); ++i) {
    if (!trend_non_increasing(reports[i].frac_unclassified,
                              reports[i].se_unclassified,
                              reports[i + 1].frac_unclassified,
                              reports[i + 1].se_unclassified)) {
      res.pass = false;
      detail << " [unclassified trend broken]";
    }
  }
  res.detail = detail.str();
  return res;
}

// --- 9: exact system converges to the aggregate in N ----------------------

CriterionResult criterion_picard_gap(const Ctx& ctx) {
  CriterionResult res{9, "picard-gap", true, ""};
  const PicardConfig picard;
  const std::size_t runs = 20;
  std::vector<double> medians;
  std::size_t converged = 0, total = 0;
  std::ostringstream detail;
  detail << "median sup-gap:";
  for (std::size_t n_players : {std::size_t{8}, std::size_t{32},
                                std::size_t{128}}) {
    const NPlayerReport rep =
        nplayer_report(n_players, runs, ctx.params, ctx.table, 0.15,
                       master_seed, /*exact=*/true, picard, ctx.threads);
    std::vector<double> gaps;
    for (const NPlayerRunRow& row : rep.runs) {
      gaps.push_back(row.sup_gap_vs_aggregate);
      if (row.converged) ++converged;
      ++total;
    }
    std::sort(gaps.begin(), gaps.end());
    const double median =
        0.5 * (gaps[(runs - 1) / 2] + gaps[runs / 2]);
    medians.push_back(median);
    detail << " N=" << n_players << ": " << fmt(median, 4);
  }
  for (std::size_t i = 0; i + 1 < medians.size(); ++i)
    if (!(medians[i + 1] < medians[i])) {
      res.pass = false;
      detail << " [not strictly decreasing]";
    }
  const double conv_frac =
      static_cast<double>(converged) / static_cast<double>(total);
  detail << ", converged " << fmt(100.0 * conv_frac, 4) << "% (min 90%)";
  if (conv_frac < 0.9) res.pass = false;
  res.detail = detail.str();
  return res;
}

// --- 10: symmetry, monotonicity, range, determinism -----------------------

CriterionResult criterion_symmetry(const Ctx& ctx) {
  CriterionResult res{10, "symmetry-suite", true, ""};
  std::ostringstream detail;

  {  // sign flip of the driving noise negates the mean path bit-exactly
    const ViscousField field = ctx.make_field(0.1);
    const SdePath base =
        simulate_mu(field, 0.1, ctx.table, 0.0, master_seed, 7);
    std::vector<double> flipped = base.normals;
    for (double& z : flipped) z = -z;
    const SdePath mirror =
        euler_mean_path(field, 0.1, ctx.table, std::move(flipped), 0.0);
    for (std::size_t i = 0; i < base.values.size(); ++i)
      if (mirror.values[i] != -base.values[i]) {
        res.pass = false;
        detail << " [mfg flip not exact at node " << i << "]";
        break;
      }
  }
  {  // same for the pooled aggregate
    std::vector<double> inc =
        pooled_increments(64, ctx.table.grid().steps(), master_seed, 3);
    const double s0 = ctx.params.sigma / 8.0;
    const ViscousField field = ctx.make_field(s0);
    const SdePath base = euler_mean_path(field, s0, ctx.table, inc, 0.0);
    for (double& z : inc) z = -z;
    const SdePath mirror =
        euler_mean_path(field, s0, ctx.table, std::move(inc), 0.0);
    for (std::size_t i = 0; i < base.values.size(); ++i)
      if (mirror.values[i] != -base.values[i]) {
        res.pass = false;
        detail << " [aggregate flip not exact]";
        break;
      }
  }
  {  // field oddness (exact), monotonicity, range
    double worst_mono = 0.0, worst_range = 0.0;
    bool odd_exact = true;
    for (double sigma0 : {0.5, 0.1, 0.05}) {
      const ViscousField field = ctx.make_field(sigma0);
      for (int it = 0; it <= 10; ++it) {
        const double t = 0.099 * it;  // up to 0.99
        double prev = 0.0;
        for (int ix = 0; ix <= 40; ++ix) {
          const double x = -0.8 + 0.04 * ix;
          const double v = field.value(t, x);
          if (field.value(t, -x) != -v) odd_exact = false;
          worst_range = std::max(worst_range, std::abs(v) - 1.0);
          if (ix > 0) worst_mono = std::max(worst_mono, v - prev);
          prev = v;
        }
      }
    }
    if (!odd_exact) {
      res.pass = false;
      detail << " [field oddness not exact]";
    }
    if (worst_mono > 1e-10) {
      res.pass = false;
      detail << " [monotonicity violated by " << fmt(worst_mono, 3) << "]";
    }
    if (worst_range > 1e-12) {
      res.pass = false;
      detail << " [range exceeded by " << fmt(worst_range, 3) << "]";
    }
  }
  {  // determinism of a small ensemble across repeat runs
    const ViscousField field = ctx.make_field(0.1);
    const std::vector<SdePath> a = simulate_ensemble(
        field, 0.1, ctx.table, 0.0, 50, master_seed, ctx.threads);
    const std::vector<SdePath> b = simulate_ensemble(
        field, 0.1, ctx.table, 0.0, 50, master_seed, ctx.threads);
    for (std::size_t p = 0; p < a.size(); ++p)
      if (a[p].values != b[p].values) {
        res.pass = false;
        detail << " [ensemble rerun not bit-identical]";
        break;
      }
  }
  {  // Picard flip antisymmetry (regression in the loop: small tolerance)
    PicardConfig cfg;
    const ParticleSolution plus =
        solve_exact_picard(32, ctx.params, ctx.table, master_seed, 0, cfg);
    cfg.flip_noise = true;
    const ParticleSolution minus =
        solve_exact_picard(32, ctx.params, ctx.table, master_seed, 0, cfg);
    double worst = 0.0;
    for (std::size_t n = 0; n < plus.mean_rescaled.size(); ++n)
      worst = std::max(worst, std::abs(plus.mean_rescaled[n] +
                                       minus.mean_rescaled[n]));
    detail << " picard flip asymmetry " << fmt(worst, 3) << " (tol 1e-10)";
    if (worst > 1e-10) res.pass = false;
  }
  res.detail = "all exact-symmetry and range checks" + detail.str();
  return res;
}

}  // namespace

bool all_passed(const std::vector<CriterionResult>& results) {
  for (const CriterionResult& r : results)
    if (!r.pass) return false;
  return true;
}

std::vector<CriterionResult> run_acceptance(unsigned threads,
                                            std::ostream& out) {
  Ctx ctx(threads);
  std::vector<CriterionResult> results;
  auto emit = [&](CriterionResult res) {
    out << '[' << std::setw(2) << res.id << "/10] "
        << (res.pass ? "PASS" : "FAIL") << ' ' << res.name << " — "
        << res.detail << std::endl;
    results.push_back(std::move(res));
  };
  emit(criterion_equilibria(ctx));
  emit(criterion_cost(ctx));
  emit(criterion_field_accuracy(ctx));
  emit(criterion_psi_bound(ctx));
  emit(criterion_l1(ctx));
  std::vector<EnsembleStats> stats;
  for (double sigma0 : {0.2, 0.1, 0.05})
    stats.push_back(ensemble_stats(ctx, sigma0, 2000));
  emit(criterion_selection(stats));
  emit(criterion_transition(stats));
  emit(criterion_nplayer_selection(ctx));
  emit(criterion_picard_gap(ctx));
  emit(criterion_symmetry(ctx));
  return results;
}

}  // namespace mfgsel
