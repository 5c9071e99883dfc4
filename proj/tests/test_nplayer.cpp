#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "mfgsel/decoupling_field.hpp"
#include "mfgsel/nplayer_sim.hpp"
#include "mfgsel/rng.hpp"

using namespace mfgsel;

namespace {

const CoefficientTable& fine_table() {
  static const CoefficientTable tab = [] {
    ModelParams p;
    return build_coefficients(p, TimeGrid::uniform(1.0, 1e-3, 0.5));
  }();
  return tab;
}

// coarse grid keeps the Picard cases cheap
const CoefficientTable& coarse_table() {
  static const CoefficientTable tab = [] {
    ModelParams p;
    return build_coefficients(p, TimeGrid::uniform(1.0, 1e-2, 0.5));
  }();
  return tab;
}

}  // namespace

TEST_CASE("leave-one-out mean") {
  const std::vector<double> states{1.0, 2.0, 3.0, 4.0};
  CHECK(leave_one_out_mean(states, 0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(leave_one_out_mean(states, 3) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(leave_one_out_mean({1.0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(leave_one_out_mean(states, 4), std::invalid_argument);
}

TEST_CASE("pooled increments replay the per-player streams exactly") {
  const std::size_t n_players = 3, steps = 5;
  const std::uint64_t seed = 11, run = 2;
  const std::vector<double> pooled =
      pooled_increments(n_players, steps, seed, run);
  REQUIRE(pooled.size() == steps);

  std::vector<double> manual(steps, 0.0);
  for (std::size_t i = 0; i < n_players; ++i) {
    NormalStream stream(seed,
                        stream_id(StreamKind::nplayer_particle, run, i));
    for (std::size_t n = 0; n < steps; ++n) manual[n] += stream.next();
  }
  for (double& m : manual) m *= 1.0 / std::sqrt(3.0);
  for (std::size_t n = 0; n < steps; ++n) CHECK(pooled[n] == manual[n]);
}

TEST_CASE("pooled sum is permutation-insensitive up to rounding") {
  const std::vector<double> id_order =
      pooled_increments(5, 50, 77, 0, {0, 1, 2, 3, 4});
  const std::vector<double> shuffled =
      pooled_increments(5, 50, 77, 0, {4, 2, 0, 1, 3});
  for (std::size_t n = 0; n < 50; ++n)
    CHECK(std::abs(id_order[n] - shuffled[n]) <= 1e-12);

  CHECK_THROWS_AS(pooled_increments(5, 10, 77, 0, {0, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(pooled_increments(5, 10, 77, 0, {0, 1, 2, 3, 3}),
                  std::invalid_argument);
}

TEST_CASE("aggregate run equals the mean-path scheme on pooled noise") {
  const CoefficientTable& tab = fine_table();
  ModelParams params;  // sigma = 1
  const std::size_t N = 400;
  const AggregatePath agg = simulate_aggregate(N, params, tab, 31, 6);
  CHECK(agg.n_players == N);
  CHECK(agg.sigma0_effective == doctest::Approx(0.05).epsilon(1e-15));

  const ViscousField field(borrow_table(tab), agg.sigma0_effective,
                           make_terminal(TerminalCondition{tab.r_delta()}));
  const SdePath replay = euler_mean_path(
      field, agg.sigma0_effective, tab,
      pooled_increments(N, tab.grid().steps(), 31, 6), params.xi);
  REQUIRE(agg.path.values.size() == replay.values.size());
  for (std::size_t n = 0; n < replay.values.size(); ++n)
    CHECK(agg.path.values[n] == replay.values[n]);
}

TEST_CASE("population sizes that push the noise below the floor are rejected") {
  ModelParams params;
  CHECK_THROWS_AS(simulate_aggregate(1, params, fine_table(), 1, 0),
                  std::invalid_argument);
  try {
    simulate_aggregate(2600, params, fine_table(), 1, 0);
    FAIL("expected rejection at N = 2600");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("below the field floor") != std::string::npos);
    CHECK(msg.find("largest admissible N") != std::string::npos);
  }
  CHECK_NOTHROW(simulate_aggregate(2500, params, fine_table(), 1, 0));
}

TEST_CASE("exact solver: convergence, bounds, and basis bookkeeping") {
  ModelParams params;
  const CoefficientTable& tab = coarse_table();

  const ParticleSolution sol = solve_exact_picard(16, params, tab, 123, 0);
  CHECK(sol.n_players == 16);
  CHECK(sol.sigma0_effective == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(sol.converged);
  CHECK(sol.iterations >= 2);
  CHECK(sol.final_delta < 1e-3);
  CHECK_FALSE(sol.degree_fallback);
  CHECK(sol.basis_degree_used == 3);
  REQUIRE(sol.mean_rescaled.size() == tab.grid().nodes.size());
  REQUIRE(sol.value_mean.size() == tab.grid().nodes.size());
  REQUIRE(sol.terminal_states.size() == 16);
  for (double v : sol.value_mean) CHECK(std::abs(v) <= 1.0 + 1e-12);
  for (double m : sol.mean_rescaled) CHECK(std::isfinite(m));
  // N^-1/4 exceeds the smoothing cap for every admissible N, so the cap binds
  CHECK(sol.gamma_smoothing ==
        doctest::Approx(0.45 * tab.r_delta()).epsilon(1e-14));
  CHECK(std::isfinite(sol.diag_slack));
  CHECK(sol.diag_slack >= 0.0);
}

TEST_CASE("exact solver falls back to a smaller basis when N is tiny") {
  ModelParams params;
  const ParticleSolution sol = solve_exact_picard(8, params, coarse_table(), 5, 1);
  CHECK(sol.degree_fallback);
  CHECK(sol.basis_degree_used == 2);  // 6 monomials fit into 8 samples
  CHECK(sol.converged);
}

TEST_CASE("exact solver rejects out-of-range populations and configs") {
  ModelParams params;
  CHECK_THROWS_AS(solve_exact_picard(1, params, coarse_table(), 1, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_exact_picard(257, params, coarse_table(), 1, 0),
                  std::invalid_argument);
  PicardConfig bad;
  bad.damping = 0.0;
  CHECK_THROWS_AS(solve_exact_picard(16, params, coarse_table(), 1, 0, bad),
                  std::invalid_argument);
}

TEST_CASE("noise flip mirrors the exact population mean") {
  ModelParams params;
  PicardConfig cfg;
  const ParticleSolution plus =
      solve_exact_picard(32, params, coarse_table(), 123, 0, cfg);
  cfg.flip_noise = true;
  const ParticleSolution minus =
      solve_exact_picard(32, params, coarse_table(), 123, 0, cfg);
  REQUIRE(plus.mean_rescaled.size() == minus.mean_rescaled.size());
  double worst = 0.0;
  for (std::size_t n = 0; n < plus.mean_rescaled.size(); ++n)
    worst = std::max(worst,
                     std::abs(plus.mean_rescaled[n] + minus.mean_rescaled[n]));
  CHECK(worst <= 1e-8);
}

TEST_CASE("sup gap against the matching aggregate run") {
  ModelParams params;
  const CoefficientTable& tab = coarse_table();
  const AggregatePath agg = simulate_aggregate(64, params, tab, 123, 0);
  const ParticleSolution sol = solve_exact_picard(64, params, tab, 123, 0);
  const double gap = sup_gap(sol, agg);
  double manual = 0.0;
  for (std::size_t n = 0; n < agg.path.values.size(); ++n)
    manual = std::max(manual, std::abs(sol.mean_rescaled[n] -
                                       agg.path.values[n]));
  CHECK(gap == manual);
  CHECK(gap < 1.0);  // same noise, same clock: the two means stay close

  const AggregatePath fine = simulate_aggregate(64, params, fine_table(), 1, 0);
  CHECK_THROWS_AS(sup_gap(sol, fine), std::invalid_argument);
}

TEST_CASE("report rows carry the exact-mode columns only when asked") {
  ModelParams params;
  const CoefficientTable& tab = coarse_table();
  const PicardConfig cfg;

  const NPlayerReport plain =
      nplayer_report(32, 5, params, tab, 0.15, 99, false, cfg, 0);
  REQUIRE(plain.runs.size() == 5);
  CHECK(plain.selection.n_paths == 5);
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(plain.runs[r].run_id == r);
    CHECK(plain.runs[r].picard_iters == -1);
    CHECK(std::isnan(plain.runs[r].sup_gap_vs_aggregate));
    CHECK(std::isfinite(plain.runs[r].terminal_mean));
  }
  CHECK(plain.selection.n_plus + plain.selection.n_minus +
            plain.selection.n_unclassified ==
        5);

  const NPlayerReport exact =
      nplayer_report(32, 2, params, tab, 0.15, 99, true, cfg, 0);
  for (const NPlayerRunRow& row : exact.runs) {
    CHECK(row.picard_iters >= 1);
    CHECK(std::isfinite(row.sup_gap_vs_aggregate));
    CHECK(row.converged);
  }

  // rerunning is deterministic
  const NPlayerReport again =
      nplayer_report(32, 5, params, tab, 0.15, 99, false, cfg, 0);
  for (std::size_t r = 0; r < 5; ++r)
    CHECK(plain.runs[r].terminal_mean == again.runs[r].terminal_mean);
}
