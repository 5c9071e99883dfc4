#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "mfgsel/coefficients.hpp"
#include "mfgsel/mfg_sim.hpp"
#include "mfgsel/model.hpp"

namespace mfgsel {

// Leave-one-out mean over a cross-section of at least two states.
double leave_one_out_mean(const std::vector<double>& states, std::size_t i);

// Pooled Brownian increments (1/sqrt(N)) sum_i xi_i, one entry per time step.
// Each player draws from the Philox stream (nplayer_particle, run_index, i);
// `order` optionally permutes the summation order (identity when empty) so
// tests can measure the reduction-order sensitivity of the pooled sum.
std::vector<double> pooled_increments(std::size_t n_players, std::size_t steps,
                                      std::uint64_t seed,
                                      std::uint64_t run_index,
                                      const std::vector<std::uint32_t>& order = {});

struct AggregatePath {
  SdePath path;  // rescaled population mean at the nodes + pooled normals
  std::size_t n_players = 0;
  double sigma0_effective = 0.0;
};

// McKean-Vlasov limit dynamics driven by the pooled noise of n_players
// idiosyncratic Brownian motions: runs the conditional-mean Euler scheme with
// sigma0 = sigma / sqrt(N) and the ramp-terminal viscous field at that level.
// Requires sigma / sqrt(N) >= min_sigma0_for_field.
AggregatePath simulate_aggregate(std::size_t n_players,
                                 const ModelParams& params,
                                 const CoefficientTable& table,
                                 std::uint64_t seed, std::uint64_t run_index);

struct PicardConfig {
  int max_iterations = 30;
  double damping = 0.5;     // on the regression coefficient updates
  int basis_degree = 3;     // total degree of the 2-d monomial basis
  double tolerance = 1e-3;  // sup-norm of the value update on the cloud
  bool flip_noise = false;  // negate every increment (symmetry diagnostics)
};

struct ParticleSolution {
  std::size_t n_players = 0;
  double sigma0_effective = 0.0;
  std::vector<double> mean_rescaled;  // cross-sectional mean of x-tilde
  std::vector<double> value_mean;     // cross-sectional mean of v-tilde
  std::vector<double> terminal_states;
  bool converged = false;
  int iterations = 0;
  bool degree_fallback = false;
  int basis_degree_used = 0;
  double final_delta = std::numeric_limits<double>::infinity();
  // max_t (v^N_t - theta~(t, mean))_+ against the smoothed viscous field with
  // gamma_N = min(N^-1/4, 0.45 r_delta); NaN when sigma0_effective is below
  // the field floor.
  double diag_slack = std::numeric_limits<double>::quiet_NaN();
  double gamma_smoothing = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;
};

// Exact N-player closed loop by Picard iteration in the rescaled variables
//   d x~_i = -w^-2 v_i dt + sigma w^-1 dB_i,   v_i in [-1, 1],
//   v_i(T) = g(leave-one-out mean at T),
// with v approximated per time node by least squares of the terminal targets
// on standardized monomials of (x~_i, m_i).  Player i's stream matches the
// one pooled by simulate_aggregate, so gaps can be measured under common
// random numbers.  n_players is capped at 256 (cost grows quadratically).
ParticleSolution solve_exact_picard(std::size_t n_players,
                                    const ModelParams& params,
                                    const CoefficientTable& table,
                                    std::uint64_t seed,
                                    std::uint64_t run_index,
                                    const PicardConfig& cfg = {});

// sup_t |exact mean - aggregate mean| on the shared grid.
double sup_gap(const ParticleSolution& solution,
               const AggregatePath& aggregate);

struct NPlayerRunRow {
  std::uint64_t run_id = 0;
  double terminal_mean = 0.0;
  int cls = 0;  // +1 / -1 / 0 against the +-k tube
  int picard_iters = -1;
  bool converged = false;
  double sup_gap_vs_aggregate = std::numeric_limits<double>::quiet_NaN();
  double diag_slack = std::numeric_limits<double>::quiet_NaN();
};

struct NPlayerReport {
  SelectionReport selection;
  std::vector<NPlayerRunRow> runs;
};

// Repeated aggregate runs (run_index = 0..n_runs-1) classified against the
// +-k tube; with `exact` set the Picard system is solved on the same streams
// and classification switches to the exact mean path.
NPlayerReport nplayer_report(std::size_t n_players, std::size_t n_runs,
                             const ModelParams& params,
                             const CoefficientTable& table, double tolerance,
                             std::uint64_t seed, bool exact,
                             const PicardConfig& cfg, unsigned threads);

}  // namespace mfgsel
