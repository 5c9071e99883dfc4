// Command-line front end: coefficient tables, field lattices, selection
// ensembles, finite-population runs, cost checks, and the acceptance gate.
// Exit codes: 0 success, 1 numeric failure, 2 invalid configuration.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "mfgsel/acceptance.hpp"
#include "mfgsel/experiment.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;
  std::optional<double> kappa, sigma, sigma0, horizon, delta, xi, dt;
  std::optional<std::size_t> paths, n_players, runs, mc_paths;
  std::optional<double> tube_tolerance, gamma_fraction, l_exponent;
  std::optional<bool> exact;
};

void add_common(CLI::App* sub, std::string& config_path, Overrides& ov) {
  sub->add_option("--config", config_path, "JSON configuration file");
  sub->add_option("--seed", ov.seed, "master seed");
  sub->add_option("--threads", ov.threads,
                  "worker threads (0 = MFG_SELECT_THREADS or hardware)");
  sub->add_option("--out", ov.out_dir, "output directory");
  sub->add_option("--kappa", ov.kappa, "mean-reversion rate");
  sub->add_option("--sigma", ov.sigma, "idiosyncratic noise level");
  sub->add_option("--sigma0", ov.sigma0, "common noise level");
  sub->add_option("--horizon", ov.horizon, "terminal time");
  sub->add_option("--delta", ov.delta, "plateau onset time");
  sub->add_option("--xi", ov.xi, "initial mean");
  sub->add_option("--dt", ov.dt, "time step");
}

mfgsel::ExperimentConfig build_config(const std::string& config_path,
                                      const Overrides& ov) {
  mfgsel::ExperimentConfig cfg =
      config_path.empty() ? mfgsel::ExperimentConfig{}
                          : mfgsel::config_from_json_file(config_path);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.threads) cfg.threads = *ov.threads;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  if (ov.kappa) cfg.model.kappa = *ov.kappa;
  if (ov.sigma) cfg.model.sigma = *ov.sigma;
  if (ov.sigma0) cfg.model.sigma0 = *ov.sigma0;
  if (ov.horizon) cfg.model.horizon = *ov.horizon;
  if (ov.delta) cfg.model.delta = *ov.delta;
  if (ov.xi) cfg.model.xi = *ov.xi;
  if (ov.dt) cfg.dt = *ov.dt;
  if (ov.paths) cfg.paths = *ov.paths;
  if (ov.n_players) cfg.n_players = *ov.n_players;
  if (ov.runs) cfg.runs = *ov.runs;
  if (ov.mc_paths) cfg.mc_paths = *ov.mc_paths;
  if (ov.tube_tolerance) cfg.tube_tolerance = *ov.tube_tolerance;
  if (ov.gamma_fraction) cfg.gamma_fraction = *ov.gamma_fraction;
  if (ov.l_exponent) cfg.l_exponent = *ov.l_exponent;
  if (ov.exact) cfg.exact = *ov.exact;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open output file " +
                             (dir / name).string());
  return out;
}

void emit_manifest(const mfgsel::ExperimentConfig& cfg,
                   const std::string& command) {
  std::ofstream out = open_out(cfg.out_dir, "manifest.json");
  mfgsel::write_manifest(cfg, command, out);
}

int run_verify(const mfgsel::ExperimentConfig& cfg) {
  const std::vector<mfgsel::CriterionResult> results =
      mfgsel::run_acceptance(cfg.threads, std::cout);
  nlohmann::ordered_json summary;
  summary["all_pass"] = mfgsel::all_passed(results);
  summary["criteria"] = nlohmann::ordered_json::array();
  for (const mfgsel::CriterionResult& r : results)
    summary["criteria"].push_back({{"id", r.id},
                                   {"name", r.name},
                                   {"pass", r.pass},
                                   {"detail", r.detail}});
  std::ofstream out = open_out(cfg.out_dir, "verify_summary.json");
  out << summary.dump(2) << '\n';
  emit_manifest(cfg, "verify");
  return mfgsel::all_passed(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equilibrium-selection lab for a linear-quadratic mean field "
               "game with vanishing common noise"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;

  CLI::App* coeffs =
      app.add_subcommand("coeffs", "tabulate eta, w, k, r on the time grid");
  add_common(coeffs, config_path, ov);

  CLI::App* field = app.add_subcommand(
      "field", "tabulate the viscous field, entropy profile, gap and bound");
  add_common(field, config_path, ov);

  CLI::App* sim_mfg = app.add_subcommand(
      "simulate-mfg", "conditional-mean ensemble with classification");
  add_common(sim_mfg, config_path, ov);
  sim_mfg->add_option("--paths", ov.paths, "ensemble size");
  sim_mfg->add_option("--tolerance", ov.tube_tolerance,
                      "classification tube half-width");
  sim_mfg->add_option("--gamma-fraction", ov.gamma_fraction,
                      "escape envelope rate as a fraction of the ceiling");
  sim_mfg->add_option("--l-exponent", ov.l_exponent,
                      "exponent of |ln sigma0| in the threshold scale");

  CLI::App* sim_np = app.add_subcommand(
      "simulate-nplayer", "finite-population runs (aggregate or exact)");
  add_common(sim_np, config_path, ov);
  sim_np->add_option("--n-players", ov.n_players, "population size");
  sim_np->add_option("--runs", ov.runs, "number of independent runs");
  sim_np->add_option("--tolerance", ov.tube_tolerance,
                     "classification tube half-width");
  sim_np->add_flag_callback("--exact", [&ov] { ov.exact = true; },
                            "solve the exact closed loop by Picard iteration");

  CLI::App* cost = app.add_subcommand(
      "cost", "closed-form and Monte Carlo equilibrium costs");
  add_common(cost, config_path, ov);
  cost->add_option("--mc-paths", ov.mc_paths, "Monte Carlo sample size");

  CLI::App* verify = app.add_subcommand(
      "verify", "run the ten acceptance criteria and report PASS/FAIL");
  add_common(verify, config_path, ov);
  std::string suite = "acceptance";
  verify->add_option("--suite", suite, "check suite to run")
      ->check(CLI::IsMember({"acceptance"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const mfgsel::ExperimentConfig cfg = build_config(config_path, ov);
    if (coeffs->parsed()) {
      std::ofstream out = open_out(cfg.out_dir, "coeffs.csv");
      mfgsel::run_coeffs(cfg, out);
      emit_manifest(cfg, "coeffs");
    } else if (field->parsed()) {
      std::ofstream out = open_out(cfg.out_dir, "field.csv");
      mfgsel::run_field(cfg, out);
      emit_manifest(cfg, "field");
    } else if (sim_mfg->parsed()) {
      std::ofstream out = open_out(cfg.out_dir, "mfg_paths.csv");
      mfgsel::run_simulate_mfg(cfg, out, std::cout);
      emit_manifest(cfg, "simulate-mfg");
    } else if (sim_np->parsed()) {
      std::ofstream out = open_out(cfg.out_dir, "nplayer_runs.csv");
      mfgsel::run_simulate_nplayer(cfg, out, std::cout);
      emit_manifest(cfg, "simulate-nplayer");
    } else if (cost->parsed()) {
      std::ofstream out = open_out(cfg.out_dir, "cost.csv");
      mfgsel::run_cost(cfg, out);
      emit_manifest(cfg, "cost");
    } else if (verify->parsed()) {
      return run_verify(cfg);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
