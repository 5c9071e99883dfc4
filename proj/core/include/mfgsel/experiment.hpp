#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "mfgsel/model.hpp"
#include "mfgsel/nplayer_sim.hpp"

namespace mfgsel {

struct FieldGrid {
  double t_min = 0.0, t_max = 0.95;
  std::size_t t_count = 21;
  double x_min = -0.6, x_max = 0.6;
  std::size_t x_count = 21;
};

// Everything a run depends on.  `threads` and `out_dir` are execution
// details: they are excluded from the canonical serialization and hash
// because they cannot change any computed number.
struct ExperimentConfig {
  ModelParams model;
  double dt = 1e-3;
  std::uint64_t seed = 12345;
  unsigned threads = 0;  // 0 = resolve from MFG_SELECT_THREADS / hardware

  // conditional-mean ensembles
  std::size_t paths = 2000;
  double tube_tolerance = 0.15;
  double l_exponent = 1.0 / 9.0;
  double gamma_fraction = 0.5;  // escape rate as a fraction of the ceiling

  // finite population
  std::size_t n_players = 1024;
  std::size_t runs = 500;
  bool exact = false;
  PicardConfig picard;

  // cost Monte Carlo
  std::size_t mc_paths = 100000;

  // field tabulation lattice
  FieldGrid field_grid;

  std::string out_dir = ".";

  void validate() const;
  TimeGrid make_grid() const;
};

ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig config_from_json_file(const std::string& path);

// Canonical JSON (fixed key order, shortest round-trip numbers); equal
// configs serialize to equal bytes.
std::string config_to_json(const ExperimentConfig& cfg);

// FNV-1a (64-bit) over the canonical JSON.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// {"library_version", "command", "config_hash", "config"} as pretty JSON.
void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    std::ostream& out);

// Shortest round-trip decimal via std::to_chars; NaN prints as "nan".
std::string format_double(double v);

// CSV writers; summaries go to `log` as '#'-prefixed lines.
void run_coeffs(const ExperimentConfig& cfg, std::ostream& csv);
void run_field(const ExperimentConfig& cfg, std::ostream& csv);
void run_simulate_mfg(const ExperimentConfig& cfg, std::ostream& csv,
                      std::ostream& log);
void run_simulate_nplayer(const ExperimentConfig& cfg, std::ostream& csv,
                          std::ostream& log);
void run_cost(const ExperimentConfig& cfg, std::ostream& csv);

}  // namespace mfgsel
