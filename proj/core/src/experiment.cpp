#include "mfgsel/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mfgsel/coefficients.hpp"
#include "mfgsel/cost_eval.hpp"
#include "mfgsel/decoupling_field.hpp"
#include "mfgsel/mfg_sim.hpp"
#include "mfgsel/version.hpp"

namespace mfgsel {

namespace {

using ordered_json = nlohmann::ordered_json;

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() +
                                  "' in " + scope);
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  reject_unknown(j, {"model", "dt", "seed", "threads", "paths",
                     "tube_tolerance", "l_exponent", "gamma_fraction",
                     "n_players", "runs", "exact", "picard", "mc_paths",
                     "field_grid", "out_dir"},
                 "top level");
  if (auto it = j.find("model"); it != j.end()) {
    const auto& m = *it;
    reject_unknown(m, {"kappa", "sigma", "sigma0", "horizon", "delta", "xi"},
                   "model");
    read_key(m, "kappa", cfg.model.kappa);
    read_key(m, "sigma", cfg.model.sigma);
    read_key(m, "sigma0", cfg.model.sigma0);
    read_key(m, "horizon", cfg.model.horizon);
    read_key(m, "delta", cfg.model.delta);
    read_key(m, "xi", cfg.model.xi);
  }
  read_key(j, "dt", cfg.dt);
  read_key(j, "seed", cfg.seed);
  read_key(j, "threads", cfg.threads);
  read_key(j, "paths", cfg.paths);
  read_key(j, "tube_tolerance", cfg.tube_tolerance);
  read_key(j, "l_exponent", cfg.l_exponent);
  read_key(j, "gamma_fraction", cfg.gamma_fraction);
  read_key(j, "n_players", cfg.n_players);
  read_key(j, "runs", cfg.runs);
  read_key(j, "exact", cfg.exact);
  if (auto it = j.find("picard"); it != j.end()) {
    const auto& p = *it;
    reject_unknown(p, {"max_iterations", "damping", "basis_degree",
                       "tolerance", "flip_noise"},
                   "picard");
    read_key(p, "max_iterations", cfg.picard.max_iterations);
    read_key(p, "damping", cfg.picard.damping);
    read_key(p, "basis_degree", cfg.picard.basis_degree);
    read_key(p, "tolerance", cfg.picard.tolerance);
    read_key(p, "flip_noise", cfg.picard.flip_noise);
  }
  read_key(j, "mc_paths", cfg.mc_paths);
  if (auto it = j.find("field_grid"); it != j.end()) {
    const auto& f = *it;
    reject_unknown(f, {"t_min", "t_max", "t_count", "x_min", "x_max",
                       "x_count"},
                   "field_grid");
    read_key(f, "t_min", cfg.field_grid.t_min);
    read_key(f, "t_max", cfg.field_grid.t_max);
    read_key(f, "t_count", cfg.field_grid.t_count);
    read_key(f, "x_min", cfg.field_grid.x_min);
    read_key(f, "x_max", cfg.field_grid.x_max);
    read_key(f, "x_count", cfg.field_grid.x_count);
  }
  read_key(j, "out_dir", cfg.out_dir);
  cfg.validate();
  return cfg;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[19] = "0x";
  static const char digits[] = "0123456789abcdef";
  for (int i = 0; i < 16; ++i)
    buf[2 + i] = digits[(v >> (60 - 4 * i)) & 0xF];
  return std::string(buf, 18);
}

const char* class_name(int cls) {
  if (cls > 0) return "plus";
  if (cls < 0) return "minus";
  return "none";
}

}  // namespace

void ExperimentConfig::validate() const {
  model.validate();
  if (!(dt > 0.0) || dt > model.horizon)
    throw std::invalid_argument("config: dt must lie in (0, horizon]");
  if (paths == 0) throw std::invalid_argument("config: paths must be positive");
  if (!(tube_tolerance > 0.0))
    throw std::invalid_argument("config: tube_tolerance must be positive");
  if (!(l_exponent > 0.0) || l_exponent > 1.0)
    throw std::invalid_argument("config: l_exponent must lie in (0, 1]");
  if (!(gamma_fraction > 0.0) || gamma_fraction >= 1.0)
    throw std::invalid_argument("config: gamma_fraction must lie in (0, 1)");
  if (n_players < 2)
    throw std::invalid_argument("config: n_players must be at least 2");
  if (runs == 0) throw std::invalid_argument("config: runs must be positive");
  if (mc_paths < 2)
    throw std::invalid_argument("config: mc_paths must be at least 2");
  if (field_grid.t_count == 0 || field_grid.x_count == 0)
    throw std::invalid_argument("config: field grid counts must be positive");
  if (field_grid.t_min < 0.0 || field_grid.t_max > model.horizon ||
      field_grid.t_min > field_grid.t_max)
    throw std::invalid_argument("config: field grid times out of range");
  if (field_grid.x_min > field_grid.x_max)
    throw std::invalid_argument("config: field grid x range inverted");
}

TimeGrid ExperimentConfig::make_grid() const {
  return TimeGrid::uniform(model.horizon, dt, model.delta);
}

ExperimentConfig config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") +
                                e.what());
  }
  if (!j.is_object())
    throw std::invalid_argument("config: top level must be a JSON object");
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: bad value type: ") +
                                e.what());
  }
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["model"] = {{"kappa", cfg.model.kappa},   {"sigma", cfg.model.sigma},
                {"sigma0", cfg.model.sigma0}, {"horizon", cfg.model.horizon},
                {"delta", cfg.model.delta},   {"xi", cfg.model.xi}};
  j["dt"] = cfg.dt;
  j["seed"] = cfg.seed;
  j["paths"] = cfg.paths;
  j["tube_tolerance"] = cfg.tube_tolerance;
  j["l_exponent"] = cfg.l_exponent;
  j["gamma_fraction"] = cfg.gamma_fraction;
  j["n_players"] = cfg.n_players;
  j["runs"] = cfg.runs;
  j["exact"] = cfg.exact;
  j["picard"] = {{"max_iterations", cfg.picard.max_iterations},
                 {"damping", cfg.picard.damping},
                 {"basis_degree", cfg.picard.basis_degree},
                 {"tolerance", cfg.picard.tolerance},
                 {"flip_noise", cfg.picard.flip_noise}};
  j["mc_paths"] = cfg.mc_paths;
  j["field_grid"] = {{"t_min", cfg.field_grid.t_min},
                     {"t_max", cfg.field_grid.t_max},
                     {"t_count", cfg.field_grid.t_count},
                     {"x_min", cfg.field_grid.x_min},
                     {"x_max", cfg.field_grid.x_max},
                     {"x_count", cfg.field_grid.x_count}};
  return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  return fnv1a(config_to_json(cfg));
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    std::ostream& out) {
  ordered_json j;
  j["library_version"] = library_version;
  j["command"] = command;
  j["config_hash"] = hex64(config_hash(cfg));
  j["config"] = ordered_json::parse(config_to_json(cfg));
  out << j.dump(2) << '\n';
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void run_coeffs(const ExperimentConfig& cfg, std::ostream& csv) {
  const CoefficientTable table = build_coefficients(cfg.model, cfg.make_grid());
  table.write_csv(csv);
}

void run_field(const ExperimentConfig& cfg, std::ostream& csv) {
  const CoefficientTable table = build_coefficients(cfg.model, cfg.make_grid());
  const ViscousField field(borrow_table(table), cfg.model.sigma0,
                           make_terminal(TerminalCondition{table.r_delta()}));
  const FieldGrid& fg = cfg.field_grid;
  csv << "t,x,theta_sigma,theta,psi,bound\n";
  for (std::size_t it = 0; it < fg.t_count; ++it) {
    const double t =
        fg.t_count == 1
            ? fg.t_min
            : fg.t_min + (fg.t_max - fg.t_min) * static_cast<double>(it) /
                             static_cast<double>(fg.t_count - 1);
    for (std::size_t ix = 0; ix < fg.x_count; ++ix) {
      const double x =
          fg.x_count == 1
              ? fg.x_min
              : fg.x_min + (fg.x_max - fg.x_min) * static_cast<double>(ix) /
                               static_cast<double>(fg.x_count - 1);
      const double theta_sigma = field.value(t, x);
      const double theta = entropy_eval(t, x, table);
      const double band = table.r_at(t) - table.r_delta();
      const bool in_domain =
          t < table.delta() && std::abs(x) > 0.0 && std::abs(x) < band;
      const double bound =
          in_domain ? psi_bound(t, x, cfg.model.sigma0, table)
                    : std::numeric_limits<double>::quiet_NaN();
      csv << format_double(t) << ',' << format_double(x) << ','
          << format_double(theta_sigma) << ',' << format_double(theta) << ','
          << format_double(theta_sigma - theta) << ',' << format_double(bound)
          << '\n';
    }
  }
}

void run_simulate_mfg(const ExperimentConfig& cfg, std::ostream& csv,
                      std::ostream& log) {
  const CoefficientTable table = build_coefficients(cfg.model, cfg.make_grid());
  std::unique_ptr<SpaceTimeField> field;
  if (cfg.model.sigma0 == 0.0)
    field = std::make_unique<EntropyField>(borrow_table(table));
  else
    field = std::make_unique<ViscousField>(
        borrow_table(table), cfg.model.sigma0,
        make_terminal(TerminalCondition{table.r_delta()}));
  const std::vector<SdePath> ensemble =
      simulate_ensemble(*field, cfg.model.sigma0, table, cfg.model.xi,
                        cfg.paths, cfg.seed, cfg.threads);
  const double gamma = cfg.gamma_fraction * escape_rate_ceiling(table);
  std::optional<TransitionPoint> transition;
  if (cfg.model.sigma0 > 0.0 && cfg.model.sigma0 < 1.0)
    transition = make_transition_point(cfg.model.sigma0, cfg.l_exponent);

  csv << "path_id,terminal,class,tau_eps,tau_escape\n";
  for (std::size_t p = 0; p < ensemble.size(); ++p) {
    const SdePath& path = ensemble[p];
    const int cls = classify_path(path.values, table, cfg.tube_tolerance);
    double tau_eps = std::numeric_limits<double>::quiet_NaN();
    double tau_escape = std::numeric_limits<double>::quiet_NaN();
    if (transition) {
      const EscapeDiagnostics diag =
          tau_gamma_escape(path, table, *transition, gamma);
      tau_eps = diag.exit.hit ? diag.exit.time : table.horizon();
      tau_escape = diag.tau_escape;
    }
    csv << p << ',' << format_double(path.values.back()) << ','
        << class_name(cls) << ',' << format_double(tau_eps) << ','
        << format_double(tau_escape) << '\n';
  }
  const SelectionReport rep =
      selection_stats(ensemble, table, cfg.tube_tolerance, transition);
  log << "# paths " << rep.n_paths << "\n# frac_plus "
      << format_double(rep.frac_plus) << " (se "
      << format_double(rep.se_plus) << ")\n# frac_minus "
      << format_double(rep.frac_minus) << "\n# frac_unclassified "
      << format_double(rep.frac_unclassified) << " (se "
      << format_double(rep.se_unclassified) << ")\n";
  if (!rep.hitting_quantiles.empty()) {
    log << "# tau_eps quantiles (p25 p50 p75 p90)";
    for (double q : rep.hitting_quantiles) log << ' ' << format_double(q);
    log << '\n';
  }
}

void run_simulate_nplayer(const ExperimentConfig& cfg, std::ostream& csv,
                          std::ostream& log) {
  const CoefficientTable table = build_coefficients(cfg.model, cfg.make_grid());
  const NPlayerReport report =
      nplayer_report(cfg.n_players, cfg.runs, cfg.model, table,
                     cfg.tube_tolerance, cfg.seed, cfg.exact, cfg.picard,
                     cfg.threads);
  csv << "run_id,terminal_mean,class,picard_iters,converged,"
         "sup_gap_vs_aggregate\n";
  for (const NPlayerRunRow& row : report.runs) {
    csv << row.run_id << ',' << format_double(row.terminal_mean) << ','
        << class_name(row.cls) << ',';
    if (cfg.exact)
      csv << row.picard_iters << ',' << (row.converged ? 1 : 0) << ','
          << format_double(row.sup_gap_vs_aggregate);
    else
      csv << ",,";  // Picard columns only apply to --exact runs
    csv << '\n';
  }
  const SelectionReport& rep = report.selection;
  log << "# runs " << rep.n_paths << "\n# frac_plus "
      << format_double(rep.frac_plus) << " (se "
      << format_double(rep.se_plus) << ")\n# frac_minus "
      << format_double(rep.frac_minus) << "\n# frac_unclassified "
      << format_double(rep.frac_unclassified) << '\n';
}

void run_cost(const ExperimentConfig& cfg, std::ostream& csv) {
  const CoefficientTable table = build_coefficients(cfg.model, cfg.make_grid());
  const std::vector<CostRow> rows = cost_table(
      {-1.0, 0.0, 1.0}, cfg.mc_paths, cfg.model, table, cfg.seed, cfg.threads);
  csv << "A,J_closed,J_mc,se\n";
  for (const CostRow& row : rows)
    csv << format_double(row.A) << ',' << format_double(row.closed_form) << ','
        << format_double(row.mc_estimate) << ',' << format_double(row.mc_se)
        << '\n';
}

}  // namespace mfgsel
