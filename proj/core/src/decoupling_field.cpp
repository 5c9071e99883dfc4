#include "mfgsel/decoupling_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <gsl/gsl_integration.h>

#include "mfgsel/quadrature.hpp"
#include "mfgsel/special_functions.hpp"

namespace mfgsel {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
const double sqrt_pi = std::sqrt(std::numbers::pi);

// Exponent underflow cutoff: exp below this is exactly 0 in double.
constexpr double exp_floor = -745.0;

TerminalSpec assemble(std::vector<double> breaks,
                      std::vector<std::pair<double, double>> slope_value,
                      bool odd) {
  TerminalSpec spec;
  spec.odd = odd;
  const std::size_t m = slope_value.size();
  spec.pieces.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    auto& p = spec.pieces[j];
    p.lo = (j == 0) ? -inf : breaks[j - 1];
    p.hi = (j == m - 1) ? inf : breaks[j];
    p.slope = slope_value[j].first;
    p.value0 = slope_value[j].second;
    p.hA = -0.5 * p.slope;
    p.hB = -p.value0;
    p.hC = 0.0;
  }
  // Anchor H(0) = 0 on the piece containing the origin, then march the
  // continuity constant outward across the breakpoints.
  std::size_t j0 = 0;
  while (!(spec.pieces[j0].lo <= 0.0 && 0.0 < spec.pieces[j0].hi)) ++j0;
  auto H = [&](std::size_t j, double y) {
    const auto& p = spec.pieces[j];
    return p.hA * y * y + p.hB * y + p.hC;
  };
  for (std::size_t j = j0; j + 1 < m; ++j) {
    const double b = spec.pieces[j].hi;
    spec.pieces[j + 1].hC += H(j, b) - H(j + 1, b);
  }
  for (std::size_t j = j0; j-- > 0;) {
    const double b = spec.pieces[j].hi;
    spec.pieces[j].hC += H(j + 1, b) - H(j, b);
  }
  return spec;
}

}  // namespace

double TerminalSpec::value(double y) const {
  for (const auto& p : pieces)
    if (y <= p.hi) return p.value0 + p.slope * y;
  return pieces.back().value0 + pieces.back().slope * y;
}

double TerminalSpec::antiderivative(double y) const {
  for (const auto& p : pieces)
    if (y <= p.hi) return p.hA * y * y + p.hB * y + p.hC;
  const auto& p = pieces.back();
  return p.hA * y * y + p.hB * y + p.hC;
}

TerminalSpec make_terminal(const TerminalCondition& g) {
  const double rd = g.r_delta;
  if (!(rd > 0.0))
    throw std::invalid_argument("make_terminal: r_delta must be positive");
  return assemble({-rd, rd},
                  {{0.0, 1.0}, {-1.0 / rd, 0.0}, {0.0, -1.0}},
                  /*odd=*/true);
}

TerminalSpec make_terminal(const SmoothedTerminal& g) {
  const double rd = g.r_delta;
  const double ga = g.gamma;
  return assemble({-rd, rd - 2.0 * ga, rd - ga, rd + ga},
                  {{0.0, 1.0},
                   {-1.0 / rd, 0.0},
                   {0.0, g.plateau_value()},
                   {-1.0 / rd, ga / rd},
                   {0.0, -1.0}},
                  /*odd=*/false);
}

namespace {

// One piece of the exponent h(y) = a y^2 + b y + c on [lo, hi].
struct PieceQuad {
  double a, b, c, lo, hi;
};

double quad_at(const PieceQuad& p, double y) {
  return (p.a * y + p.b) * y + p.c;
}

double piece_max(const PieceQuad& p) {
  double mx = -inf;
  if (std::isfinite(p.lo)) mx = std::max(mx, quad_at(p, p.lo));
  if (std::isfinite(p.hi)) mx = std::max(mx, quad_at(p, p.hi));
  if (p.a < 0.0) {
    const double m = -p.b / (2.0 * p.a);
    if (m > p.lo && m < p.hi) mx = std::max(mx, quad_at(p, m));
  }
  return mx;
}

// phi_k(z) = int_0^1 u^k e^{-zu} du for k = 0..K.  Seeded at k = K with the
// all-positive Kummer series e^-z M(1, K+2, z)/(K+1), then recurred downward
// (phi_{k-1} = (z phi_k + e^-z)/k), which is stable in both directions of z.
// Upward recurrence cancels badly for k > z; the Taylor series overflows its
// own terms for large z.  Tolerates the slightly negative z (>= -1) that a
// near-flat piece can produce.
constexpr int phi_order = 33;

void phi_family(double z, std::array<double, phi_order + 1>& ph) {
  const double ez = z > 745.0 ? 0.0 : std::exp(-z);
  double top;
  if (ez == 0.0) {
    top = 1.0 / z;  // phi_K = K!/z^{K+1} once the tail is unrepresentable
    for (int i = 1; i <= phi_order; ++i) top *= static_cast<double>(i) / z;
  } else {
    double term = 1.0, sum = 1.0;
    for (int i = 1; i < 1200; ++i) {
      term *= z / static_cast<double>(phi_order + 1 + i);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    top = ez * sum / static_cast<double>(phi_order + 1);
  }
  ph[phi_order] = top;
  for (int k = phi_order; k >= 1; --k)
    ph[k - 1] = (z * ph[k] + ez) / static_cast<double>(k);
}

// Accumulates int_lo^hi e^{lambda h - Mstar} dy into *den and
// int_lo^hi (q0 + q1 y) e^{lambda h - Mstar} dy into *num, in closed form.
void integrate_piece(const PieceQuad& p, double q0, double q1, double lambda,
                     double Mstar, double* num, double* den) {
  if (!(p.hi > p.lo)) return;
  if (lambda * piece_max(p) - Mstar < exp_floor) return;  // underflows to 0

  const bool finite =
      std::isfinite(p.lo) && std::isfinite(p.hi);
  const double span = finite ? p.hi - p.lo : inf;
  const double curv = lambda * std::abs(p.a) * span * span;

  if (finite && curv <= 1.0) {
    // Nearly flat quadratic term (the ramp piece degenerates as r -> r_delta).
    // The vertex form below divides by a, so expand e^{lambda a v^2} around
    // the higher endpoint instead:
    //   I_j = int_0^s v^j e^{-zv/s} dv = s^{j+1} phi_j(z).
    const double s = span;
    const bool at_hi = quad_at(p, p.hi) >= quad_at(p, p.lo);
    const double y0 = at_hi ? p.hi : p.lo;
    const double slope = 2.0 * p.a * y0 + p.b;  // h'(y0)
    const double z = (at_hi ? slope : -slope) * lambda * s;  // >= -curv
    const double E = std::exp(lambda * quad_at(p, y0) - Mstar);
    std::array<double, phi_order + 1> ph;
    phi_family(z, ph);
    const double ratio = lambda * p.a * s * s;
    double I0 = 0.0, I1 = 0.0, coef = 1.0;
    for (int j = 0; 2 * j + 1 <= phi_order; ++j) {
      const double t0 = coef * s * ph[2 * j];
      const double t1 = coef * s * s * ph[2 * j + 1];
      I0 += t0;
      I1 += t1;
      if (j >= 2 && std::abs(t0) <= 1e-17 * std::abs(I0) &&
          std::abs(t1) <= 1e-17 * std::abs(I1))
        break;
      coef *= ratio / static_cast<double>(j + 1);
    }
    *den += E * I0;
    *num += E * ((q0 + q1 * y0) * I0 + (at_hi ? -q1 : q1) * I1);
    return;
  }

  const double m = -p.b / (2.0 * p.a);
  const double e_lo =
      std::isfinite(p.lo) ? std::exp(lambda * quad_at(p, p.lo) - Mstar) : 0.0;
  const double e_hi =
      std::isfinite(p.hi) ? std::exp(lambda * quad_at(p, p.hi) - Mstar) : 0.0;

  if (p.a < 0.0) {
    // Concave: Gaussian piece.  Tails are evaluated through erfcx so that
    // only exponents <= Mstar are ever exponentiated.
    const double beta = -lambda * p.a;
    const double sb = std::sqrt(beta);
    const double u_lo = std::isfinite(p.lo) ? sb * (p.lo - m) : -inf;
    const double u_hi = std::isfinite(p.hi) ? sb * (p.hi - m) : inf;
    double I0;
    if (u_lo < 0.0 && u_hi > 0.0) {
      const double C = lambda * quad_at(p, m) - Mstar;  // piece max, <= 0
      I0 = std::exp(C) * sqrt_pi / (2.0 * sb) *
           (std::erf(u_hi) - std::erf(u_lo));
    } else if (u_lo >= 0.0) {
      const double t_lo = e_lo * erfcx(u_lo);
      const double t_hi = std::isfinite(p.hi) ? e_hi * erfcx(u_hi) : 0.0;
      I0 = sqrt_pi / (2.0 * sb) * (t_lo - t_hi);
    } else {
      const double t_hi = e_hi * erfcx(-u_hi);
      const double t_lo = std::isfinite(p.lo) ? e_lo * erfcx(-u_lo) : 0.0;
      I0 = sqrt_pi / (2.0 * sb) * (t_hi - t_lo);
    }
    const double I1m = (e_lo - e_hi) / (2.0 * beta);
    *den += I0;
    *num += (q0 + q1 * m) * I0 + q1 * I1m;
  } else {
    // Convex: e^{u^2}-type antiderivative via the Dawson integral,
    // d/du [e^{u^2} D(u)] = e^{u^2}.  Finite by construction (only the
    // central ramp piece can be convex).
    const double beta = lambda * p.a;
    const double sb = std::sqrt(beta);
    const double u_lo = sb * (p.lo - m);
    const double u_hi = sb * (p.hi - m);
    const double I0 = (e_hi * dawson(u_hi) - e_lo * dawson(u_lo)) / sb;
    const double I1m = (e_hi - e_lo) / (2.0 * beta);
    *den += I0;
    *num += (q0 + q1 * m) * I0 + q1 * I1m;
  }
}

constexpr std::size_t max_pieces = 8;

struct PieceSet {
  std::array<PieceQuad, max_pieces> piece;
  std::size_t count = 0;
  double Mh = -inf;  // max of h over the line
};

PieceSet assemble_exponent(const TerminalSpec& spec, double x, double r) {
  PieceSet set;
  const double inv2r = 0.5 / r;
  if (spec.pieces.size() > max_pieces)
    throw std::invalid_argument("TerminalSpec: too many pieces");
  set.count = spec.pieces.size();
  for (std::size_t j = 0; j < set.count; ++j) {
    const auto& tp = spec.pieces[j];
    auto& q = set.piece[j];
    q.a = tp.hA - inv2r;
    q.b = tp.hB + x / r;
    q.c = tp.hC - x * x * inv2r;
    q.lo = tp.lo;
    q.hi = tp.hi;
    set.Mh = std::max(set.Mh, piece_max(q));
  }
  return set;
}

}  // namespace

ViscousField::ViscousField(std::shared_ptr<const CoefficientTable> table,
                           double sigma0, TerminalSpec terminal)
    : table_(std::move(table)),
      sigma0_(sigma0),
      lambda_(1.0 / (sigma0 * sigma0)),
      terminal_(std::move(terminal)) {
  if (!table_) throw std::invalid_argument("ViscousField: null table");
  if (!(sigma0 > 0.0))
    throw std::invalid_argument(
        "ViscousField: sigma0 = 0 has no viscous field; use the entropy field");
  if (sigma0 < min_sigma0_for_field)
    throw std::invalid_argument(
        "ViscousField: sigma0 below evaluation floor " +
        std::to_string(min_sigma0_for_field));
  if (terminal_.pieces.empty())
    throw std::invalid_argument("ViscousField: empty terminal");
}

double ViscousField::eval_raw(double t, double x) const {
  const double r = table_->r_at(t);
  if (!(r > 0.0)) return terminal_.value(x);
  const PieceSet set = assemble_exponent(terminal_, x, r);
  const double Mstar = lambda_ * set.Mh;
  const double q0 = x / r;
  const double q1 = -1.0 / r;
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < set.count; ++j)
    integrate_piece(set.piece[j], q0, q1, lambda_, Mstar, &num, &den);
  if (!(den > 0.0) || !std::isfinite(num))
    throw std::runtime_error("ViscousField: degenerate integral at t=" +
                             std::to_string(t) + ", x=" + std::to_string(x));
  return num / den;
}

double ViscousField::value(double t, double x) const {
  const double T = table_->horizon();
  if (!(t >= 0.0) || t > T * (1.0 + 1e-12))
    throw std::invalid_argument("ViscousField: t outside [0, horizon]");
  if (t >= T) return terminal_.value(x);
  if (terminal_.odd) {
    if (x == 0.0) return 0.0;
    if (x < 0.0) return -eval_raw(t, -x);
  }
  return eval_raw(t, x);
}

namespace {

struct OracleParams {
  const TerminalSpec* spec;
  double x, r, lambda, Mstar, q0, q1;
  bool weighted;
};

double oracle_integrand(double y, void* raw) {
  const auto* p = static_cast<const OracleParams*>(raw);
  const double d = p->x - y;
  const double h = p->spec->antiderivative(y) - d * d / (2.0 * p->r);
  const double e = std::exp(p->lambda * h - p->Mstar);
  return p->weighted ? (p->q0 + p->q1 * y) * e : e;
}

}  // namespace

double quadrature_oracle(double t, double x, double sigma0,
                         const CoefficientTable& table,
                         const TerminalSpec& terminal) {
  if (!(sigma0 >= min_sigma0_for_field))
    throw std::invalid_argument("quadrature_oracle: sigma0 below floor");
  const double T = table.horizon();
  if (!(t >= 0.0) || t > T * (1.0 + 1e-12))
    throw std::invalid_argument("quadrature_oracle: t outside [0, horizon]");
  if (t >= T) return terminal.value(x);
  const double r = table.r_at(t);
  if (!(r > 0.0)) return terminal.value(x);
  const double lambda = 1.0 / (sigma0 * sigma0);

  // Shared normalizer; cancels exactly in the ratio.
  const PieceSet set = assemble_exponent(terminal, x, r);
  const double Mstar = lambda * set.Mh;

  const double pad = 12.0 * std::sqrt(r) * sigma0 + 3.0 * table.k_total();
  const double lo = x - pad;
  const double hi = x + pad;

  std::vector<double> pts{lo, hi, x};
  for (std::size_t j = 0; j < set.count; ++j) {
    const auto& p = set.piece[j];
    if (std::isfinite(p.lo)) pts.push_back(p.lo);
    if (p.a != 0.0) pts.push_back(-p.b / (2.0 * p.a));  // stationary point
  }
  std::erase_if(pts, [&](double v) { return v < lo || v > hi; });
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(4000);
  if (!ws) throw std::runtime_error("quadrature_oracle: workspace alloc");
  OracleParams params{&terminal, x, r, lambda, Mstar, x / r, -1.0 / r, false};
  gsl_function f;
  f.function = &oracle_integrand;
  f.params = &params;

  double num = 0.0, den = 0.0;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    for (bool weighted : {false, true}) {
      params.weighted = weighted;
      double result = 0.0, abserr = 0.0;
      gsl_integration_qag(&f, pts[s], pts[s + 1], 1e-14, 1e-11, 4000,
                          GSL_INTEG_GAUSS61, ws, &result, &abserr);
      (weighted ? num : den) += result;
    }
  }
  gsl_integration_workspace_free(ws);
  if (!(den > 0.0) || !std::isfinite(num))
    throw std::runtime_error("quadrature_oracle: degenerate integral");
  return num / den;
}

double psi(const ViscousField& field, double t, double x) {
  return field.value(t, x) - entropy_eval(t, x, field.table());
}

double psi_bound(double t, double x, double sigma0,
                 const CoefficientTable& table) {
  if (!(t >= 0.0) || !(t < table.delta()))
    throw std::invalid_argument("psi_bound: valid for t < delta only");
  const double r = table.r_at(t);
  const double rd = table.r_delta();
  const double cone = r - rd;
  const double ax = std::abs(x);
  if (!(cone > 0.0) || !(ax > 0.0) || !(ax < cone))
    throw std::invalid_argument("psi_bound: need 0 < |x| < r_t - r_delta");
  const double lambda = 1.0 / (sigma0 * sigma0);
  const double root = std::sqrt(rd / cone);
  return (4.0 + 2.0 * root) * std::exp(-2.0 * lambda * ax) +
         2.0 * std::numbers::sqrt2 / std::sqrt(lambda * std::numbers::pi * r) +
         2.0 * root * std::exp(-lambda * cone * cone / (2.0 * r));
}

PdeResidual pde_residual(const ViscousField& field, double t, double x,
                         double h_t, double h_x) {
  const double T = field.table().horizon();
  if (!(h_t > 0.0) || !(h_x > 0.0) || !(t - h_t >= 0.0) || !(t + h_t < T))
    throw std::invalid_argument("pde_residual: stencil leaves [0, horizon)");
  const double th = field.value(t, x);
  const double th_tp = field.value(t + h_t, x);
  const double th_tm = field.value(t - h_t, x);
  const double th_xp = field.value(t, x + h_x);
  const double th_xm = field.value(t, x - h_x);
  PdeResidual out;
  out.theta_t = (th_tp - th_tm) / (2.0 * h_t);
  out.theta_x = (th_xp - th_xm) / (2.0 * h_x);
  out.theta_xx = (th_xp - 2.0 * th + th_xm) / (h_x * h_x);
  const double w = field.table().w_at(t);
  const double winv2 = 1.0 / (w * w);
  const double s2 = field.sigma0() * field.sigma0();
  out.value = out.theta_t - winv2 * th * out.theta_x +
              0.5 * s2 * winv2 * out.theta_xx;
  return out;
}

L1Comparison l1_comparison(const std::shared_ptr<const CoefficientTable>& table,
                           double sigma0, double gamma, double t,
                           std::size_t intervals) {
  if (intervals < 16 || intervals % 2 != 0)
    throw std::invalid_argument("l1_comparison: need an even lattice");
  const double rd = table->r_delta();
  const ViscousField plain(table, sigma0,
                           make_terminal(TerminalCondition{rd}));
  const ViscousField smoothed(table, sigma0,
                              make_terminal(SmoothedTerminal(rd, gamma)));
  const double half =
      3.0 * table->k_total() + 12.0 * sigma0 * std::sqrt(table->k_total());
  const double h = 2.0 * half / static_cast<double>(intervals);
  std::vector<double> absdiff(intervals + 1);
  double min_pointwise = inf;
  for (std::size_t i = 0; i <= intervals; ++i) {
    const double xi = -half + h * static_cast<double>(i);
    const double d = smoothed.value(t, xi) - plain.value(t, xi);
    min_pointwise = std::min(min_pointwise, d);
    absdiff[i] = std::abs(d);
  }
  return {simpson_total(absdiff, h), 2.0 * gamma * gamma / rd, min_pointwise};
}

}  // namespace mfgsel
