#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mfgsel/fields.hpp"

using namespace mfgsel;

namespace {

CoefficientTable canonical_table(std::size_t steps = 2000) {
  ModelParams p;
  return build_coefficients(
      p, TimeGrid::uniform(p.horizon, p.horizon / static_cast<double>(steps),
                           p.delta));
}

}  // namespace

TEST_CASE("terminal feedback: ramp, clipping, oddness") {
  const double rd = (1.0 - std::exp(-1.0)) / 2.0;
  const TerminalCondition g{rd};
  CHECK(g(0.0) == 0.0);
  CHECK(g(rd) == -1.0);
  CHECK(g(-rd) == 1.0);
  CHECK(g(2.0) == -1.0);
  CHECK(g(-5.0) == 1.0);
  CHECK(g(0.1) == doctest::Approx(-0.1 / rd).epsilon(1e-15));
  for (double x : {0.03, 0.17, 0.9}) CHECK(g(x) == -g(-x));
  // non-increasing
  double prev = g(-2.0);
  for (double x = -2.0; x <= 2.0; x += 0.01) {
    CHECK(g(x) <= prev + 1e-15);
    prev = g(x);
  }
}

TEST_CASE("smoothed terminal: plateau location, value, and L1 distance") {
  const double rd = (1.0 - std::exp(-1.0)) / 2.0;
  const double gamma = 0.05;
  const SmoothedTerminal gs(rd, gamma);
  const TerminalCondition g{rd};

  // untouched left of the plateau and right of the shifted corner
  CHECK(gs(-1.0) == g(-1.0));
  CHECK(gs(rd - 2.0 * gamma) == g(rd - 2.0 * gamma));
  CHECK(gs(rd + gamma) == -1.0);
  CHECK(gs(rd + 0.2) == -1.0);

  // plateau value and extent
  CHECK(gs.plateau_value() ==
        doctest::Approx(-1.0 + 2.0 * gamma / rd).epsilon(1e-15));
  CHECK(gs(rd - 2.0 * gamma + 1e-9) ==
        doctest::Approx(gs.plateau_value()).epsilon(1e-7));
  CHECK(gs(rd - gamma) == doctest::Approx(gs.plateau_value()).epsilon(1e-12));

  // dominates g and the gap integrates to 2 gamma^2 / r_delta
  const int n = 400000;
  const double a = rd - 3.0 * gamma, b = rd + 2.0 * gamma;
  const double h = (b - a) / n;
  double integral = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = a + h * i;
    const double diff = gs(x) - g(x);
    CHECK(diff >= -1e-15);
    integral += diff * ((i == 0 || i == n) ? 0.5 : 1.0) * h;
  }
  CHECK(integral ==
        doctest::Approx(2.0 * gamma * gamma / rd).epsilon(1e-6));

  // deliberately one-sided: not odd
  CHECK(gs(rd - 1.5 * gamma) != -gs(-(rd - 1.5 * gamma)));
}

TEST_CASE("smoothed terminal rejects out-of-range widths") {
  const double rd = (1.0 - std::exp(-1.0)) / 2.0;
  CHECK_THROWS_AS(SmoothedTerminal(rd, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SmoothedTerminal(rd, 0.5 * rd), std::invalid_argument);
  CHECK_NOTHROW(SmoothedTerminal(rd, 0.49 * rd));
}

TEST_CASE("entropy profile: sign region, fan region, frozen value") {
  const CoefficientTable tab = canonical_table();

  // before delta the fan is closed: pure -sign(x)
  CHECK(entropy_eval(0.2, 0.3, tab) == -1.0);
  CHECK(entropy_eval(0.2, -1e-9, tab) == 1.0);
  CHECK(entropy_eval(0.2, 0.0, tab) == 0.0);
  CHECK(entropy_eval(0.5, 0.01, tab) == -1.0);  // fan width 0 at delta

  // after delta, linear inside |x| < r_delta - r_t
  const double t = 0.75;
  const double fan = tab.r_delta() - tab.r_at(t);
  CHECK(fan == doctest::Approx((std::exp(-0.5) - std::exp(-1.0)) / 2.0)
                   .epsilon(1e-9));
  // tolerance reflects the table's own clock accuracy, not the formula
  const double frozen = -0.1 / (std::exp(-0.5) - std::exp(-1.0));
  CHECK(entropy_eval(t, 0.05, tab) == doctest::Approx(frozen).epsilon(1e-9));
  CHECK(entropy_eval(t, -0.05, tab) ==
        doctest::Approx(-frozen).epsilon(1e-9));
  CHECK(entropy_eval(t, fan * 1.01, tab) == -1.0);
  CHECK(entropy_eval(t, fan * 0.5, tab) ==
        doctest::Approx(-0.5).epsilon(1e-9));

  // terminal slice matches the terminal feedback everywhere
  for (double x : {-0.9, -0.3, -0.05, 0.0, 0.02, 0.4, 1.3}) {
    const TerminalCondition g{tab.r_delta()};
    CHECK(entropy_eval(1.0, x, tab) == doctest::Approx(g(x)).epsilon(1e-9));
  }
}

TEST_CASE("entropy field object forwards to the profile") {
  auto tab = std::make_shared<const CoefficientTable>(canonical_table(800));
  const EntropyField field(tab);
  for (double t : {0.1, 0.6, 0.95})
    for (double x : {-0.4, 0.0, 0.07, 0.55})
      CHECK(field.value(t, x) == entropy_eval(t, x, *tab));
}

TEST_CASE("admissible labels depend on the initial point") {
  const CoefficientTable tab = canonical_table();
  const double kd = tab.k_delta();

  const std::vector<double> at0 = admissible_labels(0.0, tab);
  REQUIRE(at0.size() == 3);
  CHECK(at0[0] == -1.0);
  CHECK(at0[1] == 0.0);
  CHECK(at0[2] == 1.0);

  const double xi = 0.05;
  REQUIRE(xi < kd);
  const std::vector<double> shifted = admissible_labels(xi, tab);
  REQUIRE(shifted.size() == 3);
  CHECK(shifted[1] == doctest::Approx(xi / kd).epsilon(1e-12));

  CHECK_THROWS_AS(admissible_labels(kd, tab), std::invalid_argument);
  CHECK_THROWS_AS(admissible_labels(-2.0 * kd, tab), std::invalid_argument);
}

TEST_CASE("equilibrium paths satisfy the consistency relation") {
  const CoefficientTable tab = canonical_table();
  for (double xi : {0.0, 0.05}) {
    for (double A : admissible_labels(xi, tab)) {
      const EquilibriumTriple eq = equilibrium_path(A, xi, tab);
      CHECK(eq.A == A);
      CHECK(eq.h == A);
      CHECK(eq.z == 0.0);
      REQUIRE(eq.mu.size() == tab.grid().nodes.size());
      for (std::size_t i = 0; i < eq.mu.size(); ++i)
        CHECK(eq.mu[i] ==
              doctest::Approx(xi - A * tab.k()[i]).epsilon(1e-12).scale(1.0));
      const TerminalCondition g{tab.r_delta()};
      CHECK(g(eq.mu.back()) == doctest::Approx(A).epsilon(1e-9));
    }
  }
  // a label that is not a fixed point is rejected
  CHECK_THROWS_AS(equilibrium_path(0.5, 0.0, tab), std::invalid_argument);
}
