#include "mfgsel/special_functions.hpp"

#include <cmath>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_dawson.h>
#include <gsl/gsl_sf_erf.h>

namespace mfgsel {

namespace {
// GSL's default error handler aborts the process; the wrapped functions are
// total on finite arguments, so turn it off once and rely on return values.
const int gsl_handler_off = [] {
  gsl_set_error_handler_off();
  return 0;
}();
}  // namespace

double erfcx(double x) {
  if (x < -26.0) return HUGE_VAL;  // exp(x^2) erfc(x) ~ 2 exp(x^2) overflows
  if (x < 0.0) return 2.0 * std::exp(x * x) - erfcx(-x);
  // exp(x^2 + log erfc x) stays in range for every x >= 0.
  return std::exp(x * x + gsl_sf_log_erfc(x));
}

double dawson(double x) { return gsl_sf_dawson(x); }

}  // namespace mfgsel
