#pragma once

namespace mfgsel {

// Scaled complementary error function exp(x^2) erfc(x); finite for all x,
// decays like 1/(x sqrt(pi)) for large positive x.
double erfcx(double x);

// Dawson integral D(x) = exp(-x^2) int_0^x exp(u^2) du (odd).
double dawson(double x);

}  // namespace mfgsel
