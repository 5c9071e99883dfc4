#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mfgsel {

// Cumulative integral of uniformly sampled values: out[i] = int_0^{t_i} f.
// Interior steps integrate the parabola through three neighbouring samples
// (the two half-rules of composite Simpson), so even-index prefixes coincide
// with composite Simpson and the scheme is exact for quadratics.
inline std::vector<double> cumulative_simpson(const std::vector<double>& f,
                                              double h) {
  const std::size_t n = f.size();
  if (n < 3) throw std::invalid_argument("cumulative_simpson: need >= 3 samples");
  std::vector<double> out(n, 0.0);
  // first interval from the parabola through f[0], f[1], f[2]
  out[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
  for (std::size_t i = 1; i + 1 < n; ++i)
    out[i + 1] = out[i] + h / 12.0 * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1]);
  return out;
}

// Total integral over the sampled range; composite Simpson, with a 3/8 block
// at the end when the number of intervals is odd.
inline double simpson_total(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  if (n < 4) throw std::invalid_argument("simpson_total: need >= 4 samples");
  const std::size_t intervals = n - 1;
  std::size_t even_end = intervals;      // number of intervals covered by pairs
  double tail = 0.0;
  if (intervals % 2 != 0) {
    even_end = intervals - 3;
    const std::size_t i = n - 4;
    tail = 3.0 * h / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 2 <= even_end; i += 2)
    acc += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  return acc + tail;
}

}  // namespace mfgsel
