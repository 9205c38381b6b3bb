#include "wchaos/regression.hpp"

#include <cmath>
#include <stdexcept>

#include "wchaos/errors.hpp"

namespace wchaos {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw ParameterError("regression needs matching, nonempty samples");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

std::vector<double> two_point_slopes(std::span<const double> x, std::span<const double> y) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) out.push_back((y[i + 1] - y[i]) / (x[i + 1] - x[i]));
  return out;
}

}  // namespace wchaos
