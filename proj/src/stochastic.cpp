#include "crackfield/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

namespace crackfield {

std::vector<double> sample_field(const StochasticFieldSpec& spec) {
  if (!(spec.E0 > 0.0)) throw std::invalid_argument("E0 must be positive");
  if (!(spec.m > 0.0)) throw std::invalid_argument("Weibull shape must be positive");
  if (spec.n <= 0) throw std::invalid_argument("field needs at least one element");

  std::mt19937_64 rng(spec.seed);
  std::vector<double> out(spec.n);
  for (double& e : out) {
    // 53-bit uniform in the open interval (0, 1); keeps E strictly positive.
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    e = spec.E0 * std::pow(-std::log1p(-u), 1.0 / spec.m);
  }
  return out;
}

void write_field_values(std::ostream& os, const std::vector<double>& values) {
  char buf[40];
  for (double v : values) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    os << buf;
  }
}

std::vector<double> read_field_values(std::istream& is) {
  std::vector<double> out;
  double v;
  while (is >> v) out.push_back(v);
  return out;
}

double weibull_ks_statistic(std::vector<double> samples, double E0, double m) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double ks = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const double cdf = 1.0 - std::exp(-std::pow(samples[i] / E0, m));
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    ks = std::max({ks, std::abs(cdf - lo), std::abs(cdf - hi)});
  }
  return ks;
}

}  // namespace crackfield
