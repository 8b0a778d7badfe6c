#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace crackfield {

/// Per-element Weibull field of Young's modulus. E0 is the scale parameter;
/// for shape m = 1 it equals the mean.
struct StochasticFieldSpec {
  double E0 = 0.0;       // scale [Pa]
  double m = 1.0;        // Weibull shape
  std::uint64_t seed = 0;
  int n = 0;             // element count

  static constexpr const char* generator_name = "mt19937_64";
};

/// E_i = E0 * (-ln(1 - U_i))^(1/m) from one seeded mt19937_64 stream.
/// Deterministic and strictly positive.
std::vector<double> sample_field(const StochasticFieldSpec& spec);

/// One value per line, Pa.
void write_field_values(std::ostream& os, const std::vector<double>& values);
std::vector<double> read_field_values(std::istream& is);

/// Kolmogorov-Smirnov statistic of samples against the Weibull CDF
/// 1 - exp(-(x/E0)^m).
double weibull_ks_statistic(std::vector<double> samples, double E0, double m);

}  // namespace crackfield
