#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rwre::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;

  bool passes(double alpha) const { return p_value >= alpha; }
};

// Pearson chi-square against equal cell probabilities.
TestResult chi_square_uniform(std::span<const std::size_t> counts);

// Two-sided one-sample Kolmogorov-Smirnov test against U[0,1).
TestResult ks_uniform(std::vector<double> samples);

// Kolmogorov limiting survival function Q(lambda) = P(sqrt(n) D_n > lambda).
double kolmogorov_survival(double lambda);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

Moments moments(std::span<const double> xs);

}  // namespace rwre::stats
