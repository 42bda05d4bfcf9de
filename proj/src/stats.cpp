#include "rwre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

namespace rwre::stats {

TestResult chi_square_uniform(std::span<const std::size_t> counts) {
  TestResult r;
  if (counts.size() < 2) return r;
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total == 0.0) return r;
  const double expected = total / static_cast<double>(counts.size());
  for (auto c : counts) {
    const double diff = static_cast<double>(c) - expected;
    r.statistic += diff * diff / expected;
  }
  r.dof = counts.size() - 1;
  const boost::math::chi_squared dist(static_cast<double>(r.dof));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Small-lambda form of the Jacobi theta identity; converges fast here.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int j = 1; j <= 20; ++j) {
      const double k = 2.0 * j - 1.0;
      cdf += std::exp(-k * k * pi2 / (8.0 * lambda * lambda));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    q += (j % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * q, 0.0, 1.0);
}

TestResult ks_uniform(std::vector<double> samples) {
  TestResult r;
  if (samples.empty()) return r;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double u = std::clamp(samples[i], 0.0, 1.0);
    const double di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - u, u - di / n});
  }
  r.statistic = d;
  const double sn = std::sqrt(n);
  // Stephens' finite-sample correction.
  r.p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

Moments moments(std::span<const double> xs) {
  Moments m;
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) {
    if (!xs.empty()) m.mean = xs[0];
    return m;
  }
  for (double x : xs) m.mean += x;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.variance = m2 * n / (n - 1.0);
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

}  // namespace rwre::stats
