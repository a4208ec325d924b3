#pragma once

#include <span>

namespace posg::stats {

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> x);
/// stddev / sqrt(n).
double standard_error(std::span<const double> x);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Spearman rank correlation with average ranks for ties; the p-value is
/// two-sided from the t approximation with n - 2 degrees of freedom.
TestResult spearman(std::span<const double> x, std::span<const double> y);

/// Paired t-test of H1: mean(a - b) < 0. Statistic is t.
TestResult paired_t_less(std::span<const double> a, std::span<const double> b);

}  // namespace posg::stats
