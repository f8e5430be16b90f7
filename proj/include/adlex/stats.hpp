#pragma once

#include <span>
#include <vector>

namespace adlex::stats {

enum class TTestVariant { Student, Welch };

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

// Independent two-sample t-test. Both samples need >= 2 finite values
// (DomainError otherwise). When both samples are constant the statistic is
// undefined: equal means give t = 0, p = 1; unequal means give t = +-inf, p = 0.
TTestResult t_test_independent(std::span<const double> x, std::span<const double> y,
                               TTestVariant variant = TTestVariant::Student);

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p-value of a t statistic with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

// Benjamini-Hochberg step-up adjustment, returned in input order.
std::vector<double> bh_adjust(std::span<const double> p);

struct PointBiserial {
  double r = 0.0;
  double p = 1.0;
};

// Pearson correlation between x and a 0/1 label vector, with a two-sided
// p-value from t = r sqrt((n-2)/(1-r^2)). Constant x gives r = 0, p = 1.
PointBiserial point_biserial(std::span<const double> x, std::span<const int> y);

double mean(std::span<const double> x);
// Sample standard deviation (ddof = 1); 0 for fewer than two values.
double sample_std(std::span<const double> x);

}  // namespace adlex::stats
