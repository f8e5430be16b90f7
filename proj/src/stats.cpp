#include "adlex/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adlex/error.hpp"

namespace adlex::stats {
namespace {

double variance(std::span<const double> x, double m) {
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

void check_sample(std::span<const double> x, const char* name) {
  if (x.size() < 2) throw Error(Errc::DomainError, std::string(name) + " needs at least 2 values");
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(Errc::DomainError, std::string(name) + " has a non-finite value");
  }
}

// Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_std(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  return std::sqrt(variance(x, mean(x)));
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw Error(Errc::DomainError, "incomplete beta needs a, b > 0 and x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return std::clamp(p, 0.0, 1.0);
}

TTestResult t_test_independent(std::span<const double> x, std::span<const double> y,
                               TTestVariant variant) {
  check_sample(x, "x");
  check_sample(y, "y");
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  const double m1 = mean(x);
  const double m2 = mean(y);
  const double v1 = variance(x, m1);
  const double v2 = variance(y, m2);

  TTestResult r;
  double se2 = 0.0;
  if (variant == TTestVariant::Student) {
    r.df = n1 + n2 - 2.0;
    const double pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / r.df;
    se2 = pooled * (1.0 / n1 + 1.0 / n2);
  } else {
    const double a = v1 / n1;
    const double b = v2 / n2;
    se2 = a + b;
    r.df = se2 > 0.0 ? se2 * se2 / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0)) : n1 + n2 - 2.0;
  }

  const double diff = m1 - m2;
  if (se2 <= 0.0) {
    if (diff == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = diff / std::sqrt(se2);
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

std::vector<double> bh_adjust(std::span<const double> p) {
  const std::size_t m = p.size();
  std::vector<double> out(m);
  if (m == 0) return out;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  double running = 1.0;
  for (std::size_t rank = m; rank-- > 0;) {
    const std::size_t i = order[rank];
    // m / rank >= 1, so the rounded product never drops below p
    const double candidate = p[i] * (static_cast<double>(m) / static_cast<double>(rank + 1));
    running = std::min(running, candidate);
    out[i] = std::min(1.0, running);
  }
  return out;
}

PointBiserial point_biserial(std::span<const double> x, std::span<const int> y) {
  if (x.size() != y.size()) throw Error(Errc::DomainError, "point_biserial: size mismatch");
  if (x.size() < 3) throw Error(Errc::DomainError, "point_biserial needs at least 3 observations");
  const double n = static_cast<double>(x.size());
  double s1 = 0.0, s0 = 0.0;
  double n1 = 0.0, n0 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] == 1) {
      s1 += x[i];
      n1 += 1.0;
    } else if (y[i] == 0) {
      s0 += x[i];
      n0 += 1.0;
    } else {
      throw Error(Errc::DomainError, "point_biserial labels must be 0 or 1");
    }
  }
  if (n1 == 0.0 || n0 == 0.0) throw Error(Errc::DomainError, "point_biserial needs both classes");

  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / n);  // population std
  PointBiserial out;
  if (!(sd > 0.0)) return out;
  const double m1 = s1 / n1;
  const double m0 = s0 / n0;
  out.r = std::clamp((m1 - m0) / sd * std::sqrt(n1 * n0 / (n * n)), -1.0, 1.0);
  if (std::fabs(out.r) >= 1.0) {
    out.p = 0.0;
  } else {
    const double t = out.r * std::sqrt((n - 2.0) / (1.0 - out.r * out.r));
    out.p = t_two_sided_p(t, n - 2.0);
  }
  return out;
}

}  // namespace adlex::stats
