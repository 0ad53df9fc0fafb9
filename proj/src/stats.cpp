#include "stylo/stats.hpp"

#include <cmath>
#include <limits>

#include "stylo/io.hpp"

namespace stylo::stats {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for I_x(a,b), evaluated with the modified Lentz scheme.
// Converges in far fewer than 200 iterations for the (a,b,x) this module
// uses; the cap bounds the worst case.
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIter = 200;
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;

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
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

// Log of the direct-branch evaluation a*ln(x) + b*ln(1-x) - ln B(a,b)
// - ln(a) + ln(cf); finite even when exp() of it underflows.
double log_direct_branch(double x, double a, double b) {
  const double cf = beta_continued_fraction(x, a, b);
  return a * std::log(x) + b * std::log1p(-x) - log_beta(a, b) - std::log(a) +
         std::log(cf);
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || std::isnan(x)) return kNan;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (x <= (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_direct_branch(x, a, b));
  }
  return 1.0 - std::exp(log_direct_branch(1.0 - x, b, a));
}

double log_regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || std::isnan(x) || x < 0.0) return kNan;
  if (x <= 0.0) return -kInf;
  if (x >= 1.0) return 0.0;
  if (x <= (a + 1.0) / (a + b + 2.0)) {
    return log_direct_branch(x, a, b);
  }
  const double other = std::exp(log_direct_branch(1.0 - x, b, a));
  return std::log1p(-other);
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) return kNan;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (t * t + df);
  const double ib = regularized_incomplete_beta(x, df / 2.0, 0.5);
  return t >= 0.0 ? 1.0 - 0.5 * ib : 0.5 * ib;
}

double student_t_two_sided_log10_p(double t, double df) {
  // Two-sided p = 2 * P(T >= |t|) = I_{df/(t^2+df)}(df/2, 1/2).
  const double x = df / (t * t + df);
  return log_regularized_incomplete_beta(x, df / 2.0, 0.5) / std::log(10.0);
}

namespace {

TestResult t_test_result(double t, double df, std::vector<int> n) {
  TestResult res;
  res.statistic = t;
  res.df = df;
  res.n = std::move(n);
  if (std::isinf(t)) {
    res.p_value = 0.0;
    res.log10_p = -kInf;
  } else {
    const double x = df / (t * t + df);
    res.p_value = regularized_incomplete_beta(x, df / 2.0, 0.5);
    res.log10_p = student_t_two_sided_log10_p(t, df);
  }
  return res;
}

}  // namespace

PearsonResult pearson(const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y) {
  const auto n = x.size();
  if (n != y.size()) throw Error("pearson: sequences differ in length");
  if (n < 3) throw Error("pearson: need at least 3 points");

  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();

  PearsonResult res;
  res.test.n = {static_cast<int>(n)};
  res.test.df = static_cast<double>(n - 2);
  if (sxx == 0.0 || syy == 0.0) {
    res.defined = false;
    res.r = kNan;
    res.test.statistic = kNan;
    res.test.p_value = kNan;
    res.test.log10_p = kNan;
    return res;
  }
  double r = xc.dot(yc) / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  res.r = r;

  const double denom = 1.0 - r * r;
  const double t = denom <= 0.0 ? (r > 0 ? kInf : -kInf)
                                : r * std::sqrt((n - 2) / denom);
  res.test = t_test_result(t, static_cast<double>(n - 2), {static_cast<int>(n)});
  return res;
}

TestResult welch_t(const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b) {
  const auto na = a.size();
  const auto nb = b.size();
  if (na < 2 || nb < 2) throw Error("welch_t: each sample needs n >= 2");

  const double ma = a.mean();
  const double mb = b.mean();
  const double va = (a.array() - ma).matrix().squaredNorm() / static_cast<double>(na - 1);
  const double vb = (b.array() - mb).matrix().squaredNorm() / static_cast<double>(nb - 1);

  const std::vector<int> ns = {static_cast<int>(na), static_cast<int>(nb)};
  if (va == 0.0 && vb == 0.0) {
    TestResult res;
    res.n = ns;
    res.df = static_cast<double>(na + nb - 2);
    if (ma == mb) {
      res.statistic = 0.0;
      res.p_value = 1.0;
      res.log10_p = 0.0;
    } else {
      // Complete separation: both groups constant but different.
      res.statistic = ma < mb ? -kInf : kInf;
      res.p_value = 0.0;
      res.log10_p = -kInf;
      res.complete_separation = true;
    }
    return res;
  }

  const double sea = va / static_cast<double>(na);
  const double seb = vb / static_cast<double>(nb);
  const double t = (ma - mb) / std::sqrt(sea + seb);
  const double df = (sea + seb) * (sea + seb) /
                    (sea * sea / static_cast<double>(na - 1) +
                     seb * seb / static_cast<double>(nb - 1));
  return t_test_result(t, df, ns);
}

std::vector<double> bonferroni(const std::vector<double>& p_values,
                               std::optional<int> m) {
  const int count = m.value_or(static_cast<int>(p_values.size()));
  if (count < static_cast<int>(p_values.size())) {
    throw Error("bonferroni: m smaller than the number of p-values");
  }
  std::vector<double> adjusted;
  adjusted.reserve(p_values.size());
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("bonferroni: p-value outside [0,1]");
    adjusted.push_back(std::min(1.0, p * count));
  }
  return adjusted;
}

}  // namespace stylo::stats
