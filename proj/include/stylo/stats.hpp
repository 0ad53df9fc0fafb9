#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

// Shared statistical kernel: Student-t CDF via the regularized incomplete
// beta function, Pearson correlation with significance, Welch's two-sample
// t-test, and Bonferroni correction. p-values far below double underflow are
// carried in log10 space.

namespace stylo::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df = 0.0;
  std::vector<int> n;
  // log10 of the two-sided p-value; finite even when p_value underflows to 0.
  double log10_p = 0.0;
  // Both groups constant but different: the statistic is infinite and the
  // p-value is reported as below machine alpha.
  bool complete_separation = false;
};

struct PearsonResult {
  double r = 0.0;
  TestResult test;
  bool defined = true;  // false when either input is constant
};

// Regularized incomplete beta I_x(a, b), evaluated with Lentz's continued
// fraction (200-iteration cap). Absolute error <= 1e-12 over the arguments
// the t CDF needs.
double regularized_incomplete_beta(double x, double a, double b);

// Natural log of I_x(a, b), usable when the direct value underflows.
double log_regularized_incomplete_beta(double x, double a, double b);

// P(T <= t) for Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);

// log10 of the two-sided p-value 2*P(T >= |t|).
double student_t_two_sided_log10_p(double t, double df);

// Pearson r with the t-based two-sided significance test. Inputs must have
// equal length n >= 3; a constant input yields defined=false (NaN markers).
PearsonResult pearson(const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y);

// Welch's unequal-variance t-test, two-sided, with Welch-Satterthwaite df.
// Degenerate variances: both constant and equal -> t=0, p=1; both constant
// and different -> complete separation (p below machine alpha, flagged).
TestResult welch_t(const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b);

// Bonferroni adjustment: p*m clipped to 1. m defaults to p.size(); m smaller
// than the sequence is an error.
std::vector<double> bonferroni(const std::vector<double>& p_values,
                               std::optional<int> m = std::nullopt);

}  // namespace stylo::stats
