#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tinygroups {

// P[Bin(m, p) > threshold], summed exactly in log space. threshold is a
// real cut, so "count > (1+delta)*beta*m" maps onto it directly.
double binomial_tail_gt(int m, double p, double threshold);

// Multiplicative Chernoff upper tail: P[X > (1+delta) E[X]] <= exp(-delta^2 E[X] / 3).
double chernoff_upper(double mean, double delta);
// Lower tail: P[X < (1-delta) E[X]] <= exp(-delta^2 E[X] / 2).
double chernoff_lower(double mean, double delta);

// Bounded-differences tail: P[f > E f + t] <= exp(-2 t^2 / sum c_i^2).
double mobd_tail(double t, double sum_ci_sq);

struct GroupFailureBounds {
  double exact_tail;  // the test oracle
  double chernoff;    // sanity envelope, always >= exact_tail
};

// Probability that a group of m members, each independently bad with
// probability p, exceeds a bad fraction of threshold_fraction.
GroupFailureBounds chernoff_group_failure(int m, double p, double threshold_fraction);

// Smallest d1 whose group size ceil(d1 ln ln n) keeps the exact
// bad-majority-threshold tail at or below target_pf. Throws if no
// d1 <= 1000 reaches the target.
int size_groups_for_target(double beta, double delta, double target_pf, size_t n,
                           double delta2 = 0.0);

// Pearson statistic of observed bin counts against a uniform split.
double chi_square_stat(std::span<const uint64_t> counts);

// Upper critical value of chi-square with dof degrees of freedom at
// significance alpha, via Wilson-Hilferty. Accurate to ~0.1% for the
// dof used here; unit tests pin the 15-dof / alpha=0.01 value.
double chi_square_critical(int dof, double alpha);

double median_of(std::vector<double> v);
double percentile_of(std::vector<double> v, double pct);  // pct in [0,100]

// Least-squares residual of y ~ a*x (single scale coefficient through
// the origin). Used to compare growth-law fits.
struct ScaleFit {
  double a = 0.0;
  double rss = 0.0;  // residual sum of squares
};
ScaleFit fit_scale(std::span<const double> x, std::span<const double> y);

}  // namespace tinygroups
