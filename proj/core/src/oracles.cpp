#include "tinygroups/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tinygroups {

double binomial_tail_gt(int m, double p, double threshold) {
  if (m < 0 || p < 0.0 || p > 1.0) throw std::invalid_argument("bad binomial parameters");
  int k0 = static_cast<int>(std::floor(threshold)) + 1;
  if (threshold < 0) k0 = 0;
  if (k0 > m) return 0.0;
  if (p == 0.0) return k0 <= 0 ? 1.0 : 0.0;
  if (p == 1.0) return k0 <= m ? 1.0 : 0.0;
  double total = 0.0;
  double logp = std::log(p), logq = std::log1p(-p);
  for (int k = k0; k <= m; ++k) {
    double logterm = std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) +
                     k * logp + (m - k) * logq;
    total += std::exp(logterm);
  }
  return std::min(total, 1.0);
}

double chernoff_upper(double mean, double delta) {
  return std::exp(-delta * delta * mean / 3.0);
}

double chernoff_lower(double mean, double delta) {
  return std::exp(-delta * delta * mean / 2.0);
}

double mobd_tail(double t, double sum_ci_sq) {
  if (sum_ci_sq <= 0.0) throw std::invalid_argument("sum of squared differences must be positive");
  return std::exp(-2.0 * t * t / sum_ci_sq);
}

GroupFailureBounds chernoff_group_failure(int m, double p, double threshold_fraction) {
  if (m < 1) throw std::invalid_argument("group size must be >= 1");
  double thr = threshold_fraction * m;
  double exact = binomial_tail_gt(m, p, thr);
  double mean = p * m;
  double bound = 1.0;
  if (mean > 0.0 && thr > mean) {
    double delta = thr / mean - 1.0;
    bound = chernoff_upper(mean, delta);
  } else if (mean == 0.0) {
    bound = exact;  // degenerate: both are 0 or 1
  }
  return {exact, std::max(bound, exact)};
}

int size_groups_for_target(double beta, double delta, double target_pf, size_t n,
                           double delta2) {
  if (!(beta < 0.5) || !((1.0 + delta) * beta < 0.5)) {
    throw std::invalid_argument("good-majority feasibility violated");
  }
  if (target_pf <= 0.0 || target_pf > 1.0) throw std::invalid_argument("bad target_pf");
  double lnln = std::log(std::log(static_cast<double>(n)));
  if (!(lnln > 0.0)) throw std::invalid_argument("n too small");
  double p = (1.0 + delta2) * beta;
  auto tail_at = [&](int d1) {
    int m = static_cast<int>(std::ceil(d1 * lnln));
    return binomial_tail_gt(m, p, (1.0 + delta) * beta * m);
  };
  const int kMax = 1000;
  if (tail_at(kMax) > target_pf) {
    throw std::runtime_error("infeasible p_f target: tail above target at every d1 <= 1000");
  }
  // The tail is not perfectly monotone in d1 because of the integer
  // ceiling, so binary search to a bracket and finish with a scan.
  int lo = 1, hi = kMax;
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (tail_at(mid) <= target_pf) hi = mid;
    else lo = mid + 1;
  }
  while (lo > 1 && tail_at(lo - 1) <= target_pf) --lo;
  return lo;
}

double chi_square_stat(std::span<const uint64_t> counts) {
  if (counts.empty()) throw std::invalid_argument("no bins");
  uint64_t total = 0;
  for (uint64_t c : counts) total += c;
  if (total == 0) throw std::invalid_argument("no samples");
  double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  double stat = 0.0;
  for (uint64_t c : counts) {
    double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

double chi_square_critical(int dof, double alpha) {
  if (dof < 1 || alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("bad chi-square query");
  // Wilson-Hilferty: chi2_q ~= dof * (1 - 2/(9 dof) + z_q sqrt(2/(9 dof)))^3
  // with z_q the standard normal quantile, via Acklam's rational fit.
  double p = 1.0 - alpha;
  auto norm_quantile = [](double q) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    double plow = 0.02425, phigh = 1 - plow;
    double x;
    if (q < plow) {
      double u = std::sqrt(-2 * std::log(q));
      x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
          ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1);
    } else if (q <= phigh) {
      double u = q - 0.5, r = u * u;
      x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
          (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
      double u = std::sqrt(-2 * std::log(1 - q));
      x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
          ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1);
    }
    return x;
  };
  double z = norm_quantile(p);
  double k = static_cast<double>(dof);
  double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * t * t * t;
}

double median_of(std::vector<double> v) { return percentile_of(std::move(v), 50.0); }

double percentile_of(std::vector<double> v, double pct) {
  if (v.empty()) throw std::invalid_argument("empty sample");
  if (pct < 0.0 || pct > 100.0) throw std::invalid_argument("bad percentile");
  std::sort(v.begin(), v.end());
  double rank = pct / 100.0 * static_cast<double>(v.size() - 1);
  size_t lo = static_cast<size_t>(rank);
  size_t hi = std::min(lo + 1, v.size() - 1);
  double w = rank - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

ScaleFit fit_scale(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("bad fit input");
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  if (sxx == 0.0) throw std::invalid_argument("degenerate fit");
  ScaleFit out;
  out.a = sxy / sxx;
  for (size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - out.a * x[i];
    out.rss += r * r;
  }
  return out;
}

}  // namespace tinygroups
