#include "pamlab/stats.hpp"

#include <algorithm>

#include "pamlab/errors.hpp"

namespace pamlab::stats {

Interval wilson(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

void LogMeanExp::add(double w) {
  ++count_;
  if (w == -std::numeric_limits<double>::infinity()) return;
  if (w > shift_) {
    const double r = std::exp(shift_ - w);
    sum_ *= r;
    sum_sq_ *= r * r;
    shift_ = w;
  }
  const double e = std::exp(w - shift_);
  sum_ += e;
  sum_sq_ += e * e;
}

void LogMeanExp::merge(const LogMeanExp& o) {
  if (o.shift_ > shift_) {
    const double r = std::exp(shift_ - o.shift_);
    sum_ = sum_ * r + o.sum_;
    sum_sq_ = sum_sq_ * r * r + o.sum_sq_;
    shift_ = o.shift_;
  } else if (o.sum_ > 0.0) {
    const double r = std::exp(o.shift_ - shift_);
    sum_ += o.sum_ * r;
    sum_sq_ += o.sum_sq_ * r * r;
  }
  count_ += o.count_;
}

double LogMeanExp::log_mean() const {
  if (count_ == 0 || sum_ <= 0.0) return -std::numeric_limits<double>::infinity();
  return shift_ + std::log(sum_ / static_cast<double>(count_));
}

double LogMeanExp::log_stderr() const {
  if (count_ < 2 || sum_ <= 0.0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(count_);
  const double mean = sum_ / n;
  const double var = std::max(0.0, (sum_sq_ - n * mean * mean) / (n - 1.0));
  return std::sqrt(var / n) / mean;
}

double log_mean_exp(std::span<const double> w) {
  LogMeanExp acc;
  for (double x : w) acc.add(x);
  return acc.log_mean();
}

double log_poisson_tail(double lambda, long k) {
  if (lambda < 0.0) throw ParameterError("Poisson mean must be non-negative");
  if (k <= 0) return 0.0;
  if (lambda == 0.0) return -std::numeric_limits<double>::infinity();
  // log pmf(k), then ratios pmf(j+1)/pmf(j) = lambda/(j+1).
  const double log_pk = -lambda + static_cast<double>(k) * std::log(lambda) -
                        std::lgamma(static_cast<double>(k) + 1.0);
  double term = 1.0;
  double sum = 1.0;
  for (long j = k;; ++j) {
    term *= lambda / static_cast<double>(j + 1);
    sum += term;
    if (term < 1e-18 * sum && static_cast<double>(j + 1) > lambda) break;
  }
  return log_pk + std::log(sum);
}

}  // namespace pamlab::stats
