#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace pamlab::stats {

struct Interval {
  double lower;
  double upper;
};

/// Wilson score interval for a binomial proportion at normal quantile z.
Interval wilson(std::size_t successes, std::size_t trials, double z = 1.96);

/// Mean of exp(w_i) kept in log form. Merging is associative; the shift is
/// the running maximum so no term overflows.
class LogMeanExp {
 public:
  void add(double log_weight);
  void merge(const LogMeanExp& other);

  std::size_t count() const { return count_; }
  /// log( (1/n) sum exp(w_i) ); -inf when every weight is zero or n == 0.
  double log_mean() const;
  /// Standard error of log(mean) by the delta method; +inf if degenerate.
  double log_stderr() const;

 private:
  std::size_t count_ = 0;
  double shift_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;     // sum exp(w - shift)
  double sum_sq_ = 0.0;  // sum exp(2(w - shift))
};

double log_mean_exp(std::span<const double> log_weights);

/// P(Poisson(lambda) >= k), summed upward from k so small tails keep full
/// relative precision. Returned in log form.
double log_poisson_tail(double lambda, long k);

}  // namespace pamlab::stats
