#pragma once

#include <cstddef>
#include <vector>

namespace kleinlab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t samples = 0;
};

/// Ordinary least squares y = intercept + slope·x. Needs at least two
/// distinct x values; the standard error is 0 for exactly two samples.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Running mean and standard error of the mean (Welford).
class MeanAccumulator {
 public:
  void add(double v) noexcept;
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept;
  double stderr_of_mean() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace kleinlab
