#include "kleinlab/stats.hpp"

#include <cmath>

#include "kleinlab/error.hpp"

namespace kleinlab {

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::dimension_mismatch, "fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorCode::insufficient_data, "fit_line: need at least two samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::insufficient_data, "fit_line: x values are all equal");
  LinearFit fit;
  fit.samples = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

void MeanAccumulator::add(double v) noexcept {
  ++n_;
  const double d = v - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (v - mean_);
}

double MeanAccumulator::variance() const noexcept {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double MeanAccumulator::stderr_of_mean() const noexcept {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

}  // namespace kleinlab
