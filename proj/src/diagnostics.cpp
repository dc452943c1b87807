#include "dyndp/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace dyndp {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty series");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::span<const double>> halves;
  std::size_t len = 0;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) throw std::invalid_argument("split_rhat needs at least 4 draws per chain");
    len = len == 0 ? h : std::min(len, h);
  }
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    halves.emplace_back(c.data(), len);
    halves.emplace_back(c.data() + h, len);
  }
  const double n = static_cast<double>(len);
  std::vector<double> means;
  double within = 0;
  for (auto h : halves) {
    means.push_back(mean(h));
    within += sample_variance(h);
  }
  within /= static_cast<double>(halves.size());
  const double between = n * sample_variance(means);
  if (within == 0) return between == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1) / n * within + between / n;
  return std::sqrt(var_plus / within);
}

double batch_means_variance_of_mean(std::span<const double> xs, int n_batches) {
  const std::size_t b = xs.size() / static_cast<std::size_t>(n_batches);
  if (n_batches < 2 || b < 1) throw std::invalid_argument("series too short for batch means");
  std::vector<double> means;
  for (int j = 0; j < n_batches; ++j) means.push_back(mean(xs.subspan(j * b, b)));
  return sample_variance(means) / n_batches;
}

double batch_means_ess(std::span<const double> xs, int n_batches) {
  const double v = batch_means_variance_of_mean(xs, n_batches);
  if (v == 0) return static_cast<double>(xs.size());
  return sample_variance(xs) / v;
}

SlopeTest slope_test(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 3) throw std::invalid_argument("slope test needs at least 3 points");
  const double xbar = (static_cast<double>(n) - 1) / 2;
  const double ybar = mean(xs);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (i - xbar) * (i - xbar);
    sxy += (i - xbar) * (xs[i] - ybar);
  }
  SlopeTest out;
  out.slope = sxy / sxx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = xs[i] - ybar - out.slope * (i - xbar);
    sse += r * r;
  }
  const double se = std::sqrt(sse / (n - 2) / sxx);
  out.t_statistic = se > 0 ? out.slope / se : 0.0;
  out.p_value = std::erfc(std::abs(out.t_statistic) / std::sqrt(2.0));
  return out;
}

}  // namespace dyndp
