#pragma once

#include <span>
#include <vector>

// Scalar convergence diagnostics for chain traces.

namespace dyndp {

double mean(std::span<const double> xs);
double sample_variance(std::span<const double> xs);

/// Split-chain potential scale reduction: every chain is cut in half and the
/// halves are treated as separate chains. Returns 1 for constant traces.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Variance of the sample mean of an autocorrelated series, from the spread
/// of `n_batches` non-overlapping batch means.
double batch_means_variance_of_mean(std::span<const double> xs, int n_batches = 50);

/// Effective sample size implied by batch means.
double batch_means_ess(std::span<const double> xs, int n_batches = 50);

struct SlopeTest {
  double slope = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;  // two-sided, normal approximation
};

/// OLS regression of xs on its index.
SlopeTest slope_test(std::span<const double> xs);

}  // namespace dyndp
