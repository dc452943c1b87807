#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dyndp/gibbs_sampler.hpp"
#include "dyndp/grid.hpp"
#include "dyndp/igcrp_prior.hpp"

// Independent reference computations used by the unit and acceptance tests.

namespace dyndp::testing {

/// Kolmogorov distribution tail P(K > x).
double kolmogorov_tail(double x);

/// One-sample KS statistic and asymptotic p-value against `cdf`.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Every label path of one unit with its unnormalized log weight under the
/// sticky transition and the given log evidence (T x K).
std::map<std::vector<int>, double> enumerate_unit_paths(const Grid<double>& log_evidence,
                                                        const StickWeights& weights, double p);

/// P(g_t = k | evidence up to t), by summing path weights over prefixes.
Grid<double> enumerated_filter(const Grid<double>& log_evidence, const StickWeights& weights,
                               double p);

/// Normalized path posterior from enumerate_unit_paths.
std::map<std::vector<int>, double> enumerated_posterior(const Grid<double>& log_evidence,
                                                        const StickWeights& weights, double p);

/// Stick weights with random fractions in (0.05, 0.95) and the last stick
/// pinned.
StickWeights random_weights(std::size_t periods, int truncation, Rng& rng);

struct GewekeMoment {
  std::string name;
  double marginal_mean = 0.0;
  double successive_mean = 0.0;
  double z = 0.0;
  double successive_ess = 0.0;
};

struct GewekeOptions {
  AssignmentUpdate update = AssignmentUpdate::Coupled;
  int marginal_samples = 100'000;
  int successive_iterations = 200'000;
  std::uint64_t seed = 2024;
};

/// Marginal-conditional against successive-conditional simulation on a
/// 4-unit, 3-period, one-Bernoulli-channel model with K = 3, gamma = 1,
/// p ~ Beta(1, 1). Moments: first and second of p, theta_1 and the number
/// of occupied clusters.
std::vector<GewekeMoment> run_geweke(const GewekeOptions& options);

}  // namespace dyndp::testing
