#pragma once

#include <string>
#include <vector>

#include "dyndp/grid.hpp"
#include "dyndp/rng.hpp"

// Conjugate observation families: Bernoulli channels with Beta priors and
// Poisson count channels with Gamma (shape, rate) priors.

namespace dyndp {

struct PanelDataset;

struct BernoulliChannelSpec {
  std::string name;
  double alpha = 1.0;
  double beta = 1.0;
};

struct PoissonChannelSpec {
  std::string name;
  double a = 1.0;  // shape
  double b = 1.0;  // rate
};

/// The observation model shared by every cluster.
struct EmissionModel {
  std::vector<BernoulliChannelSpec> bernoulli;
  std::vector<PoissonChannelSpec> poisson;

  void validate() const;
};

/// Cluster-level parameters: one theta per Bernoulli channel, one lambda per
/// count channel.
struct ClusterParams {
  std::vector<double> theta;
  std::vector<double> lambda;

  friend bool operator==(const ClusterParams&, const ClusterParams&) = default;
};

struct BinaryObs {
  long successes = 0;
  long trials = 0;
  friend bool operator==(const BinaryObs&, const BinaryObs&) = default;
};

/// Aggregated Poisson data for a cell: `total` events over `exposures`
/// independent draws. `log_factorial_sum` carries sum(log x_j!) over the
/// individual draws so the likelihood stays exact after aggregation.
struct CountObs {
  long total = 0;
  long exposures = 0;
  double log_factorial_sum = 0.0;
  friend bool operator==(const CountObs&, const CountObs&) = default;
};

/// Sufficient statistics of one (unit, period) cell.
struct CellObservations {
  std::vector<BinaryObs> binary;
  std::vector<CountObs> counts;

  void validate() const;
  friend bool operator==(const CellObservations&, const CellObservations&) = default;
};

struct BinaryStats {
  long long successes = 0;
  long long failures = 0;
  friend bool operator==(const BinaryStats&, const BinaryStats&) = default;
};

struct CountStats {
  long long total = 0;
  long long exposures = 0;
  friend bool operator==(const CountStats&, const CountStats&) = default;
};

struct SufficientStats {
  std::vector<BinaryStats> binary;
  std::vector<CountStats> counts;

  SufficientStats() = default;
  explicit SufficientStats(const EmissionModel& model)
      : binary(model.bernoulli.size()), counts(model.poisson.size()) {}

  void add(const CellObservations& cell);
  SufficientStats& operator+=(const SufficientStats& other);
  friend bool operator==(const SufficientStats&, const SufficientStats&) = default;
};

/// Sum of Bernoulli and Poisson log-pmfs. Channels with no trials or no
/// exposures contribute zero; -inf only for events of probability zero.
double log_likelihood(const CellObservations& cell, const ClusterParams& params);

/// Aggregates over every present cell assigned to cluster k (g is N x T).
SufficientStats sufficient_stats(const PanelDataset& dataset, const Grid<int>& g, int k);

/// All clusters in a single pass; element k equals sufficient_stats(.., k).
std::vector<SufficientStats> sufficient_stats_by_cluster(const PanelDataset& dataset,
                                                         const Grid<int>& g, int truncation);

/// theta ~ Beta(alpha + successes, beta + failures);
/// lambda ~ Gamma(a + total, b + exposures) with b a rate.
ClusterParams sample_cluster_params(const EmissionModel& model, const SufficientStats& stats,
                                    Rng& rng);

ClusterParams sample_prior_params(const EmissionModel& model, Rng& rng);

/// Log prior density of a parameter vector.
double log_prior_density(const EmissionModel& model, const ClusterParams& params);

/// A cell with the same trials and exposures as `shape`, data drawn from
/// `params`.
CellObservations simulate_cell(const CellObservations& shape, const ClusterParams& params,
                               Rng& rng);

double log_beta_density(double x, double a, double b);
double log_gamma_density(double x, double shape, double rate);

}  // namespace dyndp
