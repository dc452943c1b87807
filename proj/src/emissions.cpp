#include "dyndp/emissions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dyndp/panel_dataset.hpp"

namespace dyndp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// n * log(x) with the convention 0 * log(0) = 0.
double xlogy(double n, double x) { return n == 0 ? 0.0 : n * std::log(x); }

}  // namespace

void EmissionModel::validate() const {
  for (const auto& ch : bernoulli) {
    if (!(ch.alpha > 0) || !(ch.beta > 0)) {
      throw std::invalid_argument("channel '" + ch.name + "': Beta prior shapes must be positive");
    }
  }
  for (const auto& ch : poisson) {
    if (!(ch.a > 0) || !(ch.b > 0)) {
      throw std::invalid_argument("channel '" + ch.name +
                                  "': Gamma prior shape and rate must be positive");
    }
  }
}

void CellObservations::validate() const {
  for (const auto& obs : binary) {
    if (obs.trials < 0 || obs.successes < 0 || obs.successes > obs.trials) {
      throw std::invalid_argument("binary channel needs 0 <= successes <= trials");
    }
  }
  for (const auto& obs : counts) {
    if (obs.total < 0 || obs.exposures < 0) {
      throw std::invalid_argument("count channel totals and exposures must be nonnegative");
    }
    if (obs.exposures == 0 && obs.total != 0) {
      throw std::invalid_argument("count channel has events but no exposures");
    }
  }
}

void SufficientStats::add(const CellObservations& cell) {
  for (std::size_t c = 0; c < binary.size(); ++c) {
    binary[c].successes += cell.binary[c].successes;
    binary[c].failures += cell.binary[c].trials - cell.binary[c].successes;
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    counts[c].total += cell.counts[c].total;
    counts[c].exposures += cell.counts[c].exposures;
  }
}

SufficientStats& SufficientStats::operator+=(const SufficientStats& other) {
  for (std::size_t c = 0; c < binary.size(); ++c) {
    binary[c].successes += other.binary[c].successes;
    binary[c].failures += other.binary[c].failures;
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    counts[c].total += other.counts[c].total;
    counts[c].exposures += other.counts[c].exposures;
  }
  return *this;
}

double log_likelihood(const CellObservations& cell, const ClusterParams& params) {
  double ll = 0.0;
  for (std::size_t c = 0; c < cell.binary.size(); ++c) {
    const auto& obs = cell.binary[c];
    if (obs.trials == 0) continue;
    const double theta = params.theta[c];
    ll += xlogy(static_cast<double>(obs.successes), theta) +
          xlogy(static_cast<double>(obs.trials - obs.successes), 1.0 - theta);
  }
  for (std::size_t c = 0; c < cell.counts.size(); ++c) {
    const auto& obs = cell.counts[c];
    if (obs.exposures == 0) continue;
    const double lambda = params.lambda[c];
    ll += xlogy(static_cast<double>(obs.total), lambda) -
          static_cast<double>(obs.exposures) * lambda - obs.log_factorial_sum;
  }
  return std::isnan(ll) ? kNegInf : ll;
}

SufficientStats sufficient_stats(const PanelDataset& dataset, const Grid<int>& g, int k) {
  SufficientStats stats;
  stats.binary.resize(dataset.binary_channels.size());
  stats.counts.resize(dataset.count_channels.size());
  for (std::size_t i = 0; i < dataset.n_units(); ++i) {
    for (std::size_t t = 0; t < dataset.n_periods(); ++t) {
      if (dataset.present(i, t) && g(i, t) == k) stats.add(dataset.cells(i, t));
    }
  }
  return stats;
}

std::vector<SufficientStats> sufficient_stats_by_cluster(const PanelDataset& dataset,
                                                         const Grid<int>& g, int truncation) {
  SufficientStats empty;
  empty.binary.resize(dataset.binary_channels.size());
  empty.counts.resize(dataset.count_channels.size());
  std::vector<SufficientStats> stats(truncation, empty);
  for (std::size_t i = 0; i < dataset.n_units(); ++i) {
    for (std::size_t t = 0; t < dataset.n_periods(); ++t) {
      if (dataset.present(i, t)) stats.at(g(i, t)).add(dataset.cells(i, t));
    }
  }
  return stats;
}

ClusterParams sample_cluster_params(const EmissionModel& model, const SufficientStats& stats,
                                    Rng& rng) {
  ClusterParams params;
  params.theta.reserve(model.bernoulli.size());
  for (std::size_t c = 0; c < model.bernoulli.size(); ++c) {
    const auto& spec = model.bernoulli[c];
    params.theta.push_back(rng.beta(spec.alpha + static_cast<double>(stats.binary[c].successes),
                                    spec.beta + static_cast<double>(stats.binary[c].failures)));
  }
  params.lambda.reserve(model.poisson.size());
  for (std::size_t c = 0; c < model.poisson.size(); ++c) {
    const auto& spec = model.poisson[c];
    params.lambda.push_back(rng.gamma(spec.a + static_cast<double>(stats.counts[c].total),
                                      spec.b + static_cast<double>(stats.counts[c].exposures)));
  }
  return params;
}

ClusterParams sample_prior_params(const EmissionModel& model, Rng& rng) {
  return sample_cluster_params(model, SufficientStats(model), rng);
}

double log_beta_density(double x, double a, double b) {
  if (x < 0 || x > 1) return kNegInf;
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + xlogy(a - 1, x) +
         xlogy(b - 1, 1 - x);
}

double log_gamma_density(double x, double shape, double rate) {
  if (x < 0) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + xlogy(shape - 1, x) - rate * x;
}

double log_prior_density(const EmissionModel& model, const ClusterParams& params) {
  double lp = 0.0;
  for (std::size_t c = 0; c < model.bernoulli.size(); ++c) {
    lp += log_beta_density(params.theta[c], model.bernoulli[c].alpha, model.bernoulli[c].beta);
  }
  for (std::size_t c = 0; c < model.poisson.size(); ++c) {
    lp += log_gamma_density(params.lambda[c], model.poisson[c].a, model.poisson[c].b);
  }
  return lp;
}

CellObservations simulate_cell(const CellObservations& shape, const ClusterParams& params,
                               Rng& rng) {
  CellObservations out = shape;
  for (std::size_t c = 0; c < out.binary.size(); ++c) {
    auto& obs = out.binary[c];
    obs.successes = 0;
    for (long j = 0; j < obs.trials; ++j) obs.successes += rng.bernoulli(params.theta[c]) ? 1 : 0;
  }
  for (std::size_t c = 0; c < out.counts.size(); ++c) {
    auto& obs = out.counts[c];
    obs.total = 0;
    obs.log_factorial_sum = 0.0;
    for (long j = 0; j < obs.exposures; ++j) {
      const long x = rng.poisson(params.lambda[c]);
      obs.total += x;
      obs.log_factorial_sum += std::lgamma(static_cast<double>(x) + 1.0);
    }
  }
  return out;
}

}  // namespace dyndp
