#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "dyndp/diagnostics.hpp"
#include "dyndp/emissions.hpp"
#include "dyndp/panel_dataset.hpp"

namespace dyndp::testing {

double kolmogorov_tail(double x) {
  if (x <= 0) return 1.0;
  if (x < 0.3) {
    // The alternating series converges slowly here; the tail is 1 to double
    // precision anyway.
    return 1.0;
  }
  double sum = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  // Stephens' small-sample correction.
  return {d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)};
}

namespace {

// Visits every path of length `len` over labels [0, k).
void for_each_path(std::size_t len, int k, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> path(len, 0);
  while (true) {
    f(path);
    std::size_t pos = 0;
    while (pos < len && ++path[pos] == k) path[pos++] = 0;
    if (pos == len) return;
  }
}

double path_log_weight(const std::vector<int>& path, const Grid<double>& e,
                       const StickWeights& w, double p) {
  double lw = std::log(w.q(0, path[0])) + e(0, path[0]);
  for (std::size_t t = 1; t < path.size(); ++t) {
    const double stay = path[t] == path[t - 1] ? p : 0.0;
    lw += std::log(stay + (1.0 - p) * w.q(t, path[t])) + e(t, path[t]);
  }
  return lw;
}

}  // namespace

std::map<std::vector<int>, double> enumerate_unit_paths(const Grid<double>& log_evidence,
                                                        const StickWeights& weights, double p) {
  std::map<std::vector<int>, double> out;
  const int k = static_cast<int>(weights.truncation());
  for_each_path(log_evidence.rows(), k, [&](const std::vector<int>& path) {
    out[path] = path_log_weight(path, log_evidence, weights, p);
  });
  return out;
}

Grid<double> enumerated_filter(const Grid<double>& log_evidence, const StickWeights& weights,
                               double p) {
  const std::size_t periods = log_evidence.rows();
  const int k = static_cast<int>(weights.truncation());
  Grid<double> out(periods, k, 0.0);
  for (std::size_t t = 0; t < periods; ++t) {
    std::vector<double> mass(k, 0.0);
    for_each_path(t + 1, k, [&](const std::vector<int>& prefix) {
      mass[prefix[t]] += std::exp(path_log_weight(prefix, log_evidence, weights, p));
    });
    double total = 0.0;
    for (double m : mass) total += m;
    for (int j = 0; j < k; ++j) out(t, j) = mass[j] / total;
  }
  return out;
}

std::map<std::vector<int>, double> enumerated_posterior(const Grid<double>& log_evidence,
                                                        const StickWeights& weights, double p) {
  auto paths = enumerate_unit_paths(log_evidence, weights, p);
  double top = -INFINITY;
  for (const auto& [_, lw] : paths) top = std::max(top, lw);
  double total = 0.0;
  for (auto& [_, lw] : paths) total += (lw = std::exp(lw - top));
  for (auto& [_, w] : paths) w /= total;
  return paths;
}

StickWeights random_weights(std::size_t periods, int truncation, Rng& rng) {
  StickWeights w(periods, truncation);
  for (std::size_t t = 0; t < periods; ++t) {
    for (int k = 0; k + 1 < truncation; ++k) w.pi(t, k) = 0.05 + 0.9 * rng.uniform();
    w.refresh(t);
  }
  return w;
}

std::vector<GewekeMoment> run_geweke(const GewekeOptions& options) {
  constexpr int kUnits = 4;
  constexpr int kPeriods = 3;
  constexpr int kTruncation = 3;
  constexpr long kTrials = 3;

  PanelDataset ds(kUnits, kPeriods, {"y"}, {});
  CellObservations shape;
  shape.binary = {{0, kTrials}};
  SamplerConfig config;
  config.truncation = kTruncation;
  config.gamma = 1.0;
  config.alpha_p = 1.0;
  config.beta_p = 1.0;
  config.model = default_emission_model(ds);
  config.update = options.update;
  const Concentration gamma(config.gamma);

  auto functionals = [](double p, double theta1, int occupied) {
    return std::vector<double>{p, p * p, theta1, theta1 * theta1, double(occupied),
                               double(occupied) * occupied};
  };
  const std::vector<std::string> names{"p", "p^2", "theta_1", "theta_1^2", "occupied",
                                       "occupied^2"};

  auto prior_state = [&](Rng& rng) {
    SamplerState s;
    s.p = rng.beta(config.alpha_p, config.beta_p);
    auto path = sample_prior_path(kUnits, kPeriods, kTruncation, gamma, s.p, rng);
    s.assignments = std::move(path.assignments);
    s.weights = std::move(path.weights);
    for (int k = 0; k < kTruncation; ++k) s.params.push_back(sample_prior_params(config.model, rng));
    return s;
  };

  Rng mc_rng(options.seed);
  std::vector<std::vector<double>> marginal(names.size());
  for (int s = 0; s < options.marginal_samples; ++s) {
    const auto state = prior_state(mc_rng);
    const auto h = functionals(state.p, state.params[0].theta[0],
                               occupancy(state.assignments.g).first);
    for (std::size_t j = 0; j < h.size(); ++j) marginal[j].push_back(h[j]);
  }

  Rng sc_rng(mix64(options.seed + 1));
  auto state = prior_state(sc_rng);
  std::vector<std::vector<double>> successive(names.size());
  for (int it = 0; it < options.successive_iterations; ++it) {
    for (int i = 0; i < kUnits; ++i) {
      for (int t = 0; t < kPeriods; ++t) {
        ds.cells(i, t) = simulate_cell(shape, state.params[state.assignments.g(i, t)], sc_rng);
      }
    }
    gibbs_sweep(state, ds, config, sc_rng);
    const auto h = functionals(state.p, state.params[0].theta[0],
                               occupancy(state.assignments.g).first);
    for (std::size_t j = 0; j < h.size(); ++j) successive[j].push_back(h[j]);
  }

  std::vector<GewekeMoment> out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    GewekeMoment m;
    m.name = names[j];
    m.marginal_mean = mean(marginal[j]);
    m.successive_mean = mean(successive[j]);
    const double var = sample_variance(marginal[j]) / marginal[j].size() +
                       batch_means_variance_of_mean(successive[j], 100);
    m.z = (m.marginal_mean - m.successive_mean) / std::sqrt(var);
    m.successive_ess = batch_means_ess(successive[j], 100);
    out.push_back(m);
  }
  return out;
}

}  // namespace dyndp::testing
