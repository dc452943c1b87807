#include "dyndp/gibbs_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <thread>

namespace dyndp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Independent random streams inside one iteration.
enum StreamTag : std::uint64_t { kAssignStream = 1, kIndicatorReport = 2 };

double log_sum_exp(std::span<const double> xs) {
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (mx == kNegInf) return kNegInf;
  double s = 0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Runs fn(begin, end) over [0, n) split into `workers` contiguous chunks.
template <class Fn>
void parallel_chunks(std::size_t n, int workers, Fn fn) {
  const std::size_t w = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (w <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  {
    std::vector<std::jthread> threads;
    const std::size_t chunk = (n + w - 1) / w;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t begin = c * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) continue;
      threads.emplace_back([&, c, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<int> period_counts(const Grid<int>& g, std::size_t t, int truncation) {
  std::vector<int> counts(truncation, 0);
  for (std::size_t i = 0; i < g.rows(); ++i) ++counts[g(i, t)];
  return counts;
}

// Log of the period-(t+1) stick density ratio from placing one extra unit at
// each label k, given the other units' period-t counts. Constant terms that
// do not depend on k are dropped.
void add_stick_coupling(std::span<const int> counts_without_unit, std::span<const double> pi_next,
                        double gamma, std::span<double> evidence_row) {
  const int truncation = static_cast<int>(counts_without_unit.size());
  std::vector<double> tail(truncation + 1, 0.0);
  for (int k = truncation - 1; k >= 0; --k) tail[k] = tail[k + 1] + counts_without_unit[k];
  double prefix = 0.0;  // sum over j < k of the b_j increments
  for (int k = 0; k < truncation; ++k) {
    double term = prefix;
    if (k + 1 < truncation) {
      const double a = 1.0 + counts_without_unit[k];
      const double b = gamma + tail[k + 1];
      term += std::log(a + b) - std::log(a) + std::log(pi_next[k]);
      prefix += std::log(a + b) - std::log(b) + std::log1p(-pi_next[k]);
    }
    evidence_row[k] += term;
  }
}

void write_trajectory(Grid<int>& g, std::size_t unit, const std::vector<int>& path) {
  for (std::size_t t = 0; t < path.size(); ++t) g(unit, t) = path[t];
}

}  // namespace

FilterUnderflow::FilterUnderflow(std::size_t unit, std::size_t period)
    : std::runtime_error("forward filter underflow at unit " + std::to_string(unit) +
                         ", period " + std::to_string(period) +
                         ": data impossible under every cluster"),
      unit_(unit),
      period_(period) {}

void SamplerConfig::validate() const {
  if (truncation < 2) throw std::invalid_argument("truncation (K) must be at least 2");
  if (n_iterations < 1) throw std::invalid_argument("n_iterations must be positive");
  if (burn_in < 0 || burn_in >= n_iterations) {
    throw std::invalid_argument("burn_in must satisfy 0 <= burn_in < n_iterations");
  }
  if (thinning < 1) throw std::invalid_argument("thinning must be at least 1");
  if (chains < 1) throw std::invalid_argument("chains must be at least 1");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  static_cast<void>(Concentration{gamma});
  Stickiness{initial_p.value_or(0.5), alpha_p, beta_p}.validate();
  model.validate();
}

void SamplerConfig::validate_for(const PanelDataset& dataset) const {
  validate();
  dataset.validate();
  if (model.bernoulli.size() != dataset.binary_channels.size() ||
      model.poisson.size() != dataset.count_channels.size()) {
    throw std::invalid_argument("emission model channel count does not match the dataset");
  }
  for (std::size_t c = 0; c < model.bernoulli.size(); ++c) {
    if (model.bernoulli[c].name != dataset.binary_channels[c]) {
      throw std::invalid_argument("binary channel '" + model.bernoulli[c].name +
                                  "' does not match dataset channel '" +
                                  dataset.binary_channels[c] + "'");
    }
  }
  for (std::size_t c = 0; c < model.poisson.size(); ++c) {
    if (model.poisson[c].name != dataset.count_channels[c]) {
      throw std::invalid_argument("count channel '" + model.poisson[c].name +
                                  "' does not match dataset channel '" +
                                  dataset.count_channels[c] + "'");
    }
  }
}

int SamplerConfig::stored_draw_count() const {
  return (n_iterations - burn_in + thinning - 1) / thinning;
}

bool SamplerConfig::stores_iteration(int iteration) const {
  return iteration > burn_in && (iteration - burn_in - 1) % thinning == 0;
}

std::uint64_t chain_seed(std::uint64_t seed, int chain) {
  return chain == 0 ? seed : mix64(seed ^ mix64(static_cast<std::uint64_t>(chain)));
}

SamplerState initialize(const PanelDataset& dataset, const SamplerConfig& config, Rng& rng) {
  config.validate_for(dataset);
  const int n = static_cast<int>(dataset.n_units());
  const int periods = static_cast<int>(dataset.n_periods());
  const int k_max = config.truncation;
  const Concentration gamma(config.gamma);

  SamplerState state;
  state.p = config.initial_p ? *config.initial_p : rng.beta(config.alpha_p, config.beta_p);
  if (config.init == InitMode::Prior) {
    auto path = sample_prior_path(n, periods, k_max, gamma, state.p, rng);
    state.assignments = std::move(path.assignments);
    state.weights = std::move(path.weights);
  } else {
    state.assignments = AssignmentState(n, periods);
    state.weights = StickWeights(periods, k_max);
    std::vector<int> prev(k_max, 0);
    for (int t = 0; t < periods; ++t) {
      const auto pi = sample_stick_weights_prior(prev, gamma, k_max, rng);
      std::copy(pi.begin(), pi.end(), state.weights.pi.row(t).begin());
      state.weights.refresh(t);
      prev = period_counts(state.assignments.g, t, k_max);
    }
  }
  std::fill(state.assignments.d.data().begin(), state.assignments.d.data().end(), 0);
  state.params.reserve(k_max);
  for (int k = 0; k < k_max; ++k) state.params.push_back(sample_prior_params(config.model, rng));
  state.log_joint = log_joint(state, dataset, config);
  return state;
}

void sweep_params(SamplerState& state, const PanelDataset& dataset, const EmissionModel& model,
                  Rng& rng) {
  const int k_max = static_cast<int>(state.params.size());
  const auto stats = sufficient_stats_by_cluster(dataset, state.assignments.g, k_max);
  for (int k = 0; k < k_max; ++k) state.params[k] = sample_cluster_params(model, stats[k], rng);
}

double sticky_indicator_probability(double p, double q) {
  if (p <= 0) return 0.0;
  return p / (p + (1.0 - p) * q);
}

void sweep_sticky_indicators(SamplerState& state, Rng& rng) {
  auto& g = state.assignments.g;
  auto& d = state.assignments.d;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    d(i, 0) = 0;
    for (std::size_t t = 1; t < g.cols(); ++t) {
      if (g(i, t) != g(i, t - 1)) {
        d(i, t) = 0;
        continue;
      }
      const double prob = sticky_indicator_probability(state.p, state.weights.q(t, g(i, t)));
      d(i, t) = rng.bernoulli(prob) ? 1 : 0;
    }
  }
}

double sample_stickiness(const Grid<std::uint8_t>& d, double alpha_p, double beta_p, Rng& rng) {
  double sticky = 0;
  double fresh = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t t = 1; t < d.cols(); ++t) {
      if (d(i, t)) {
        sticky += 1;
      } else {
        fresh += 1;
      }
    }
  }
  return rng.beta(alpha_p + sticky, beta_p + fresh);
}

std::vector<BetaParams> stick_weight_posterior_params(const AssignmentState& assignments,
                                                      std::size_t t, Concentration gamma,
                                                      int truncation) {
  const auto& g = assignments.g;
  std::vector<int> counts(truncation, 0);
  if (t > 0) counts = period_counts(g, t - 1, truncation);
  for (std::size_t i = 0; i < g.rows(); ++i) {
    if (t == 0 || !assignments.d(i, t)) ++counts.at(g(i, t));
  }
  return stick_beta_params(counts, gamma, truncation);
}

void sweep_stick_weights(SamplerState& state, Concentration gamma, Rng& rng) {
  const int k_max = static_cast<int>(state.weights.truncation());
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  for (std::size_t t = 0; t < state.weights.n_periods(); ++t) {
    const auto params = stick_weight_posterior_params(state.assignments, t, gamma, k_max);
    for (int k = 0; k + 1 < k_max; ++k) {
      state.weights.pi(t, k) = std::clamp(rng.beta(params[k].a, params[k].b), lo, hi);
    }
    state.weights.pi(t, k_max - 1) = 1.0;
    state.weights.refresh(t);
  }
}

Grid<double> unit_log_evidence(std::size_t unit, const PanelDataset& dataset,
                               const std::vector<ClusterParams>& params) {
  Grid<double> ev(dataset.n_periods(), params.size(), 0.0);
  for (std::size_t t = 0; t < dataset.n_periods(); ++t) {
    if (!dataset.present(unit, t)) continue;
    const auto& cell = dataset.cells(unit, t);
    for (std::size_t k = 0; k < params.size(); ++k) ev(t, k) = log_likelihood(cell, params[k]);
  }
  return ev;
}

FilterTable forward_filter(const Grid<double>& log_evidence, const StickWeights& weights,
                           double p, std::size_t unit) {
  const std::size_t periods = log_evidence.rows();
  const std::size_t k_max = log_evidence.cols();
  FilterTable table{Grid<double>(periods, k_max, kNegInf)};
  auto& f = table.log_prob;
  for (std::size_t t = 0; t < periods; ++t) {
    auto row = f.row(t);
    for (std::size_t k = 0; k < k_max; ++k) {
      double prior;
      if (t == 0) {
        prior = weights.q(0, k);
      } else {
        prior = (1.0 - p) * weights.q(t, k) + p * std::exp(f(t - 1, k));
      }
      row[k] = (prior > 0 ? std::log(prior) : kNegInf) + log_evidence(t, k);
    }
    const double norm = log_sum_exp(row);
    if (norm == kNegInf || std::isnan(norm)) throw FilterUnderflow(unit, t);
    for (auto& x : row) x -= norm;
  }
  return table;
}

FilterTable forward_filter(std::size_t unit, const PanelDataset& dataset,
                           const std::vector<ClusterParams>& params, const StickWeights& weights,
                           double p) {
  return forward_filter(unit_log_evidence(unit, dataset, params), weights, p, unit);
}

std::vector<int> backward_sample(const FilterTable& filter, const StickWeights& weights,
                                 double p, Rng& rng) {
  const auto& f = filter.log_prob;
  const std::size_t periods = f.rows();
  const std::size_t k_max = f.cols();
  std::vector<int> path(periods);
  path[periods - 1] = rng.categorical_log(f.row(periods - 1));
  std::vector<double> w(k_max);
  for (std::size_t t = periods - 1; t-- > 0;) {
    const int next = path[t + 1];
    const double fresh = (1.0 - p) * weights.q(t + 1, next);
    for (std::size_t k = 0; k < k_max; ++k) {
      const double trans = fresh + (static_cast<int>(k) == next ? p : 0.0);
      w[k] = f(t, k) + (trans > 0 ? std::log(trans) : kNegInf);
    }
    path[t] = rng.categorical_log(w);
  }
  return path;
}

void sweep_assignments(SamplerState& state, const PanelDataset& dataset,
                       const SamplerConfig& config, Rng& rng) {
  const Rng streams(rng.next_u64());
  auto& g = state.assignments.g;
  const std::size_t n = g.rows();
  const std::size_t periods = g.cols();
  const int k_max = config.truncation;

  if (config.update == AssignmentUpdate::Independent) {
    parallel_chunks(n, config.workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        Rng unit_rng = streams.child(i);
        const auto filter = forward_filter(i, dataset, state.params, state.weights, state.p);
        write_trajectory(g, i, backward_sample(filter, state.weights, state.p, unit_rng));
      }
    });
    return;
  }

  // Coupled: period-t counts enter the density of the period-(t+1) sticks,
  // so each unit is filtered against the others' current labels.
  Grid<int> counts(periods, k_max, 0);
  for (std::size_t t = 0; t < periods; ++t) {
    for (std::size_t i = 0; i < n; ++i) ++counts(t, g(i, t));
  }
  for (std::size_t i = 0; i < n; ++i) {
    Rng unit_rng = streams.child(i);
    for (std::size_t t = 0; t < periods; ++t) --counts(t, g(i, t));
    auto evidence = unit_log_evidence(i, dataset, state.params);
    for (std::size_t t = 0; t + 1 < periods; ++t) {
      add_stick_coupling(counts.row(t), state.weights.pi.row(t + 1), config.gamma,
                         evidence.row(t));
    }
    const auto filter = forward_filter(evidence, state.weights, state.p, i);
    write_trajectory(g, i, backward_sample(filter, state.weights, state.p, unit_rng));
    for (std::size_t t = 0; t < periods; ++t) ++counts(t, g(i, t));
  }
}

void gibbs_sweep(SamplerState& state, const PanelDataset& dataset, const SamplerConfig& config,
                 Rng& rng) {
  sweep_params(state, dataset, config.model, rng);
  sweep_sticky_indicators(state, rng);
  state.p = sample_stickiness(state.assignments.d, config.alpha_p, config.beta_p, rng);
  sweep_stick_weights(state, Concentration(config.gamma), rng);
  sweep_assignments(state, dataset, config, rng);
  state.log_joint = log_joint(state, dataset, config);
}

double log_joint(const SamplerState& state, const PanelDataset& dataset,
                 const SamplerConfig& config) {
  const auto& g = state.assignments.g;
  const auto& q = state.weights.q;
  const std::size_t n = g.rows();
  const std::size_t periods = g.cols();
  const int k_max = config.truncation;
  const Concentration gamma(config.gamma);

  double lj = log_beta_density(state.p, config.alpha_p, config.beta_p);
  for (const auto& params : state.params) lj += log_prior_density(config.model, params);

  std::vector<int> prev(k_max, 0);
  for (std::size_t t = 0; t < periods; ++t) {
    const auto sticks = stick_beta_params(prev, gamma, k_max);
    for (int k = 0; k + 1 < k_max; ++k) {
      lj += log_beta_density(state.weights.pi(t, k), sticks[k].a, sticks[k].b);
    }
    prev = period_counts(g, t, k_max);
  }
  for (std::size_t i = 0; i < n; ++i) {
    lj += std::log(q(0, g(i, 0)));
    for (std::size_t t = 1; t < periods; ++t) {
      const double stay = g(i, t) == g(i, t - 1) ? state.p : 0.0;
      lj += std::log(stay + (1.0 - state.p) * q(t, g(i, t)));
    }
    for (std::size_t t = 0; t < periods; ++t) {
      if (dataset.present(i, t)) {
        lj += log_likelihood(dataset.cells(i, t), state.params[g(i, t)]);
      }
    }
  }
  return lj;
}

std::pair<int, int> occupancy(const Grid<int>& g) {
  std::set<int> labels(g.data().begin(), g.data().end());
  return {static_cast<int>(labels.size()), labels.empty() ? -1 : *labels.rbegin()};
}

PosteriorDraws run_chain(const PanelDataset& dataset, const SamplerConfig& config, int chain,
                         const std::function<void(const Draw&)>& on_draw) {
  PosteriorDraws out;
  out.chain = chain;
  out.seed = chain_seed(config.seed, chain);
  out.n_units = dataset.n_units();
  out.n_periods = dataset.n_periods();
  out.truncation = config.truncation;

  Rng rng(out.seed);
  const Rng report_streams = Rng(out.seed).child(kIndicatorReport);
  SamplerState state = initialize(dataset, config, rng);

  int post_burn = 0;
  int hits = 0;
  for (int it = 1; it <= config.n_iterations; ++it) {
    gibbs_sweep(state, dataset, config, rng);
    const auto [occupied, max_label] = occupancy(state.assignments.g);
    out.trace.push_back({it, state.log_joint, state.p, occupied, max_label});
    if (it > config.burn_in) {
      ++post_burn;
      if (max_label == config.truncation - 1) ++hits;
    }
    if (!config.stores_iteration(it)) continue;

    Draw draw;
    draw.iteration = it;
    draw.g = state.assignments.g;
    draw.p = state.p;
    draw.log_joint = state.log_joint;
    SamplerState reported = state;
    Rng side = report_streams.child(static_cast<std::uint64_t>(it));
    sweep_sticky_indicators(reported, side);
    draw.d = std::move(reported.assignments.d);
    std::set<int> used(draw.g.data().begin(), draw.g.data().end());
    for (int k : used) draw.occupied_params.emplace_back(k, state.params[k]);
    if (on_draw) on_draw(draw);
    out.draws.push_back(std::move(draw));
  }
  out.truncation_hit_rate = post_burn > 0 ? static_cast<double>(hits) / post_burn : 0.0;
  out.truncation_warning = out.truncation_hit_rate > 0.01;
  return out;
}

std::vector<PosteriorDraws> run_chains(const PanelDataset& dataset, const SamplerConfig& config) {
  config.validate_for(dataset);
  std::vector<PosteriorDraws> results(config.chains);
  SamplerConfig per_chain = config;
  if (config.chains > 1 && config.workers > 1) per_chain.workers = 1;
  parallel_chunks(config.chains, config.chains > 1 ? config.workers : 1,
                  [&](std::size_t begin, std::size_t end) {
                    for (std::size_t c = begin; c < end; ++c) {
                      results[c] = run_chain(dataset, per_chain, static_cast<int>(c));
                    }
                  });
  return results;
}

}  // namespace dyndp
