#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dyndp/emissions.hpp"
#include "dyndp/grid.hpp"
#include "dyndp/igcrp_prior.hpp"
#include "dyndp/panel_dataset.hpp"
#include "dyndp/rng.hpp"

// Blocked Gibbs sampler for the sticky dynamic DP mixture. One iteration
// updates, in order: cluster parameters, sticky indicators d, stickiness p,
// per-period stick weights, and every unit's whole label trajectory by
// forward filtering / backward sampling.

namespace dyndp {

enum class InitMode { Prior, SingleCluster };

/// How unit trajectories are redrawn in the last block of a sweep.
///
/// `Independent` treats units as conditionally independent given (q, p, Theta)
/// and may run them on several workers. `Coupled` also conditions on the
/// fact that period t + 1 stick fractions were drawn given period t counts;
/// units are then visited in order, each one seeing the others' labels. Only
/// `Coupled` leaves the joint posterior exactly invariant.
enum class AssignmentUpdate { Independent, Coupled };

struct SamplerConfig {
  int truncation = 10;
  int n_iterations = 2000;  // total sweeps, burn-in included
  int burn_in = 1000;
  int thinning = 1;
  int chains = 1;
  std::uint64_t seed = 1;
  double gamma = 1.0;
  double alpha_p = 1.0;
  double beta_p = 1.0;
  EmissionModel model;
  InitMode init = InitMode::Prior;
  AssignmentUpdate update = AssignmentUpdate::Coupled;
  /// Starting stickiness; drawn from Beta(alpha_p, beta_p) when unset.
  std::optional<double> initial_p;
  int workers = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// Also checks the emission model against the dataset's channel layout.
  void validate_for(const PanelDataset& dataset) const;

  int stored_draw_count() const;
  bool stores_iteration(int iteration) const;  // 1-based iteration
};

struct SamplerState {
  AssignmentState assignments;
  StickWeights weights;
  double p = 0.5;
  std::vector<ClusterParams> params;  // one per cluster label < K
  double log_joint = 0.0;
};

/// Filtered label probabilities for one unit, in log space; T x K with each
/// row normalized.
struct FilterTable {
  Grid<double> log_prob;
};

/// Raised when every label of some period has zero filtered probability.
class FilterUnderflow : public std::runtime_error {
 public:
  FilterUnderflow(std::size_t unit, std::size_t period);
  std::size_t unit() const { return unit_; }
  std::size_t period() const { return period_; }

 private:
  std::size_t unit_;
  std::size_t period_;
};

SamplerState initialize(const PanelDataset& dataset, const SamplerConfig& config, Rng& rng);

/// Redraws Theta_k for every k < K from its conditional; unoccupied clusters
/// get prior draws.
void sweep_params(SamplerState& state, const PanelDataset& dataset, const EmissionModel& model,
                  Rng& rng);

/// P(d = 1 | label unchanged, p, q) = p / (p + (1 - p) q).
double sticky_indicator_probability(double p, double q);

/// Redraws d(i, t) for t >= 1 using the weights currently held by the state.
void sweep_sticky_indicators(SamplerState& state, Rng& rng);

/// p ~ Beta(alpha_p + #{d = 1}, beta_p + #{d = 0}), counting periods t >= 1.
double sample_stickiness(const Grid<std::uint8_t>& d, double alpha_p, double beta_p, Rng& rng);

/// Conditional Beta parameters of period-t sticks: counts are all period
/// t - 1 labels plus the non-sticky period-t labels.
std::vector<BetaParams> stick_weight_posterior_params(const AssignmentState& assignments,
                                                      std::size_t t, Concentration gamma,
                                                      int truncation);

void sweep_stick_weights(SamplerState& state, Concentration gamma, Rng& rng);

/// T x K table of log f(Y_it | Theta_k); absent cells contribute 0.
Grid<double> unit_log_evidence(std::size_t unit, const PanelDataset& dataset,
                               const std::vector<ClusterParams>& params);

/// Forward recursion on a T x K log-evidence table:
///   t = 0:  a_0(k) ∝ q_0(k) e_0(k)
///   t >= 1: a_t(k) ∝ e_t(k) sum_l [(1 - p) q_t(k) + p 1{k = l}] a_{t-1}(l)
/// `unit` is only used for error reporting.
FilterTable forward_filter(const Grid<double>& log_evidence, const StickWeights& weights,
                           double p, std::size_t unit = 0);

FilterTable forward_filter(std::size_t unit, const PanelDataset& dataset,
                           const std::vector<ClusterParams>& params, const StickWeights& weights,
                           double p);

/// Draws g_T from the last filtered row, then each g_t backwards with weight
/// a_t(k) [(1 - p) q_{t+1}(g_{t+1}) + p 1{k = g_{t+1}}].
std::vector<int> backward_sample(const FilterTable& filter, const StickWeights& weights,
                                 double p, Rng& rng);

/// Redraws every unit's trajectory.
void sweep_assignments(SamplerState& state, const PanelDataset& dataset,
                       const SamplerConfig& config, Rng& rng);

/// One full iteration in the fixed block order; refreshes state.log_joint.
void gibbs_sweep(SamplerState& state, const PanelDataset& dataset, const SamplerConfig& config,
                 Rng& rng);

/// log p(Y, g, pi, p, Theta) with the sticky indicators summed out.
double log_joint(const SamplerState& state, const PanelDataset& dataset,
                 const SamplerConfig& config);

/// Number of distinct labels in use, and the largest one.
std::pair<int, int> occupancy(const Grid<int>& g);

struct SweepTrace {
  int iteration = 0;
  double log_joint = 0.0;
  double p = 0.0;
  int occupied = 0;
  int max_label = 0;
};

struct Draw {
  int iteration = 0;
  Grid<int> g;
  /// Drawn from p(d | g, p, q) for the stored g on a side stream, so it is
  /// consistent with the stored labels without perturbing the chain.
  Grid<std::uint8_t> d;
  double p = 0.0;
  std::vector<std::pair<int, ClusterParams>> occupied_params;
  double log_joint = 0.0;
};

struct PosteriorDraws {
  int chain = 0;
  std::uint64_t seed = 0;
  std::size_t n_units = 0;
  std::size_t n_periods = 0;
  int truncation = 0;
  std::vector<Draw> draws;
  std::vector<SweepTrace> trace;
  /// Fraction of post-burn-in sweeps whose largest label reached K - 1.
  double truncation_hit_rate = 0.0;
  bool truncation_warning = false;
};

/// Runs one chain. The chain's seed is derived from (config.seed, chain).
/// `on_draw`, when given, is called for each stored draw in order.
PosteriorDraws run_chain(const PanelDataset& dataset, const SamplerConfig& config,
                         int chain = 0,
                         const std::function<void(const Draw&)>& on_draw = {});

/// Runs config.chains chains, concurrently when config.workers > 1.
std::vector<PosteriorDraws> run_chains(const PanelDataset& dataset, const SamplerConfig& config);

std::uint64_t chain_seed(std::uint64_t seed, int chain);

}  // namespace dyndp
