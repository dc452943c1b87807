#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "dyndp/grid.hpp"
#include "dyndp/rng.hpp"

// Generative machinery for the intergenerational Chinese restaurant process:
// the sequential restaurant form, the truncated stick-breaking form, and an
// exhaustive enumeration oracle for tiny instances.
//
// Cluster labels are 0-based throughout the library.

namespace dyndp {

/// DP concentration, gamma > 0.
class Concentration {
 public:
  explicit Concentration(double gamma);
  double value() const { return gamma_; }

 private:
  double gamma_;
};

/// Stickiness p and its Beta(alpha_p, beta_p) prior.
struct Stickiness {
  double p = 0.5;
  double alpha_p = 1.0;
  double beta_p = 1.0;

  void validate() const;
};

struct BetaParams {
  double a;
  double b;
};

/// Per-period stick fractions `pi` and mixture weights `q`, both T x K.
/// The last stick of every period is pinned to one.
struct StickWeights {
  Grid<double> pi;
  Grid<double> q;

  StickWeights() = default;
  StickWeights(std::size_t n_periods, std::size_t truncation);

  std::size_t n_periods() const { return pi.rows(); }
  std::size_t truncation() const { return pi.cols(); }
  /// Recompute row `t` of q from row `t` of pi.
  void refresh(std::size_t t);
};

/// g: N x T cluster labels; d: N x T sticky indicators with d(i, 0) == 0.
struct AssignmentState {
  Grid<int> g;
  Grid<std::uint8_t> d;

  AssignmentState() = default;
  AssignmentState(std::size_t n_units, std::size_t n_periods)
      : g(n_units, n_periods, 0), d(n_units, n_periods, 0) {}

  std::size_t n_units() const { return g.rows(); }
  std::size_t n_periods() const { return g.cols(); }
  /// Throws std::logic_error if d = 1 anywhere the label changed, if d is set
  /// in the first period, or if a label falls outside [0, truncation).
  void check(int truncation) const;
};

/// Sequential CRP for the first period. Unit 0 seeds cluster 0; labels are
/// issued in order of first appearance.
std::vector<int> sample_initial_assignments(int n_units, Concentration gamma,
                                            Rng& rng);

/// One intergenerational step. Each unit, in order, copies its previous label
/// with probability p; otherwise it is seated by a CRP whose table counts are
/// the whole previous generation plus the already-seated non-sticky units of
/// the current generation. New tables take the next unused label.
std::vector<int> sample_transition(std::span<const int> prev_assignments,
                                   double p, Concentration gamma, Rng& rng);

/// q_k = pi_k * prod_{l<k} (1 - pi_l). Every entry must lie in [0, 1] and the
/// final entry must equal 1.
std::vector<double> stick_break(std::span<const double> pi_row);

/// Beta parameters (1 + c_k, gamma + sum_{l>k} c_l) for the first K - 1
/// sticks, given per-cluster counts (shorter vectors are zero-padded).
std::vector<BetaParams> stick_beta_params(std::span<const int> counts,
                                          Concentration gamma, int truncation);

/// Draw a truncated row of stick fractions from stick_beta_params(counts);
/// the K-th fraction is pinned to 1. Fractions below the last are kept
/// strictly inside (0, 1).
std::vector<double> sample_stick_fractions(std::span<const int> counts,
                                           Concentration gamma, int truncation,
                                           Rng& rng);

/// Prior for period t given the previous period's occupancy counts:
/// pi_k ~ Beta(1 + n_k, gamma + N - sum_{l<=k} n_l). All-zero counts give the
/// first-period Beta(1, gamma) sticks.
std::vector<double> sample_stick_weights_prior(std::span<const int> prev_counts,
                                               Concentration gamma,
                                               int truncation, Rng& rng);

/// Occupancy of each label in [0, truncation) among `labels`.
std::vector<int> count_labels(std::span<const int> labels, int truncation);

struct PriorPath {
  AssignmentState assignments;
  StickWeights weights;
};

/// Full stick-breaking generative path: period-1 sticks and labels, then for
/// each later period fresh sticks given the previous counts, a sticky
/// indicator per unit, and a weight draw for non-sticky units.
PriorPath sample_prior_path(int n_units, int n_periods, int truncation,
                            Concentration gamma, double p, Rng& rng);

/// Assignment matrix keyed period-major (all units of period 1, then period
/// 2, ...) with labels renumbered by first appearance in that order.
using PartitionKey = std::vector<int>;
using PartitionDistribution = std::map<PartitionKey, double>;

PartitionKey canonical_partition_key(const Grid<int>& g);

/// Exact law of the canonical assignment matrix under the sequential
/// restaurant process, computed by enumerating every seating path.
///
/// With `truncation` set, the seating probabilities are instead the exact
/// posterior-predictive weights of the K-truncated stick-breaking prior,
/// which is the law the stick-breaking sampler targets at finite K.
///
/// Throws std::length_error when the path count bound exceeds `max_paths`.
PartitionDistribution enumerate_partition_distribution(
    int n_units, int n_periods, double p, Concentration gamma,
    std::optional<int> truncation = std::nullopt,
    std::size_t max_paths = 2'000'000);

/// Total variation distance between two distributions on the same keys.
double total_variation(const PartitionDistribution& a,
                       const PartitionDistribution& b);

}  // namespace dyndp
