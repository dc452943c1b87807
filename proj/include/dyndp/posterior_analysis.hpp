#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dyndp/gibbs_sampler.hpp"
#include "dyndp/grid.hpp"

// Label-invariant summaries of stored draws. Every quantity here depends on
// the draws only through equalities between labels, so any relabeling of a
// draw leaves the output unchanged.

namespace dyndp {

/// One N x T label matrix per stored draw, pooled over chains.
using LabelDraws = std::vector<Grid<int>>;

LabelDraws collect_labels(const std::vector<PosteriorDraws>& chains);

struct CellRef {
  std::size_t unit = 0;
  std::size_t period = 0;
  friend bool operator==(const CellRef&, const CellRef&) = default;
};

/// Fraction of draws with g[a] == g[b]. Rejects a == b and empty draws.
double cocluster_probability(const LabelDraws& draws, CellRef a, CellRef b);

/// Fraction of draws with g[unit][period] != g[unit][period - 1]; period is
/// 0-based and must be at least 1.
double change_probability(const LabelDraws& draws, std::size_t unit, std::size_t period);

/// N x T matrix of change probabilities; column 0 is NaN.
Grid<double> change_probability_matrix(const LabelDraws& draws);

/// Pairwise co-clustering probabilities among `cells` (M x M, unit diagonal).
Grid<double> cocluster_matrix(const LabelDraws& draws, std::span<const CellRef> cells);

/// Equal-tailed interval from type-7 (linear interpolation) sample quantiles
/// at (1 - level) / 2 and (1 + level) / 2.
std::pair<double, double> credible_interval(std::span<const double> samples, double level);

/// Type-7 sample quantile: h = (n - 1) prob, interpolating between order
/// statistics floor(h) and floor(h) + 1.
double quantile(std::span<const double> samples, double prob);

enum class PairMode { Pooled, WithinKey };

/// What the interval of an averaged probability is taken over.
///
/// `PerDrawMean`: each draw gives the share of pairs that co-cluster; the
/// interval spans those shares. `PairDistribution`: the interval spans the
/// pair-level co-clustering probabilities.
enum class IntervalMode { PerDrawMean, PairDistribution };

struct SummaryPoint {
  std::size_t period = 0;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n_pairs = 0;  // zero means no pair was available; values are NaN
};

struct SummarySeries {
  std::string name;
  std::vector<SummaryPoint> points;
};

struct AlignmentQuery {
  std::vector<std::size_t> group_a;
  std::vector<std::size_t> group_b;
  PairMode mode = PairMode::Pooled;
  /// Per-unit key (e.g. state); required for WithinKey.
  std::vector<std::string> keys;
  double level = 0.95;
  IntervalMode interval = IntervalMode::PerDrawMean;
  /// N x T presence mask; pairs touching an absent cell are skipped.
  const Grid<std::uint8_t>* present = nullptr;
};

/// Same-period co-clustering of unit pairs drawn across the two groups.
/// Pooled uses every cross pair (a != b, unordered when the groups overlap);
/// WithinKey pairs the unit of each key in group_a with the unit of the same
/// key in group_b.
SummarySeries grouped_alignment_series(const LabelDraws& draws, const AlignmentQuery& query);

/// Unordered unit pairs used by grouped_alignment_series for one query.
std::vector<std::pair<std::size_t, std::size_t>> alignment_pairs(const AlignmentQuery& query);

}  // namespace dyndp
