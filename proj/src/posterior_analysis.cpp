#include "dyndp/posterior_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace dyndp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_draws(const LabelDraws& draws) {
  if (draws.empty()) throw std::invalid_argument("no posterior draws");
}

void require_cell(const LabelDraws& draws, CellRef c) {
  if (c.unit >= draws.front().rows() || c.period >= draws.front().cols()) {
    throw std::out_of_range("cell (" + std::to_string(c.unit) + ", " + std::to_string(c.period) +
                            ") outside the panel");
  }
}

}  // namespace

LabelDraws collect_labels(const std::vector<PosteriorDraws>& chains) {
  LabelDraws out;
  for (const auto& chain : chains) {
    for (const auto& d : chain.draws) out.push_back(d.g);
  }
  return out;
}

double cocluster_probability(const LabelDraws& draws, CellRef a, CellRef b) {
  require_draws(draws);
  if (a == b) throw std::invalid_argument("co-clustering of a cell with itself");
  require_cell(draws, a);
  require_cell(draws, b);
  std::size_t same = 0;
  for (const auto& g : draws) same += g(a.unit, a.period) == g(b.unit, b.period) ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(draws.size());
}

double change_probability(const LabelDraws& draws, std::size_t unit, std::size_t period) {
  require_draws(draws);
  if (period == 0) throw std::invalid_argument("change probability needs a preceding period");
  require_cell(draws, {unit, period});
  std::size_t changed = 0;
  for (const auto& g : draws) changed += g(unit, period) != g(unit, period - 1) ? 1 : 0;
  return static_cast<double>(changed) / static_cast<double>(draws.size());
}

Grid<double> change_probability_matrix(const LabelDraws& draws) {
  require_draws(draws);
  const std::size_t n = draws.front().rows();
  const std::size_t periods = draws.front().cols();
  Grid<double> out(n, periods, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out(i, 0) = kNaN;
    for (std::size_t t = 1; t < periods; ++t) out(i, t) = change_probability(draws, i, t);
  }
  return out;
}

Grid<double> cocluster_matrix(const LabelDraws& draws, std::span<const CellRef> cells) {
  require_draws(draws);
  for (auto c : cells) require_cell(draws, c);
  const std::size_t m = cells.size();
  Grid<std::uint32_t> hits(m, m, 0);
  std::vector<int> labels(m);
  for (const auto& g : draws) {
    for (std::size_t a = 0; a < m; ++a) labels[a] = g(cells[a].unit, cells[a].period);
    for (std::size_t a = 0; a < m; ++a) {
      const int la = labels[a];
      auto row = hits.row(a);
      for (std::size_t b = a + 1; b < m; ++b) row[b] += labels[b] == la ? 1u : 0u;
    }
  }
  Grid<double> out(m, m, 1.0);
  const double n = static_cast<double>(draws.size());
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      out(a, b) = out(b, a) = hits(a, b) / n;
    }
  }
  return out;
}

double quantile(std::span<const double> samples, double prob) {
  if (samples.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(prob >= 0 && prob <= 1)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::pair<double, double> credible_interval(std::span<const double> samples, double level) {
  if (samples.empty()) throw std::invalid_argument("credible interval of an empty sample");
  if (!(level > 0 && level < 1)) throw std::invalid_argument("credible level must be in (0, 1)");
  const double tail = (1.0 - level) / 2.0;
  return {quantile(samples, tail), quantile(samples, 1.0 - tail)};
}

std::vector<std::pair<std::size_t, std::size_t>> alignment_pairs(const AlignmentQuery& query) {
  if (query.group_a.empty() || query.group_b.empty()) {
    throw std::invalid_argument("alignment groups must be nonempty");
  }
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  auto add = [&](std::size_t a, std::size_t b) {
    if (a != b) pairs.emplace(std::min(a, b), std::max(a, b));
  };
  if (query.mode == PairMode::Pooled) {
    for (auto a : query.group_a) {
      for (auto b : query.group_b) add(a, b);
    }
  } else {
    auto by_key = [&](const std::vector<std::size_t>& group, const char* name) {
      std::map<std::string, std::size_t> out;
      for (auto u : group) {
        if (u >= query.keys.size()) {
          throw std::invalid_argument(std::string("group ") + name + " has a unit without a key");
        }
        if (!out.emplace(query.keys[u], u).second) {
          throw std::invalid_argument(std::string("key '") + query.keys[u] +
                                      "' selects more than one unit in group " + name);
        }
      }
      return out;
    };
    const auto a_keys = by_key(query.group_a, "a");
    const auto b_keys = by_key(query.group_b, "b");
    for (const auto& [key, a] : a_keys) {
      auto it = b_keys.find(key);
      if (it != b_keys.end()) add(a, it->second);
    }
  }
  return {pairs.begin(), pairs.end()};
}

SummarySeries grouped_alignment_series(const LabelDraws& draws, const AlignmentQuery& query) {
  require_draws(draws);
  const auto pairs = alignment_pairs(query);
  const std::size_t n = draws.front().rows();
  const std::size_t periods = draws.front().cols();
  for (auto [a, b] : pairs) {
    if (a >= n || b >= n) throw std::out_of_range("alignment unit outside the panel");
  }

  SummarySeries series;
  std::vector<double> per_draw(draws.size());
  for (std::size_t t = 0; t < periods; ++t) {
    std::vector<std::pair<std::size_t, std::size_t>> active;
    for (auto pr : pairs) {
      if (query.present && (!(*query.present)(pr.first, t) || !(*query.present)(pr.second, t))) {
        continue;
      }
      active.push_back(pr);
    }
    SummaryPoint point;
    point.period = t;
    point.n_pairs = active.size();
    if (active.empty()) {
      point.estimate = point.lower = point.upper = kNaN;
      series.points.push_back(point);
      continue;
    }
    std::vector<double> per_pair(active.size(), 0.0);
    for (std::size_t s = 0; s < draws.size(); ++s) {
      const auto& g = draws[s];
      std::size_t same = 0;
      for (std::size_t j = 0; j < active.size(); ++j) {
        if (g(active[j].first, t) == g(active[j].second, t)) {
          ++same;
          per_pair[j] += 1.0;
        }
      }
      per_draw[s] = static_cast<double>(same) / static_cast<double>(active.size());
    }
    for (auto& v : per_pair) v /= static_cast<double>(draws.size());
    double total = 0;
    for (double v : per_draw) total += v;
    point.estimate = total / static_cast<double>(draws.size());
    const auto [lo, hi] = credible_interval(
        query.interval == IntervalMode::PerDrawMean ? std::span<const double>(per_draw)
                                                    : std::span<const double>(per_pair),
        query.level);
    // With few pairs the per-draw shares are discrete and the equal-tailed
    // interval can miss the mean; widen it to cover the estimate.
    point.lower = std::min(lo, point.estimate);
    point.upper = std::max(hi, point.estimate);
    series.points.push_back(point);
  }
  return series;
}

}  // namespace dyndp
