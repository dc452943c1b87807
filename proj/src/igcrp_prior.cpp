#include "dyndp/igcrp_prior.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace dyndp {

Concentration::Concentration(double gamma) : gamma_(gamma) {
  if (!(gamma > 0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("concentration gamma must be positive and finite, got " +
                                std::to_string(gamma));
  }
}

void Stickiness::validate() const {
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("stickiness p must lie in [0, 1]");
  if (!(alpha_p > 0) || !(beta_p > 0)) {
    throw std::invalid_argument("stickiness prior shapes alpha_p, beta_p must be positive");
  }
}

StickWeights::StickWeights(std::size_t n_periods, std::size_t truncation)
    : pi(n_periods, truncation, 0.0), q(n_periods, truncation, 0.0) {
  for (std::size_t t = 0; t < n_periods; ++t) {
    pi(t, truncation - 1) = 1.0;
    refresh(t);
  }
}

void StickWeights::refresh(std::size_t t) {
  double remaining = 1.0;
  for (std::size_t k = 0; k < truncation(); ++k) {
    q(t, k) = pi(t, k) * remaining;
    remaining *= 1.0 - pi(t, k);
  }
}

void AssignmentState::check(int truncation) const {
  if (d.rows() != g.rows() || d.cols() != g.cols()) {
    throw std::logic_error("assignment and indicator matrices differ in shape");
  }
  for (std::size_t i = 0; i < n_units(); ++i) {
    for (std::size_t t = 0; t < n_periods(); ++t) {
      if (g(i, t) < 0 || g(i, t) >= truncation) {
        throw std::logic_error("cluster label out of range at unit " + std::to_string(i));
      }
      if (d(i, t) == 0) continue;
      if (t == 0) throw std::logic_error("sticky indicator set in the first period");
      if (g(i, t) != g(i, t - 1)) {
        throw std::logic_error("sticky indicator set where the label changed");
      }
    }
  }
}

std::vector<int> sample_initial_assignments(int n_units, Concentration gamma, Rng& rng) {
  if (n_units < 1) throw std::invalid_argument("n_units must be at least 1");
  std::vector<int> labels;
  labels.reserve(n_units);
  std::vector<double> weights;  // table sizes, then gamma for a new table
  for (int i = 0; i < n_units; ++i) {
    weights.push_back(gamma.value());
    const int choice = rng.categorical(weights);
    weights.pop_back();
    if (choice == static_cast<int>(weights.size())) weights.push_back(0.0);
    weights[choice] += 1.0;
    labels.push_back(choice);
  }
  return labels;
}

std::vector<int> sample_transition(std::span<const int> prev_assignments, double p,
                                   Concentration gamma, Rng& rng) {
  if (prev_assignments.empty()) throw std::invalid_argument("previous generation is empty");
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("stickiness p must lie in [0, 1]");

  int next_label = *std::max_element(prev_assignments.begin(), prev_assignments.end()) + 1;
  std::vector<double> seats(next_label, 0.0);
  for (int g : prev_assignments) seats[g] += 1.0;

  std::vector<int> current;
  current.reserve(prev_assignments.size());
  for (int previous : prev_assignments) {
    if (rng.bernoulli(p)) {
      current.push_back(previous);
      continue;
    }
    seats.push_back(gamma.value());
    int choice = rng.categorical(seats);
    seats.pop_back();
    if (choice == static_cast<int>(seats.size())) {
      choice = next_label++;
      seats.resize(next_label, 0.0);
    }
    seats[choice] += 1.0;
    current.push_back(choice);
  }
  return current;
}

std::vector<double> stick_break(std::span<const double> pi_row) {
  if (pi_row.empty()) throw std::invalid_argument("stick_break needs at least one stick");
  for (double v : pi_row) {
    if (!(v >= 0 && v <= 1)) {
      throw std::invalid_argument("stick fraction outside [0, 1]: " + std::to_string(v));
    }
  }
  if (pi_row.back() != 1.0) {
    throw std::invalid_argument("last stick fraction must be pinned to 1");
  }
  std::vector<double> q(pi_row.size());
  double remaining = 1.0;
  for (std::size_t k = 0; k < pi_row.size(); ++k) {
    q[k] = pi_row[k] * remaining;
    remaining *= 1.0 - pi_row[k];
  }
  return q;
}

std::vector<BetaParams> stick_beta_params(std::span<const int> counts, Concentration gamma,
                                          int truncation) {
  if (truncation < 2) throw std::invalid_argument("truncation level must be at least 2");
  std::vector<double> tail(truncation + 1, 0.0);  // tail[k] = sum_{l>=k} c_l
  for (int k = truncation - 1; k >= 0; --k) {
    const double c = k < static_cast<int>(counts.size()) ? counts[k] : 0;
    if (c < 0) throw std::invalid_argument("negative cluster count");
    tail[k] = tail[k + 1] + c;
  }
  if (static_cast<int>(counts.size()) > truncation) {
    for (std::size_t k = truncation; k < counts.size(); ++k) {
      if (counts[k] != 0) throw std::invalid_argument("count beyond truncation level");
    }
  }
  std::vector<BetaParams> params(truncation - 1);
  for (int k = 0; k + 1 < truncation; ++k) {
    params[k] = {1.0 + (tail[k] - tail[k + 1]), gamma.value() + tail[k + 1]};
  }
  return params;
}

std::vector<double> sample_stick_fractions(std::span<const int> counts, Concentration gamma,
                                           int truncation, Rng& rng) {
  const auto params = stick_beta_params(counts, gamma, truncation);
  std::vector<double> pi(truncation, 1.0);
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  for (int k = 0; k + 1 < truncation; ++k) {
    pi[k] = std::clamp(rng.beta(params[k].a, params[k].b), lo, hi);
  }
  return pi;
}

std::vector<double> sample_stick_weights_prior(std::span<const int> prev_counts,
                                               Concentration gamma, int truncation, Rng& rng) {
  return sample_stick_fractions(prev_counts, gamma, truncation, rng);
}

std::vector<int> count_labels(std::span<const int> labels, int truncation) {
  std::vector<int> counts(truncation, 0);
  for (int g : labels) {
    if (g < 0 || g >= truncation) throw std::out_of_range("label beyond truncation level");
    ++counts[g];
  }
  return counts;
}

PriorPath sample_prior_path(int n_units, int n_periods, int truncation, Concentration gamma,
                            double p, Rng& rng) {
  if (n_units < 1 || n_periods < 1) throw std::invalid_argument("empty panel");
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("stickiness p must lie in [0, 1]");
  PriorPath path{AssignmentState(n_units, n_periods), StickWeights(n_periods, truncation)};
  auto& g = path.assignments.g;
  auto& d = path.assignments.d;

  std::vector<int> prev_counts(truncation, 0);
  std::vector<int> column(n_units);
  for (int t = 0; t < n_periods; ++t) {
    const auto pi = sample_stick_fractions(prev_counts, gamma, truncation, rng);
    std::copy(pi.begin(), pi.end(), path.weights.pi.row(t).begin());
    path.weights.refresh(t);
    const auto q = path.weights.q.row(t);
    for (int i = 0; i < n_units; ++i) {
      if (t > 0 && rng.bernoulli(p)) {
        g(i, t) = g(i, t - 1);
        d(i, t) = 1;
      } else {
        g(i, t) = rng.categorical(q);
      }
      column[i] = g(i, t);
    }
    prev_counts = count_labels(column, truncation);
  }
  return path;
}

PartitionKey canonical_partition_key(const Grid<int>& g) {
  PartitionKey key;
  key.reserve(g.rows() * g.cols());
  std::map<int, int> relabel;
  for (std::size_t t = 0; t < g.cols(); ++t) {
    for (std::size_t i = 0; i < g.rows(); ++i) {
      auto [it, inserted] = relabel.try_emplace(g(i, t), static_cast<int>(relabel.size()));
      key.push_back(it->second);
    }
  }
  return key;
}

namespace {

// Seating probabilities for one non-sticky unit given restaurant counts.
// Returns (label, probability) pairs; `next_label` is the label a new table
// would receive in the untruncated process.
using SeatFn = std::function<std::vector<std::pair<int, double>>(const std::vector<int>&, int)>;

SeatFn crp_seating(double gamma) {
  return [gamma](const std::vector<int>& counts, int next_label) {
    double total = gamma;
    for (int c : counts) total += c;
    std::vector<std::pair<int, double>> out;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] > 0) out.emplace_back(static_cast<int>(k), counts[k] / total);
    }
    out.emplace_back(next_label, gamma / total);
    return out;
  };
}

// Posterior-predictive weights E[q_k | counts] under the truncated sticks.
SeatFn truncated_stick_seating(double gamma, int truncation) {
  return [gamma, truncation](const std::vector<int>& counts, int) {
    std::vector<int> padded(truncation, 0);
    std::copy(counts.begin(), counts.end(), padded.begin());
    const auto params = stick_beta_params(padded, Concentration(gamma), truncation);
    std::vector<std::pair<int, double>> out;
    double remaining = 1.0;
    for (int k = 0; k < truncation; ++k) {
      const double mean = k + 1 < truncation ? params[k].a / (params[k].a + params[k].b) : 1.0;
      if (remaining * mean > 0) out.emplace_back(k, remaining * mean);
      remaining *= 1.0 - mean;
    }
    return out;
  };
}

}  // namespace

PartitionDistribution enumerate_partition_distribution(int n_units, int n_periods, double p,
                                                       Concentration gamma,
                                                       std::optional<int> truncation,
                                                       std::size_t max_paths) {
  if (n_units < 1 || n_periods < 1) throw std::invalid_argument("empty panel");
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("stickiness p must lie in [0, 1]");
  if (truncation && *truncation < 2) throw std::invalid_argument("truncation below 2");

  // Bound on the number of seating paths: each cell branches into at most
  // (labels available + sticky copy).
  const int n_cells = n_units * n_periods;
  double bound = 1.0;
  for (int c = 0; c < n_cells; ++c) {
    const double labels = truncation ? *truncation : c + 1;
    bound *= labels + (c >= n_units ? 1 : 0);
    if (bound > static_cast<double>(max_paths)) {
      throw std::length_error("enumeration state space exceeds the configured bound");
    }
  }

  const SeatFn seat = truncation ? truncated_stick_seating(gamma.value(), *truncation)
                                 : crp_seating(gamma.value());
  PartitionDistribution out;
  Grid<int> g(n_units, n_periods, -1);

  // counts: restaurant occupancy for the period being seated.
  std::function<void(int, std::vector<int>, int, double)> visit =
      [&](int cell, std::vector<int> counts, int next_label, double prob) {
        if (prob == 0) return;
        if (cell == n_cells) {
          out[canonical_partition_key(g)] += prob;
          return;
        }
        const int t = cell / n_units;
        const int i = cell % n_units;
        if (i == 0 && t > 0) {
          // new generation: the restaurant starts from the previous period
          counts.assign(counts.size(), 0);
          for (int u = 0; u < n_units; ++u) {
            const int lbl = g(u, t - 1);
            if (lbl >= static_cast<int>(counts.size())) counts.resize(lbl + 1, 0);
            ++counts[lbl];
          }
        }
        if (t > 0 && p > 0) {
          g(i, t) = g(i, t - 1);
          visit(cell + 1, counts, next_label, prob * p);
        }
        const double fresh = t > 0 ? 1.0 - p : 1.0;
        if (fresh > 0) {
          for (auto [label, w] : seat(counts, next_label)) {
            auto seated = counts;
            if (label >= static_cast<int>(seated.size())) seated.resize(label + 1, 0);
            ++seated[label];
            g(i, t) = label;
            visit(cell + 1, std::move(seated), std::max(next_label, label + 1), prob * fresh * w);
          }
        }
        g(i, t) = -1;
      };
  visit(0, {}, 0, 1.0);
  return out;
}

double total_variation(const PartitionDistribution& a, const PartitionDistribution& b) {
  double sum = 0;
  for (const auto& [key, pa] : a) {
    auto it = b.find(key);
    sum += std::abs(pa - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [key, pb] : b) {
    if (!a.contains(key)) sum += pb;
  }
  return 0.5 * sum;
}

}  // namespace dyndp
