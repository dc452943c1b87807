#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyndp/emissions.hpp"
#include "dyndp/grid.hpp"
#include "dyndp/panel_dataset.hpp"

namespace dyndp {

struct SamplerConfig;
struct LegislativeRecord;

/// Ground truth behind a synthetic panel.
struct SimulationTruth {
  std::string regime;
  Grid<int> memberships;  // N x T, 0-based group labels
  int n_groups = 0;
  int n_items = 0;
  /// Per-period item probabilities, laid out [period][group][item]; empty for
  /// prior-predictive panels.
  std::vector<double> theta;
  /// Prior-predictive panels only.
  std::optional<double> stickiness;
  std::vector<ClusterParams> cluster_params;

  double theta_at(int group, int item, std::size_t period) const {
    return theta.at((period * n_groups + group) * n_items + item);
  }
  friend bool operator==(const SimulationTruth&, const SimulationTruth&) = default;
};

struct SimulatedPanel {
  PanelDataset dataset;
  SimulationTruth truth;
};

/// Lower and upper bounds of the uniform law of theta for (group, item).
std::pair<double, double> vote_probability_support(int group, int item);

/// 50 units, 30 periods, 4 binary items with one trial each. Groups of
/// 20/20/10; at period 11 five units move 1 -> 2 and ten move 2 -> 1; at
/// period 21 five move 1 -> 2, five 3 -> 1 and five 3 -> 2. Movers are the
/// lowest-indexed members of their source group.
SimulatedPanel gen_structural_break(std::uint64_t seed);

/// Same layout; during periods 6..25 each group-1 unit moves to group 2 with
/// probability 0.5 (and group 2 to group 1 symmetrically) while every group-3
/// unit moves to group 1 or 2 with equal odds. Move times are uniform on
/// {6, ..., 25}; each unit moves at most once.
SimulatedPanel gen_gradual_change(std::uint64_t seed);

/// Labels, weights, stickiness and cluster parameters from the model prior,
/// then data with the trials/exposures of `shape` in every cell. The config
/// supplies truncation, gamma, the stickiness prior (or initial_p to fix p)
/// and the emission model.
SimulatedPanel gen_prior_predictive(int n_units, int n_periods, const SamplerConfig& config,
                                    const CellObservations& shape, std::uint64_t seed);

/// Member-level records in the legislative schema: 10 states x 2 parties,
/// Congresses 73..92, with per-Congress roll-call and petition counts and
/// channel coverage following the published summary table (including the
/// Congresses with no roll calls).
std::vector<LegislativeRecord> gen_legislative_fixture(std::uint64_t seed);

}  // namespace dyndp
