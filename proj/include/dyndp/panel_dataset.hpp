#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dyndp/emissions.hpp"
#include "dyndp/grid.hpp"

namespace dyndp {

/// Observations per (unit, period), aggregated to sufficient statistics.
/// A cell that is not `present` (e.g. a state party with no seated members)
/// keeps its latent trajectory but contributes no likelihood.
struct PanelDataset {
  std::vector<std::string> unit_ids;
  std::vector<std::string> attribute_names;
  /// unit_attributes[i][a] is attribute a of unit i.
  std::vector<std::vector<std::string>> unit_attributes;
  /// External period labels, e.g. Congress numbers 73..92.
  std::vector<int> period_labels;
  std::vector<std::string> binary_channels;
  std::vector<std::string> count_channels;

  Grid<CellObservations> cells;  // N x T
  Grid<std::uint8_t> present;    // N x T

  PanelDataset() = default;
  /// Allocates an N x T panel of empty, present cells with the given
  /// channel layout; unit ids default to "u<i>" and periods to 1..T.
  PanelDataset(std::size_t n_units, std::size_t n_periods,
               std::vector<std::string> binary_channel_names,
               std::vector<std::string> count_channel_names);

  std::size_t n_units() const { return unit_ids.size(); }
  std::size_t n_periods() const { return period_labels.size(); }

  std::optional<std::size_t> attribute_index(const std::string& name) const;
  /// Throws std::out_of_range for an unknown attribute.
  const std::string& attribute(std::size_t unit, const std::string& name) const;
  std::optional<std::size_t> unit_index(const std::string& id) const;
  std::optional<std::size_t> period_index(int label) const;

  /// Throws std::invalid_argument describing the first inconsistency.
  void validate() const;

  friend bool operator==(const PanelDataset&, const PanelDataset&) = default;
};

/// Default emission model for a dataset: Beta(1, 1) on every binary channel
/// and Gamma(1, 1) on every count channel, in dataset channel order.
EmissionModel default_emission_model(const PanelDataset& dataset);

}  // namespace dyndp
