#include "dyndp/panel_dataset.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace dyndp {

PanelDataset::PanelDataset(std::size_t n_units, std::size_t n_periods,
                           std::vector<std::string> binary_channel_names,
                           std::vector<std::string> count_channel_names)
    : binary_channels(std::move(binary_channel_names)),
      count_channels(std::move(count_channel_names)),
      present(n_units, n_periods, 1) {
  for (std::size_t i = 0; i < n_units; ++i) unit_ids.push_back("u" + std::to_string(i + 1));
  unit_attributes.assign(n_units, {});
  for (std::size_t t = 0; t < n_periods; ++t) period_labels.push_back(static_cast<int>(t + 1));
  CellObservations blank;
  blank.binary.resize(binary_channels.size());
  blank.counts.resize(count_channels.size());
  cells = Grid<CellObservations>(n_units, n_periods, blank);
}

std::optional<std::size_t> PanelDataset::attribute_index(const std::string& name) const {
  auto it = std::find(attribute_names.begin(), attribute_names.end(), name);
  if (it == attribute_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - attribute_names.begin());
}

const std::string& PanelDataset::attribute(std::size_t unit, const std::string& name) const {
  const auto idx = attribute_index(name);
  if (!idx) throw std::out_of_range("unknown unit attribute '" + name + "'");
  return unit_attributes.at(unit).at(*idx);
}

std::optional<std::size_t> PanelDataset::unit_index(const std::string& id) const {
  auto it = std::find(unit_ids.begin(), unit_ids.end(), id);
  if (it == unit_ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - unit_ids.begin());
}

std::optional<std::size_t> PanelDataset::period_index(int label) const {
  auto it = std::find(period_labels.begin(), period_labels.end(), label);
  if (it == period_labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - period_labels.begin());
}

void PanelDataset::validate() const {
  const std::size_t n = n_units();
  const std::size_t t = n_periods();
  if (n == 0 || t == 0) throw std::invalid_argument("dataset has no units or no periods");
  if (cells.rows() != n || cells.cols() != t || present.rows() != n || present.cols() != t) {
    throw std::invalid_argument("cell grid does not match unit and period counts");
  }
  if (unit_attributes.size() != n) {
    throw std::invalid_argument("unit attribute table does not match unit count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (unit_attributes[i].size() != attribute_names.size()) {
      throw std::invalid_argument("unit '" + unit_ids[i] + "' has the wrong number of attributes");
    }
  }
  if (std::set<std::string>(unit_ids.begin(), unit_ids.end()).size() != n) {
    throw std::invalid_argument("duplicate unit id");
  }
  if (std::set<int>(period_labels.begin(), period_labels.end()).size() != t) {
    throw std::invalid_argument("duplicate period label");
  }
  std::set<std::string> channels(binary_channels.begin(), binary_channels.end());
  channels.insert(count_channels.begin(), count_channels.end());
  if (channels.size() != binary_channels.size() + count_channels.size()) {
    throw std::invalid_argument("duplicate channel name");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < t; ++s) {
      const auto& cell = cells(i, s);
      if (cell.binary.size() != binary_channels.size() ||
          cell.counts.size() != count_channels.size()) {
        throw std::invalid_argument("cell (" + unit_ids[i] + ", " +
                                    std::to_string(period_labels[s]) +
                                    ") has the wrong channel layout");
      }
      try {
        cell.validate();
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("cell (" + unit_ids[i] + ", " +
                                    std::to_string(period_labels[s]) + "): " + e.what());
      }
    }
  }
}

EmissionModel default_emission_model(const PanelDataset& dataset) {
  EmissionModel model;
  for (const auto& name : dataset.binary_channels) model.bernoulli.push_back({name, 1.0, 1.0});
  for (const auto& name : dataset.count_channels) model.poisson.push_back({name, 1.0, 1.0});
  return model;
}

}  // namespace dyndp
