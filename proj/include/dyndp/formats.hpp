#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dyndp/gibbs_sampler.hpp"
#include "dyndp/panel_dataset.hpp"
#include "dyndp/posterior_analysis.hpp"
#include "dyndp/simulation.hpp"

// Line-oriented text formats. Every file opens with a `#dyndp-<kind>` line
// carrying a format version, optionally followed by a `#provenance` line; doubles are written in shortest round-trip form
// so that reading back reproduces the exact bits. docs/formats.md has
// annotated examples.

namespace dyndp {

/// Parse failure with the source and line of the offending input.
class FormatError : public std::runtime_error {
 public:
  /// `located_message` already starts with the source and line.
  explicit FormatError(const std::string& located_message);
  FormatError(const std::string& source, const std::string& what);
  FormatError(const std::string& source, std::size_t line, const std::string& what);
};

std::string format_double(double x);
double parse_double(const std::string& text, const std::string& where);
long parse_long(const std::string& text, const std::string& where);

// Panel file:
//   #dyndp-panel  1
//   [units]
//   unit  <attribute>...
//   [periods]
//   <label>...
//   [cells]
//   unit  period  present  <b>:s  <b>:n ...  <c>:total  <c>:exposures  <c>:log_factorial_sum ...
void write_panel(std::ostream& out, const PanelDataset& dataset,
                 const std::string& provenance = "");
PanelDataset read_panel(std::istream& in, const std::string& source = "<panel>");

// Truth file: regime, groups and items, 1-based memberships per unit, then
// the per-period item probabilities or the prior-predictive parameters.
void write_truth(std::ostream& out, const SimulationTruth& truth, const PanelDataset& dataset,
                 const std::string& provenance = "");
SimulationTruth read_truth(std::istream& in, const std::string& source = "<truth>");

struct DrawFileHeader {
  std::uint64_t seed = 0;
  int chain = 0;
  std::string config_hash;
  std::string config_json;
  std::size_t n_units = 0;
  std::size_t n_periods = 0;
  int truncation = 0;
  std::vector<std::string> binary_channels;
  std::vector<std::string> count_channels;
};

inline constexpr int kDrawFormatVersion = 1;

/// Appends draws to a stream one line at a time.
///   iteration  p  log_joint  g  d  params
/// g and d list units separated by ';' and periods by ','; labels are
/// 1-based. params is `k:theta,...|lambda,...` per occupied cluster, joined
/// by ';'.
class DrawWriter {
 public:
  DrawWriter(std::ostream& out, const DrawFileHeader& header);
  void write(const Draw& draw);

 private:
  std::ostream& out_;
};

struct DrawFile {
  DrawFileHeader header;
  std::vector<Draw> draws;
};

DrawFile read_draws(std::istream& in, const std::string& source = "<draws>");

void write_trace(std::ostream& out, const std::vector<SweepTrace>& trace,
                 const std::string& config_hash, std::uint64_t seed);

/// unit x period matrix; the first period column is empty.
void write_change_matrix(std::ostream& out, const Grid<double>& change,
                         const PanelDataset& dataset, const std::string& provenance);

/// Long table of same-period co-clustering: period, unit_a, unit_b,
/// probability for every unordered pair of present cells.
void write_cocluster_table(std::ostream& out, const LabelDraws& draws,
                           const PanelDataset& dataset, const std::string& provenance);

void write_series(std::ostream& out, const SummarySeries& series, const PanelDataset& dataset,
                  const std::string& provenance);

/// Assignment matrices from the prior, one block per sample.
void write_assignments(std::ostream& out, const std::vector<Grid<int>>& samples,
                       const std::string& provenance);

/// Files written together or not at all: contents are staged in memory and
/// `commit` moves them into place via temporary files and rename.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::ostream& add(const std::string& name);
  void commit();
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> files_;
};

}  // namespace dyndp
