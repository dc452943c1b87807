#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "dyndp/emissions.hpp"
#include "dyndp/gibbs_sampler.hpp"
#include "dyndp/panel_dataset.hpp"

// JSON run configuration. Keys (all optional):
//
//   truncation, iterations, burn_in, thinning, chains, seed, workers,
//   gamma, alpha_p, beta_p, initial_p,
//   init: "prior" | "single-cluster", update: "coupled" | "independent",
//   priors: { default_binary: {alpha, beta}, default_count: {a, b},
//             binary: [{name, alpha, beta}], count: [{name, a, b}] },
//   output_dir
//
// Unknown keys are rejected.

namespace dyndp {

struct RunConfig {
  /// Everything except the emission model, which is bound to a dataset.
  SamplerConfig sampler;
  BernoulliChannelSpec default_binary;
  PoissonChannelSpec default_count;
  /// Per-channel overrides, in file order.
  std::vector<BernoulliChannelSpec> binary_priors;
  std::vector<PoissonChannelSpec> count_priors;
  std::optional<std::string> output_dir;
  bool workers_set = false;
};

/// Parses and validates; errors name the source and the offending key.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig read_run_config(std::istream& in, const std::string& source = "<config>");

/// Applies DYNDP_WORKERS when the file did not set `workers`.
void apply_environment(RunConfig& config);

/// Output directory: explicit flag, else the config's output_dir, else
/// DYNDP_OUTPUT_DIR, else `fallback`.
std::string resolve_output_dir(const std::optional<std::string>& flag, const RunConfig& config,
                               const std::string& fallback);

/// Sampler configuration for a dataset: one prior per dataset channel, taken
/// from the overrides or the defaults. Rejects overrides for channels the
/// dataset does not have.
SamplerConfig bind_to_dataset(const RunConfig& config, const PanelDataset& dataset);

/// Sampler configuration whose channels are exactly the listed overrides.
SamplerConfig bind_to_listed_channels(const RunConfig& config);

/// Canonical single-line JSON for a bound configuration. Parsing it back
/// gives the same configuration; `workers` and output paths are left out
/// because they do not affect the draws.
std::string canonical_config_json(const SamplerConfig& config);

/// 16 hex digits of FNV-1a over the canonical JSON.
std::string config_hash(const SamplerConfig& config);

}  // namespace dyndp
