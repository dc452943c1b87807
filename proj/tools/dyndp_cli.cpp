// dyndp: batch command-line front end.
//
//   dyndp simulate     --regime structural-break --seed 7 --out sim/
//   dyndp ingest       --records members.csv --regions data/regions.tsv --out panel/
//   dyndp fit          --data sim/panel.tsv --config run.json --out fit/
//   dyndp summarize    --data sim/panel.tsv --draws fit/draws_chain1.tsv --query q.json --out summary/
//   dyndp prior-sample --units 5 --periods 4 --samples 100 --out prior/

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dyndp/diagnostics.hpp"
#include "dyndp/formats.hpp"
#include "dyndp/gibbs_sampler.hpp"
#include "dyndp/legislative.hpp"
#include "dyndp/posterior_analysis.hpp"
#include "dyndp/run_config.hpp"
#include "dyndp/simulation.hpp"

using nlohmann::json;
using namespace dyndp;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

RunConfig load_config(const std::optional<std::string>& path) {
  RunConfig rc;
  if (path) {
    auto in = open_input(*path);
    rc = read_run_config(in, *path);
  }
  apply_environment(rc);
  return rc;
}

PanelDataset load_panel(const std::string& path) {
  auto in = open_input(path);
  return read_panel(in, path);
}

std::string provenance(const std::string& hash, const std::string& seeds) {
  return "config_hash=" + hash + " seed=" + seeds;
}

void write_manifest(OutputSet& out, json manifest) {
  out.add("manifest.json") << manifest.dump(2) << '\n';
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string regime;
  std::uint64_t seed = 1;
  std::optional<std::string> out;
  std::optional<std::string> config;
  int units = 20;
  int periods = 10;
  long trials = 5;
  long exposures = 1;
};

void run_simulate(const SimulateArgs& a) {
  RunConfig rc = load_config(a.config);
  OutputSet out(resolve_output_dir(a.out, rc, "."));
  json manifest{{"command", "simulate"}, {"regime", a.regime}, {"seed", a.seed}};
  const std::string seed = std::to_string(a.seed);

  if (a.regime == "legislative-fixture") {
    const auto records = gen_legislative_fixture(a.seed);
    IngestOptions options;
    for (const auto& s : {"AL", "GA", "MS", "TX", "VA", "IL", "MA", "NY", "OH", "PA"}) {
      const auto& south = southern_states();
      options.regions[s] =
          std::find(south.begin(), south.end(), s) != south.end() ? "South" : "North";
    }
    const auto ds = ingest_legislative(records, options);
    write_legislative_records(out.add("records.csv"), records);
    write_panel(out.add("panel.tsv"), ds, provenance("none", seed));
    manifest["files"] = {"records.csv", "panel.tsv"};
  } else {
    SimulatedPanel panel;
    std::string hash = "none";
    if (a.regime == "structural-break") {
      panel = gen_structural_break(a.seed);
    } else if (a.regime == "gradual-change") {
      panel = gen_gradual_change(a.seed);
    } else if (a.regime == "prior-predictive") {
      const auto config = bind_to_listed_channels(rc);
      if (config.model.bernoulli.empty() && config.model.poisson.empty()) {
        throw std::invalid_argument(
            "prior-predictive needs channels: list them under priors.binary / priors.count in "
            "the config");
      }
      CellObservations shape;
      shape.binary.assign(config.model.bernoulli.size(), {0, a.trials});
      shape.counts.assign(config.model.poisson.size(), {0, a.exposures, 0.0});
      panel = gen_prior_predictive(a.units, a.periods, config, shape, a.seed);
      hash = config_hash(config);
      manifest["config_hash"] = hash;
      manifest["config"] = json::parse(canonical_config_json(config));
    } else {
      throw std::invalid_argument(
          "--regime must be structural-break, gradual-change, prior-predictive or "
          "legislative-fixture, got '" + a.regime + "'");
    }
    write_panel(out.add("panel.tsv"), panel.dataset, provenance(hash, seed));
    write_truth(out.add("truth.tsv"), panel.truth, panel.dataset, provenance(hash, seed));
    manifest["files"] = {"panel.tsv", "truth.tsv"};
  }
  write_manifest(out, manifest);
  out.commit();
  std::cerr << "simulate: wrote " << out.dir().string() << '\n';
}

// ------------------------------------------------------------------ ingest

struct IngestArgs {
  std::string records;
  std::optional<std::string> regions;
  int first = 73;
  int last = 92;
  std::optional<std::string> out;
};

void run_ingest(const IngestArgs& a) {
  auto in = open_input(a.records);
  const auto records = read_legislative_records(in, a.records);
  IngestOptions options;
  options.first_congress = a.first;
  options.last_congress = a.last;
  if (a.regions) {
    auto rin = open_input(*a.regions);
    options.regions = read_regions(rin, *a.regions);
  }
  const auto ds = ingest_legislative(records, options);
  OutputSet out(resolve_output_dir(a.out, RunConfig{}, "."));
  write_panel(out.add("panel.tsv"), ds);
  write_manifest(out, {{"command", "ingest"},
                       {"records", a.records},
                       {"units", ds.n_units()},
                       {"periods", ds.n_periods()},
                       {"files", {"panel.tsv"}}});
  out.commit();
  std::cerr << "ingest: " << ds.n_units() << " units x " << ds.n_periods() << " periods\n";
}

// --------------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void run_fit(const FitArgs& a) {
  RunConfig rc = load_config(a.config);
  if (a.seed) rc.sampler.seed = *a.seed;
  if (a.workers) rc.sampler.workers = *a.workers;
  const auto ds = load_panel(a.data);
  const auto config = bind_to_dataset(rc, ds);
  const auto hash = config_hash(config);
  const auto config_json = canonical_config_json(config);

  const auto start = std::chrono::steady_clock::now();
  const auto chains = run_chains(ds, config);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  OutputSet out(resolve_output_dir(a.out, rc, "."));
  out.add("config.json") << json::parse(config_json).dump(2) << '\n';
  json chain_entries = json::array();
  std::vector<std::vector<double>> log_joints;
  for (const auto& chain : chains) {
    const std::string suffix = "_chain" + std::to_string(chain.chain + 1) + ".tsv";
    DrawFileHeader header;
    header.seed = chain.seed;
    header.chain = chain.chain + 1;
    header.config_hash = hash;
    header.config_json = config_json;
    header.n_units = ds.n_units();
    header.n_periods = ds.n_periods();
    header.truncation = config.truncation;
    header.binary_channels = ds.binary_channels;
    header.count_channels = ds.count_channels;
    DrawWriter writer(out.add("draws" + suffix), header);
    for (const auto& d : chain.draws) writer.write(d);
    write_trace(out.add("trace" + suffix), chain.trace, hash, chain.seed);

    std::vector<double> lj;
    for (const auto& s : chain.trace) {
      if (s.iteration > config.burn_in) lj.push_back(s.log_joint);
    }
    json entry{{"chain", chain.chain + 1},
               {"seed", chain.seed},
               {"draws_file", "draws" + suffix},
               {"trace_file", "trace" + suffix},
               {"stored_draws", chain.draws.size()},
               {"truncation_hit_rate", chain.truncation_hit_rate},
               {"truncation_warning", chain.truncation_warning}};
    if (lj.size() >= 100) {
      entry["log_joint_ess"] = batch_means_ess(lj);
      std::vector<double> batch_means;
      const std::size_t b = lj.size() / 50;
      for (std::size_t j = 0; j < 50; ++j) {
        batch_means.push_back(mean(std::span<const double>(lj).subspan(j * b, b)));
      }
      entry["log_joint_trend_p_value"] = slope_test(batch_means).p_value;
    }
    chain_entries.push_back(entry);
    log_joints.push_back(std::move(lj));
    if (chain.truncation_warning) {
      std::cerr << "fit: warning: chain " << chain.chain + 1 << " used label K = "
                << config.truncation << " in " << chain.truncation_hit_rate * 100
                << "% of sweeps; consider a larger truncation\n";
    }
  }
  json manifest{{"command", "fit"},
                {"data", a.data},
                {"seed", config.seed},
                {"workers", config.workers},
                {"config_hash", hash},
                {"config", json::parse(config_json)},
                {"wall_seconds", seconds},
                {"chains", chain_entries}};
  if (chains.size() > 1 && log_joints.front().size() >= 4) {
    manifest["split_rhat_log_joint"] = split_rhat(log_joints);
  }
  write_manifest(out, manifest);
  out.commit();
  std::cerr << "fit: " << chains.size() << " chain(s), " << config.stored_draw_count()
            << " stored draws each, " << seconds << " s\n";
}

// --------------------------------------------------------------- summarize

struct SummarizeArgs {
  std::string data;
  std::vector<std::string> draws;
  std::optional<std::string> query;
  std::optional<std::string> out;
};

std::vector<std::size_t> select_units(const PanelDataset& ds, const json& selector,
                                      const std::string& where) {
  if (!selector.is_object()) throw std::invalid_argument(where + ": expected an object");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.n_units(); ++i) {
    bool match = true;
    for (const auto& [key, value] : selector.items()) {
      if (key == "units") {
        const auto ids = value.get<std::vector<std::string>>();
        match = match && std::find(ids.begin(), ids.end(), ds.unit_ids[i]) != ids.end();
      } else {
        if (!ds.attribute_index(key)) {
          throw std::invalid_argument(where + ": unknown attribute '" + key + "'");
        }
        match = match && ds.attribute(i, key) == value.get<std::string>();
      }
    }
    if (match) out.push_back(i);
  }
  if (out.empty()) throw std::invalid_argument(where + ": selects no units");
  return out;
}

void run_summarize(const SummarizeArgs& a) {
  const auto ds = load_panel(a.data);
  LabelDraws labels;
  std::set<std::string> hashes;
  std::vector<std::string> seeds;
  for (const auto& path : a.draws) {
    auto in = open_input(path);
    auto file = read_draws(in, path);
    if (file.header.n_units != ds.n_units() || file.header.n_periods != ds.n_periods()) {
      throw std::invalid_argument(path + ": draws are " + std::to_string(file.header.n_units) +
                                  " x " + std::to_string(file.header.n_periods) +
                                  " but the dataset is " + std::to_string(ds.n_units()) + " x " +
                                  std::to_string(ds.n_periods()));
    }
    if (file.draws.empty()) throw std::invalid_argument(path + ": draws file holds no draws");
    hashes.insert(file.header.config_hash);
    seeds.push_back(std::to_string(file.header.seed));
    for (auto& d : file.draws) labels.push_back(std::move(d.g));
  }
  if (hashes.size() > 1) {
    throw std::invalid_argument("draw files come from different configurations");
  }
  std::string seed_list;
  for (const auto& s : seeds) seed_list += (seed_list.empty() ? "" : ",") + s;
  const auto prov = provenance(*hashes.begin(), seed_list);

  // Queries are parsed and evaluated before anything is written.
  std::vector<std::pair<std::string, SummarySeries>> series;
  if (a.query) {
    auto in = open_input(*a.query);
    json q;
    try {
      q = json::parse(in);
    } catch (const json::parse_error& e) {
      throw std::invalid_argument(*a.query + ": invalid JSON: " + e.what());
    }
    const double default_level = q.value("level", 0.95);
    const std::string default_interval = q.value("interval", "per-draw-mean");
    if (!q.contains("series") || !q.at("series").is_array()) {
      throw std::invalid_argument(*a.query + ": needs a 'series' array");
    }
    std::set<std::string> names;
    for (std::size_t s = 0; s < q.at("series").size(); ++s) {
      const auto& spec = q.at("series")[s];
      const std::string where = *a.query + ": series[" + std::to_string(s) + "]";
      for (const auto& [key, _] : spec.items()) {
        static const std::set<std::string> allowed{"name", "mode", "key", "a", "b", "level",
                                                   "interval"};
        if (!allowed.contains(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
      }
      AlignmentQuery query;
      const auto name = spec.value("name", "");
      if (name.empty() || name.find_first_of("/\\ \t") != std::string::npos) {
        throw std::invalid_argument(where + ": needs a 'name' usable as a file name");
      }
      if (!names.insert(name).second) throw std::invalid_argument(where + ": duplicate name");
      query.group_a = select_units(ds, spec.value("a", json::object()), where + ".a");
      query.group_b = select_units(ds, spec.value("b", json::object()), where + ".b");
      const auto mode = spec.value("mode", "pooled");
      if (mode == "within") {
        query.mode = PairMode::WithinKey;
        const auto key = spec.value("key", "");
        if (!ds.attribute_index(key)) {
          throw std::invalid_argument(where + ": 'within' needs 'key' naming a unit attribute");
        }
        for (std::size_t i = 0; i < ds.n_units(); ++i) query.keys.push_back(ds.attribute(i, key));
      } else if (mode != "pooled") {
        throw std::invalid_argument(where + ": mode must be 'pooled' or 'within'");
      }
      query.level = spec.value("level", default_level);
      const auto interval = spec.value("interval", default_interval);
      if (interval == "pair-distribution") {
        query.interval = IntervalMode::PairDistribution;
      } else if (interval != "per-draw-mean") {
        throw std::invalid_argument(where + ": interval must be 'per-draw-mean' or "
                                    "'pair-distribution'");
      }
      query.present = &ds.present;
      try {
        auto result = grouped_alignment_series(labels, query);
        result.name = name;
        series.emplace_back(name, std::move(result));
      } catch (const std::exception& e) {
        throw std::invalid_argument(where + ": " + e.what());
      }
    }
  }

  OutputSet out(resolve_output_dir(a.out, RunConfig{}, "."));
  write_change_matrix(out.add("change_probability.tsv"), change_probability_matrix(labels), ds,
                      prov);
  write_cocluster_table(out.add("cocluster.tsv"), labels, ds, prov);
  json files = {"change_probability.tsv", "cocluster.tsv"};
  for (const auto& [name, s] : series) {
    write_series(out.add("series_" + name + ".tsv"), s, ds, prov);
    files.push_back("series_" + name + ".tsv");
  }
  write_manifest(out, {{"command", "summarize"},
                       {"data", a.data},
                       {"draws", a.draws},
                       {"config_hash", *hashes.begin()},
                       {"seeds", seeds},
                       {"stored_draws", labels.size()},
                       {"files", files}});
  out.commit();
  std::cerr << "summarize: " << labels.size() << " draws, " << series.size() << " series\n";
}

// ------------------------------------------------------------ prior-sample

struct PriorSampleArgs {
  int units = 5;
  int periods = 4;
  int samples = 100;
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  std::optional<double> p;
};

void run_prior_sample(const PriorSampleArgs& a) {
  RunConfig rc = load_config(a.config);
  if (a.seed) rc.sampler.seed = *a.seed;
  if (a.gamma) rc.sampler.gamma = *a.gamma;
  if (a.p) rc.sampler.initial_p = *a.p;
  if (a.units < 1 || a.periods < 1 || a.samples < 1) {
    throw std::invalid_argument("--units, --periods and --samples must be positive");
  }
  const auto config = bind_to_listed_channels(rc);
  const auto hash = config_hash(config);
  Rng rng(config.seed);
  const Concentration gamma(config.gamma);
  std::vector<Grid<int>> samples;
  for (int s = 0; s < a.samples; ++s) {
    const double p = config.initial_p ? *config.initial_p : rng.beta(config.alpha_p, config.beta_p);
    samples.push_back(
        sample_prior_path(a.units, a.periods, config.truncation, gamma, p, rng).assignments.g);
  }
  OutputSet out(resolve_output_dir(a.out, rc, "."));
  write_assignments(out.add("assignments.tsv"), samples,
                    provenance(hash, std::to_string(config.seed)));
  write_manifest(out, {{"command", "prior-sample"},
                       {"seed", config.seed},
                       {"config_hash", hash},
                       {"config", json::parse(canonical_config_json(config))},
                       {"units", a.units},
                       {"periods", a.periods},
                       {"samples", a.samples},
                       {"files", {"assignments.tsv"}}});
  out.commit();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic Dirichlet-process mixture with the intergenerational CRP prior"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic panel");
  simulate->add_option("--regime", sim.regime,
                       "structural-break | gradual-change | prior-predictive | legislative-fixture")
      ->required();
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--out", sim.out, "Output directory");
  simulate->add_option("--config", sim.config, "Run configuration (prior-predictive)");
  simulate->add_option("--units", sim.units, "Units (prior-predictive)");
  simulate->add_option("--periods", sim.periods, "Periods (prior-predictive)");
  simulate->add_option("--trials", sim.trials, "Trials per binary channel (prior-predictive)");
  simulate->add_option("--exposures", sim.exposures, "Exposures per count channel (prior-predictive)");

  IngestArgs ing;
  auto* ingest = app.add_subcommand("ingest", "Aggregate member-level legislative records");
  ingest->add_option("--records", ing.records, "CSV of member records")->required();
  ingest->add_option("--regions", ing.regions, "State to region TSV");
  ingest->add_option("--first", ing.first, "First Congress");
  ingest->add_option("--last", ing.last, "Last Congress");
  ingest->add_option("--out", ing.out, "Output directory");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Run the Gibbs sampler");
  fit->add_option("--data", fa.data, "Panel file")->required();
  fit->add_option("--config", fa.config, "Run configuration");
  fit->add_option("--out", fa.out, "Output directory");
  fit->add_option("--seed", fa.seed, "Override the configured seed");
  fit->add_option("--workers", fa.workers, "Override the worker count");

  SummarizeArgs sa;
  auto* summarize = app.add_subcommand("summarize", "Posterior summaries from draw files");
  summarize->add_option("--data", sa.data, "Panel file")->required();
  summarize->add_option("--draws", sa.draws, "Draw files (one per chain)")->required();
  summarize->add_option("--query", sa.query, "Alignment query");
  summarize->add_option("--out", sa.out, "Output directory");

  PriorSampleArgs pa;
  auto* prior = app.add_subcommand("prior-sample", "Assignment matrices from the prior");
  prior->add_option("--units", pa.units, "Units");
  prior->add_option("--periods", pa.periods, "Periods");
  prior->add_option("--samples", pa.samples, "Number of samples");
  prior->add_option("--config", pa.config, "Run configuration");
  prior->add_option("--out", pa.out, "Output directory");
  prior->add_option("--seed", pa.seed, "Override the configured seed");
  prior->add_option("--gamma", pa.gamma, "Override the concentration");
  prior->add_option("--p", pa.p, "Fix the stickiness instead of drawing it");

  CLI11_PARSE(app, argc, argv);
  try {
    if (simulate->parsed()) run_simulate(sim);
    if (ingest->parsed()) run_ingest(ing);
    if (fit->parsed()) run_fit(fa);
    if (summarize->parsed()) run_summarize(sa);
    if (prior->parsed()) run_prior_sample(pa);
  } catch (const std::exception& e) {
    std::cerr << "dyndp: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
