#include "dyndp/run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <iterator>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dyndp {

namespace {

using nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& source, const std::string& key, const std::string& what)
      : std::invalid_argument(source + ": " + (key.empty() ? "" : "'" + key + "': ") + what) {}
};

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& source, const std::string& prefix) {
  if (!obj.is_object()) throw ConfigError(source, prefix, "expected a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) {
      std::string known;
      for (const auto& a : allowed) known += (known.empty() ? "" : ", ") + a;
      throw ConfigError(source, prefix + key, "unknown key (allowed: " + known + ")");
    }
  }
}

template <class T>
void read_field(const json& obj, const char* key, T& out, const std::string& source,
                const std::string& prefix = "") {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(source, prefix + key, "has the wrong type");
  }
}

BernoulliChannelSpec parse_binary(const json& j, const std::string& source,
                                  const std::string& key, bool named) {
  std::set<std::string> allowed{"alpha", "beta"};
  if (named) allowed.insert("name");
  reject_unknown(j, allowed, source, key + ".");
  BernoulliChannelSpec spec;
  read_field(j, "name", spec.name, source, key + ".");
  read_field(j, "alpha", spec.alpha, source, key + ".");
  read_field(j, "beta", spec.beta, source, key + ".");
  if (named && spec.name.empty()) throw ConfigError(source, key, "needs a channel name");
  if (!(spec.alpha > 0) || !(spec.beta > 0)) {
    throw ConfigError(source, key, "Beta prior parameters must be positive");
  }
  return spec;
}

PoissonChannelSpec parse_count(const json& j, const std::string& source, const std::string& key,
                               bool named) {
  std::set<std::string> allowed{"a", "b"};
  if (named) allowed.insert("name");
  reject_unknown(j, allowed, source, key + ".");
  PoissonChannelSpec spec;
  read_field(j, "name", spec.name, source, key + ".");
  read_field(j, "a", spec.a, source, key + ".");
  read_field(j, "b", spec.b, source, key + ".");
  if (named && spec.name.empty()) throw ConfigError(source, key, "needs a channel name");
  if (!(spec.a > 0) || !(spec.b > 0)) {
    throw ConfigError(source, key, "Gamma prior parameters must be positive");
  }
  return spec;
}

const char* init_name(InitMode m) { return m == InitMode::Prior ? "prior" : "single-cluster"; }

const char* update_name(AssignmentUpdate u) {
  return u == AssignmentUpdate::Coupled ? "coupled" : "independent";
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source, "", std::string("invalid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"truncation", "iterations", "burn_in", "thinning", "chains", "seed", "workers",
                  "gamma", "alpha_p", "beta_p", "initial_p", "init", "update", "priors",
                  "output_dir"},
                 source, "");
  RunConfig rc;
  auto& s = rc.sampler;
  read_field(j, "truncation", s.truncation, source);
  read_field(j, "iterations", s.n_iterations, source);
  read_field(j, "burn_in", s.burn_in, source);
  read_field(j, "thinning", s.thinning, source);
  read_field(j, "chains", s.chains, source);
  read_field(j, "seed", s.seed, source);
  read_field(j, "workers", s.workers, source);
  rc.workers_set = j.contains("workers");
  read_field(j, "gamma", s.gamma, source);
  read_field(j, "alpha_p", s.alpha_p, source);
  read_field(j, "beta_p", s.beta_p, source);
  if (j.contains("initial_p") && !j.at("initial_p").is_null()) {
    double p = 0;
    read_field(j, "initial_p", p, source);
    s.initial_p = p;
  }
  if (j.contains("init")) {
    std::string m;
    read_field(j, "init", m, source);
    if (m == "prior") {
      s.init = InitMode::Prior;
    } else if (m == "single-cluster") {
      s.init = InitMode::SingleCluster;
    } else {
      throw ConfigError(source, "init", "must be \"prior\" or \"single-cluster\", got \"" + m + "\"");
    }
  }
  if (j.contains("update")) {
    std::string m;
    read_field(j, "update", m, source);
    if (m == "coupled") {
      s.update = AssignmentUpdate::Coupled;
    } else if (m == "independent") {
      s.update = AssignmentUpdate::Independent;
    } else {
      throw ConfigError(source, "update", "must be \"coupled\" or \"independent\", got \"" + m + "\"");
    }
  }
  if (j.contains("output_dir")) {
    std::string dir;
    read_field(j, "output_dir", dir, source);
    rc.output_dir = dir;
  }
  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    reject_unknown(p, {"default_binary", "default_count", "binary", "count"}, source, "priors.");
    if (p.contains("default_binary")) {
      rc.default_binary = parse_binary(p.at("default_binary"), source, "priors.default_binary", false);
    }
    if (p.contains("default_count")) {
      rc.default_count = parse_count(p.at("default_count"), source, "priors.default_count", false);
    }
    std::set<std::string> names;
    auto check_name = [&](const std::string& name, const std::string& key) {
      if (!names.insert(name).second) throw ConfigError(source, key, "duplicate channel '" + name + "'");
    };
    if (p.contains("binary")) {
      if (!p.at("binary").is_array()) throw ConfigError(source, "priors.binary", "expected an array");
      for (std::size_t c = 0; c < p.at("binary").size(); ++c) {
        const auto key = "priors.binary[" + std::to_string(c) + "]";
        rc.binary_priors.push_back(parse_binary(p.at("binary")[c], source, key, true));
        check_name(rc.binary_priors.back().name, key);
      }
    }
    if (p.contains("count")) {
      if (!p.at("count").is_array()) throw ConfigError(source, "priors.count", "expected an array");
      for (std::size_t c = 0; c < p.at("count").size(); ++c) {
        const auto key = "priors.count[" + std::to_string(c) + "]";
        rc.count_priors.push_back(parse_count(p.at("count")[c], source, key, true));
        check_name(rc.count_priors.back().name, key);
      }
    }
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, "", e.what());
  }
  return rc;
}

RunConfig read_run_config(std::istream& in, const std::string& source) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text, source);
}

void apply_environment(RunConfig& config) {
  if (config.workers_set) return;
  if (const char* env = std::getenv("DYNDP_WORKERS"); env && *env) {
    try {
      std::size_t pos = 0;
      const int w = std::stoi(env, &pos);
      if (pos != std::string(env).size() || w < 1) throw std::invalid_argument("");
      config.sampler.workers = w;
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("DYNDP_WORKERS must be a positive integer, got '") +
                                  env + "'");
    }
  }
}

std::string resolve_output_dir(const std::optional<std::string>& flag, const RunConfig& config,
                               const std::string& fallback) {
  if (flag) return *flag;
  if (config.output_dir) return *config.output_dir;
  if (const char* env = std::getenv("DYNDP_OUTPUT_DIR"); env && *env) return env;
  return fallback;
}

SamplerConfig bind_to_dataset(const RunConfig& config, const PanelDataset& dataset) {
  SamplerConfig out = config.sampler;
  out.model = {};
  for (const auto& name : dataset.binary_channels) {
    BernoulliChannelSpec spec = config.default_binary;
    for (const auto& o : config.binary_priors) {
      if (o.name == name) spec = o;
    }
    spec.name = name;
    out.model.bernoulli.push_back(spec);
  }
  for (const auto& name : dataset.count_channels) {
    PoissonChannelSpec spec = config.default_count;
    for (const auto& o : config.count_priors) {
      if (o.name == name) spec = o;
    }
    spec.name = name;
    out.model.poisson.push_back(spec);
  }
  for (const auto& o : config.binary_priors) {
    if (!std::count(dataset.binary_channels.begin(), dataset.binary_channels.end(), o.name)) {
      throw std::invalid_argument("config prior for binary channel '" + o.name +
                                  "', which the dataset does not have");
    }
  }
  for (const auto& o : config.count_priors) {
    if (!std::count(dataset.count_channels.begin(), dataset.count_channels.end(), o.name)) {
      throw std::invalid_argument("config prior for count channel '" + o.name +
                                  "', which the dataset does not have");
    }
  }
  out.validate_for(dataset);
  return out;
}

SamplerConfig bind_to_listed_channels(const RunConfig& config) {
  SamplerConfig out = config.sampler;
  out.model.bernoulli = config.binary_priors;
  out.model.poisson = config.count_priors;
  out.validate();
  return out;
}

std::string canonical_config_json(const SamplerConfig& c) {
  json j;
  j["truncation"] = c.truncation;
  j["iterations"] = c.n_iterations;
  j["burn_in"] = c.burn_in;
  j["thinning"] = c.thinning;
  j["chains"] = c.chains;
  j["seed"] = c.seed;
  j["gamma"] = c.gamma;
  j["alpha_p"] = c.alpha_p;
  j["beta_p"] = c.beta_p;
  j["initial_p"] = c.initial_p ? json(*c.initial_p) : json(nullptr);
  j["init"] = init_name(c.init);
  j["update"] = update_name(c.update);
  json binary = json::array();
  for (const auto& b : c.model.bernoulli) {
    binary.push_back({{"name", b.name}, {"alpha", b.alpha}, {"beta", b.beta}});
  }
  json count = json::array();
  for (const auto& p : c.model.poisson) {
    count.push_back({{"name", p.name}, {"a", p.a}, {"b", p.b}});
  }
  j["priors"] = {{"binary", binary}, {"count", count}};
  return j.dump();
}

std::string config_hash(const SamplerConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config_json(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

}  // namespace dyndp
