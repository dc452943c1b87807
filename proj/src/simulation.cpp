#include "dyndp/simulation.hpp"

#include <array>
#include <cmath>

#include "dyndp/gibbs_sampler.hpp"
#include "dyndp/igcrp_prior.hpp"
#include "dyndp/legislative.hpp"
#include "dyndp/rng.hpp"

namespace dyndp {

namespace {

constexpr int kUnits = 50;
constexpr int kPeriods = 30;
constexpr int kItems = 4;
constexpr int kGroups = 3;

// [group][item] -> (lower, upper)
constexpr std::array<std::array<std::pair<double, double>, kItems>, kGroups> kSupports{{
    {{{0.8, 1.0}, {0.7, 1.0}, {0.0, 0.2}, {0.0, 0.3}}},
    {{{0.0, 0.2}, {0.0, 0.3}, {0.8, 1.0}, {0.7, 1.0}}},
    {{{0.7, 1.0}, {0.0, 0.2}, {0.0, 0.3}, {0.8, 1.0}}},
}};

std::vector<int> initial_groups() {
  std::vector<int> groups(kUnits);
  for (int i = 0; i < kUnits; ++i) groups[i] = i < 20 ? 0 : (i < 40 ? 1 : 2);
  return groups;
}

// Moves the `count` lowest-indexed current members of `from` to `to`.
void move_lowest(std::vector<int>& groups, int from, int to, int count) {
  for (int i = 0; i < kUnits && count > 0; ++i) {
    if (groups[i] == from) {
      groups[i] = to;
      --count;
    }
  }
}

// Draws theta for every (period, group, item) and one vote per item and cell.
SimulatedPanel finish_voting_panel(std::string regime, Grid<int> memberships, Rng& rng) {
  SimulatedPanel out;
  out.truth.regime = std::move(regime);
  out.truth.n_groups = kGroups;
  out.truth.n_items = kItems;
  out.truth.theta.resize(static_cast<std::size_t>(kPeriods) * kGroups * kItems);
  for (int t = 0; t < kPeriods; ++t) {
    for (int g = 0; g < kGroups; ++g) {
      for (int j = 0; j < kItems; ++j) {
        const auto [lo, hi] = kSupports[g][j];
        out.truth.theta[(t * kGroups + g) * kItems + j] = lo + (hi - lo) * rng.uniform();
      }
    }
  }

  std::vector<std::string> items;
  for (int j = 0; j < kItems; ++j) items.push_back("item_" + std::to_string(j + 1));
  out.dataset = PanelDataset(kUnits, kPeriods, items, {});
  for (int i = 0; i < kUnits; ++i) {
    for (int t = 0; t < kPeriods; ++t) {
      auto& cell = out.dataset.cells(i, t);
      for (int j = 0; j < kItems; ++j) {
        const double theta = out.truth.theta_at(memberships(i, t), j, t);
        cell.binary[j] = {rng.bernoulli(theta) ? 1 : 0, 1};
      }
    }
  }
  out.truth.memberships = std::move(memberships);
  return out;
}

}  // namespace

std::pair<double, double> vote_probability_support(int group, int item) {
  return kSupports.at(group).at(item);
}

SimulatedPanel gen_structural_break(std::uint64_t seed) {
  Rng rng(seed);
  Grid<int> memberships(kUnits, kPeriods);
  auto groups = initial_groups();
  for (int t = 0; t < kPeriods; ++t) {
    if (t == 10) {
      // Both moves at the first break are decided on the pre-break groups.
      const auto before = groups;
      int out_of_1 = 5;
      int out_of_2 = 10;
      for (int i = 0; i < kUnits; ++i) {
        if (before[i] == 0 && out_of_1 > 0) {
          groups[i] = 1;
          --out_of_1;
        } else if (before[i] == 1 && out_of_2 > 0) {
          groups[i] = 0;
          --out_of_2;
        }
      }
    } else if (t == 20) {
      move_lowest(groups, 0, 1, 5);
      const auto before = groups;
      int to_1 = 5;
      for (int i = 0; i < kUnits; ++i) {
        if (before[i] != 2) continue;
        groups[i] = to_1-- > 0 ? 0 : 1;
      }
    }
    for (int i = 0; i < kUnits; ++i) memberships(i, t) = groups[i];
  }
  return finish_voting_panel("structural-break", std::move(memberships), rng);
}

SimulatedPanel gen_gradual_change(std::uint64_t seed) {
  Rng rng(seed);
  const auto start = initial_groups();
  Grid<int> memberships(kUnits, kPeriods);
  for (int i = 0; i < kUnits; ++i) {
    int destination = start[i];
    int move_period = kPeriods + 1;  // 1-based; never
    const bool moves = start[i] == 2 ? true : rng.bernoulli(0.5);
    if (moves) {
      move_period = 6 + static_cast<int>(rng.uniform() * 20.0);  // uniform on 6..25
      if (start[i] == 0) {
        destination = 1;
      } else if (start[i] == 1) {
        destination = 0;
      } else {
        destination = rng.bernoulli(0.5) ? 0 : 1;
      }
    }
    for (int t = 0; t < kPeriods; ++t) {
      memberships(i, t) = (t + 1 >= move_period) ? destination : start[i];
    }
  }
  return finish_voting_panel("gradual-change", std::move(memberships), rng);
}

SimulatedPanel gen_prior_predictive(int n_units, int n_periods, const SamplerConfig& config,
                                    const CellObservations& shape, std::uint64_t seed) {
  config.validate();
  shape.validate();
  if (shape.binary.size() != config.model.bernoulli.size() ||
      shape.counts.size() != config.model.poisson.size()) {
    throw std::invalid_argument("cell shape does not match the emission model");
  }
  Rng rng(seed);
  const double p = config.initial_p ? *config.initial_p : rng.beta(config.alpha_p, config.beta_p);
  auto path = sample_prior_path(n_units, n_periods, config.truncation,
                                Concentration(config.gamma), p, rng);

  SimulatedPanel out;
  std::vector<std::string> binary, counts;
  for (const auto& ch : config.model.bernoulli) binary.push_back(ch.name);
  for (const auto& ch : config.model.poisson) counts.push_back(ch.name);
  out.dataset = PanelDataset(n_units, n_periods, binary, counts);

  out.truth.regime = "prior-predictive";
  out.truth.n_groups = config.truncation;
  out.truth.stickiness = p;
  for (int k = 0; k < config.truncation; ++k) {
    out.truth.cluster_params.push_back(sample_prior_params(config.model, rng));
  }
  for (int i = 0; i < n_units; ++i) {
    for (int t = 0; t < n_periods; ++t) {
      const int k = path.assignments.g(i, t);
      out.dataset.cells(i, t) = simulate_cell(shape, out.truth.cluster_params[k], rng);
    }
  }
  out.truth.memberships = std::move(path.assignments.g);
  return out;
}

std::vector<LegislativeRecord> gen_legislative_fixture(std::uint64_t seed) {
  constexpr int kFirst = 73;
  constexpr int kCongresses = 20;
  // Number of civil rights roll calls and discharge petitions per Congress.
  constexpr std::array<int, kCongresses> kRollCalls{0, 0, 2, 2, 3, 2, 3, 1, 4, 0,
                                                    0, 1, 2, 5, 1, 2, 2, 0, 0, 0};
  constexpr std::array<int, kCongresses> kPetitions{1, 1, 2, 3, 4, 4, 4, 2, 3, 1,
                                                    2, 1, 2, 1, 0, 2, 0, 0, 1, 1};
  constexpr int kLastSpeechCongress = 90;
  constexpr int kFirstBillCongress = 80;

  struct Position {
    double roll_call, petition, speech, bills;
  };
  constexpr std::array<Position, 3> kPositions{{
      {0.85, 0.60, 0.25, 0.80},  // liberal
      {0.60, 0.25, 0.05, 0.15},  // moderate
      {0.05, 0.02, 0.01, 0.02},  // conservative
  }};
  const std::vector<std::string> south{"AL", "GA", "MS", "TX", "VA"};
  const std::vector<std::string> north{"IL", "MA", "NY", "OH", "PA"};

  Rng rng(seed);
  std::vector<LegislativeRecord> records;
  auto position_of = [&](bool southern, const std::string& party, int congress, int switch_at) {
    if (party == "D") return southern ? 2 : (congress >= switch_at ? 0 : 1);
    if (southern) return congress >= switch_at ? 2 : 1;
    return congress >= switch_at ? 2 : 1;
  };

  for (int region = 0; region < 2; ++region) {
    const bool southern = region == 0;
    for (const auto& state : southern ? south : north) {
      for (const std::string party : {"D", "R"}) {
        // Congress at which this state party shifts position.
        int switch_at;
        if (party == "D") {
          switch_at = 77 + static_cast<int>(rng.uniform() * 6);
        } else if (southern) {
          switch_at = 80 + static_cast<int>(rng.uniform() * 5);
        } else {
          switch_at = rng.bernoulli(0.5) ? 84 + static_cast<int>(rng.uniform() * 6) : 99;
        }
        for (int c = 0; c < kCongresses; ++c) {
          const int congress = kFirst + c;
          const int lo = southern ? (party == "D" ? 2 : 0) : 1;
          const int hi = southern ? (party == "D" ? 5 : 1) : 4;
          const int members = lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
          const auto& pos = kPositions[position_of(southern, party, congress, switch_at)];
          for (int m = 0; m < members; ++m) {
            const std::string member = state + "-" + party + "-" + std::to_string(m + 1);
            records.push_back({congress, state, party, member, kSeat, "", 0});
            for (int j = 0; j < kRollCalls[c]; ++j) {
              if (rng.bernoulli(0.05)) continue;  // absent: counted as "no"
              records.push_back({congress, state, party, member, kRollCall,
                                 "rc" + std::to_string(congress) + "-" + std::to_string(j + 1),
                                 rng.bernoulli(pos.roll_call) ? 1 : 0});
            }
            for (int j = 0; j < kPetitions[c]; ++j) {
              records.push_back({congress, state, party, member, kPetition,
                                 "pt" + std::to_string(congress) + "-" + std::to_string(j + 1),
                                 rng.bernoulli(pos.petition) ? 1 : 0});
            }
            if (congress <= kLastSpeechCongress) {
              records.push_back({congress, state, party, member, kSpeech, "",
                                 rng.bernoulli(pos.speech) ? 1 : 0});
            }
            if (congress >= kFirstBillCongress) {
              records.push_back(
                  {congress, state, party, member, kBillSponsorship, "", rng.poisson(pos.bills)});
            }
          }
        }
      }
    }
  }
  return records;
}

}  // namespace dyndp
