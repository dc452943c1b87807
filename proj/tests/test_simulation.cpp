#include <array>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "dyndp/formats.hpp"
#include "dyndp/gibbs_sampler.hpp"
#include "dyndp/simulation.hpp"

using namespace dyndp;

namespace {

std::array<int, 3> group_counts(const SimulationTruth& truth, std::size_t period) {
  std::array<int, 3> counts{};
  for (std::size_t i = 0; i < truth.memberships.rows(); ++i) ++counts[truth.memberships(i, period)];
  return counts;
}

int changes(const SimulationTruth& truth, std::size_t unit) {
  int n = 0;
  for (std::size_t t = 1; t < truth.memberships.cols(); ++t) {
    n += truth.memberships(unit, t) != truth.memberships(unit, t - 1);
  }
  return n;
}

}  // namespace

TEST_CASE("structural break group sizes") {
  const auto sim = gen_structural_break(7);
  const auto& truth = sim.truth;
  CHECK(truth.memberships.rows() == 50);
  CHECK(truth.memberships.cols() == 30);
  // Periods are 1-based in the schedule, 0-based here.
  CHECK(group_counts(truth, 0) == std::array<int, 3>{20, 20, 10});
  CHECK(group_counts(truth, 9) == std::array<int, 3>{20, 20, 10});
  CHECK(group_counts(truth, 10) == std::array<int, 3>{25, 15, 10});
  CHECK(group_counts(truth, 19) == std::array<int, 3>{25, 15, 10});
  CHECK(group_counts(truth, 20) == std::array<int, 3>{25, 25, 0});
  CHECK(group_counts(truth, 29) == std::array<int, 3>{25, 25, 0});
}

TEST_CASE("structural break memberships change only at the breaks") {
  const auto truth = gen_structural_break(3).truth;
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t t = 1; t < 30; ++t) {
      if (t != 10 && t != 20) CHECK(truth.memberships(i, t) == truth.memberships(i, t - 1));
    }
  }
}

TEST_CASE("voting probabilities stay inside their supports") {
  for (auto sim : {gen_structural_break(5), gen_gradual_change(5)}) {
    const auto& truth = sim.truth;
    CHECK(truth.n_groups == 3);
    CHECK(truth.n_items == 4);
    for (std::size_t t = 0; t < 30; ++t) {
      for (int g = 0; g < 3; ++g) {
        for (int j = 0; j < 4; ++j) {
          const auto [lo, hi] = vote_probability_support(g, j);
          CHECK(truth.theta_at(g, j, t) >= lo);
          CHECK(truth.theta_at(g, j, t) <= hi);
        }
      }
    }
  }
  CHECK(vote_probability_support(0, 0) == std::pair<double, double>{0.8, 1.0});
  CHECK(vote_probability_support(1, 3) == std::pair<double, double>{0.7, 1.0});
  CHECK(vote_probability_support(2, 1) == std::pair<double, double>{0.0, 0.2});
}

TEST_CASE("empirical yea rate of group 1 on item 1") {
  const auto sim = gen_structural_break(11);
  long yes = 0, n = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t t = 0; t < 30; ++t) {
      if (sim.truth.memberships(i, t) != 0) continue;
      yes += sim.dataset.cells(i, t).binary[0].successes;
      n += sim.dataset.cells(i, t).binary[0].trials;
    }
  }
  const double rate = double(yes) / n;
  // Roughly 700 votes with mean near 0.9; three standard errors is about 0.035.
  CHECK(rate > 0.8 - 0.035);
  CHECK(rate < 1.0);
}

TEST_CASE("panel layout of the voting regimes") {
  const auto ds = gen_gradual_change(1).dataset;
  CHECK(ds.n_units() == 50);
  CHECK(ds.n_periods() == 30);
  CHECK(ds.binary_channels.size() == 4);
  CHECK(ds.count_channels.empty());
  for (const auto& c : ds.cells.data()) {
    for (const auto& b : c.binary) CHECK(b.trials == 1);
  }
  CHECK_NOTHROW(ds.validate());
}

TEST_CASE("gradual change schedule") {
  double movers_from_first = 0;
  const int seeds = 200;
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto truth = gen_gradual_change(seed).truth;
    for (std::size_t i = 0; i < 50; ++i) {
      const int start = truth.memberships(i, 0);
      CHECK(changes(truth, i) <= 1);
      for (std::size_t t = 1; t < 30; ++t) {
        if (truth.memberships(i, t) == truth.memberships(i, t - 1)) continue;
        // A move at 1-based period t + 1 must fall in 6..25.
        CHECK(t + 1 >= 6);
        CHECK(t + 1 <= 25);
        const int dest = truth.memberships(i, t);
        if (start == 0) CHECK(dest == 1);
        if (start == 1) CHECK(dest == 0);
        if (start == 2) CHECK(dest != 2);
      }
      if (start == 2) CHECK(truth.memberships(i, 24) != 2);
      if (start == 0 && changes(truth, i) == 1) movers_from_first += 1.0 / seeds;
    }
    CHECK(group_counts(truth, 0) == std::array<int, 3>{20, 20, 10});
  }
  // Binomial(20, 0.5) averaged over 200 seeds: standard error about 0.16.
  CHECK(std::abs(movers_from_first - 10.0) < 0.7);
}

TEST_CASE("simulations are reproducible from the seed") {
  CHECK(gen_structural_break(9).truth == gen_structural_break(9).truth);
  CHECK(gen_structural_break(9).dataset == gen_structural_break(9).dataset);
  CHECK(gen_gradual_change(9).truth == gen_gradual_change(9).truth);
  CHECK(!(gen_gradual_change(9).truth == gen_gradual_change(10).truth));
}

TEST_CASE("prior predictive panels") {
  SamplerConfig config;
  config.truncation = 8;
  config.model.bernoulli = {{"y", 1.0, 1.0}};
  config.model.poisson = {{"c", 1.0, 1.0}};
  CellObservations shape;
  shape.binary = {{0, 3}};
  shape.counts = {{0, 2, 0.0}};

  SUBCASE("full stickiness gives constant trajectories") {
    config.initial_p = 1.0;
    const auto sim = gen_prior_predictive(8, 5, config, shape, 4);
    for (std::size_t i = 0; i < 8; ++i) CHECK(changes(sim.truth, i) == 0);
    CHECK(sim.truth.stickiness == 1.0);
  }
  SUBCASE("tiny concentration gives one cluster") {
    config.gamma = 1e-6;
    int single = 0;
    const int n = 10'000;
    for (int seed = 0; seed < n; ++seed) {
      const auto sim = gen_prior_predictive(4, 3, config, shape, seed);
      single += occupancy(sim.truth.memberships).first == 1;
    }
    CHECK(double(single) / n > 0.999);
  }
  SUBCASE("fixed seed reproduces the panel") {
    const auto a = gen_prior_predictive(5, 4, config, shape, 12);
    const auto b = gen_prior_predictive(5, 4, config, shape, 12);
    CHECK(a.dataset == b.dataset);
    CHECK(a.truth == b.truth);
    for (const auto& c : a.dataset.cells.data()) {
      CHECK(c.binary[0].trials == 3);
      CHECK(c.counts[0].exposures == 2);
    }
  }
}

TEST_CASE("simulated panels round-trip through the panel format") {
  for (const auto& ds : {gen_structural_break(2).dataset, gen_gradual_change(2).dataset}) {
    std::stringstream buf;
    write_panel(buf, ds);
    CHECK(read_panel(buf) == ds);
  }
}
