#include <boost/math/distributions/beta.hpp>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "dyndp/diagnostics.hpp"
#include "dyndp/gibbs_sampler.hpp"
#include "support/oracles.hpp"

using namespace dyndp;
using namespace dyndp::testing;

namespace {

PanelDataset binary_panel(std::size_t units, std::size_t periods, long trials) {
  PanelDataset ds(units, periods, {"y"}, {});
  for (auto& c : ds.cells.data()) c.binary = {{trials / 2, trials}};
  return ds;
}

SamplerConfig small_config(const PanelDataset& ds, int truncation = 4) {
  SamplerConfig c;
  c.truncation = truncation;
  c.n_iterations = 20;
  c.burn_in = 10;
  c.model = default_emission_model(ds);
  return c;
}

Grid<double> random_evidence(std::size_t periods, int k, Rng& rng) {
  Grid<double> e(periods, k);
  for (auto& x : e.data()) x = -6.0 * rng.uniform();
  return e;
}

double max_abs_diff(const Grid<double>& a, const Grid<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

Grid<double> exp_grid(const Grid<double>& g) {
  Grid<double> out = g;
  for (auto& x : out.data()) x = std::exp(x);
  return out;
}

}  // namespace

TEST_CASE("sampler config validation") {
  const auto ds = binary_panel(2, 2, 1);
  auto c = small_config(ds);
  CHECK_NOTHROW(c.validate_for(ds));
  c.truncation = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config(ds);
  c.burn_in = c.n_iterations;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config(ds);
  c.thinning = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config(ds);
  c.model.bernoulli.clear();
  CHECK_THROWS_AS(c.validate_for(ds), std::invalid_argument);
}

TEST_CASE("initialization") {
  const auto ds = binary_panel(5, 4, 2);
  SUBCASE("single cluster") {
    auto c = small_config(ds);
    c.init = InitMode::SingleCluster;
    Rng rng(1);
    const auto s = initialize(ds, c, rng);
    for (int g : s.assignments.g.data()) CHECK(g == 0);
    for (auto d : s.assignments.d.data()) CHECK(d == 0);
  }
  SUBCASE("prior with full stickiness keeps units constant") {
    auto c = small_config(ds);
    c.initial_p = 1.0;
    Rng rng(2);
    const auto s = initialize(ds, c, rng);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t t = 1; t < 4; ++t) CHECK(s.assignments.g(i, t) == s.assignments.g(i, 0));
    }
  }
  SUBCASE("fixed seed is deterministic") {
    const auto c = small_config(ds);
    Rng a(3), b(3);
    const auto s1 = initialize(ds, c, a);
    const auto s2 = initialize(ds, c, b);
    CHECK(s1.assignments.g == s2.assignments.g);
    CHECK(s1.weights.q == s2.weights.q);
    CHECK(s1.p == s2.p);
    CHECK(s1.params == s2.params);
  }
}

TEST_CASE("degenerate data concentrates theta") {
  const auto ds = binary_panel(10, 10, 1);
  PanelDataset all_yes = ds;
  for (auto& c : all_yes.cells.data()) c.binary = {{1, 1}};
  auto c = small_config(all_yes);
  c.init = InitMode::SingleCluster;
  Rng rng(5);
  auto s = initialize(all_yes, c, rng);
  double sum = 0;
  const int n = 4000;
  for (int r = 0; r < n; ++r) {
    sweep_params(s, all_yes, c.model, rng);
    sum += s.params[0].theta[0];
  }
  CHECK(sum / n > 0.98);
  CHECK(sum / n == doctest::Approx(101.0 / 102).epsilon(0.002));
}

TEST_CASE("unoccupied clusters draw from the prior") {
  const auto ds = binary_panel(3, 2, 4);
  auto c = small_config(ds, 3);
  c.model.bernoulli[0] = {"y", 2.0, 5.0};
  c.init = InitMode::SingleCluster;
  Rng rng(7);
  auto s = initialize(ds, c, rng);
  std::vector<double> xs;
  for (int r = 0; r < 10'000; ++r) {
    sweep_params(s, ds, c.model, rng);
    xs.push_back(s.params[2].theta[0]);
  }
  const boost::math::beta_distribution<> prior(2.0, 5.0);
  CHECK(ks_test(xs, [&](double x) { return cdf(prior, x); }).p_value > 0.01);
}

TEST_CASE("parameters of disjoint clusters are uncorrelated") {
  auto ds = binary_panel(2, 2, 6);
  auto c = small_config(ds, 2);
  c.init = InitMode::SingleCluster;
  Rng rng(11);
  auto s = initialize(ds, c, rng);
  s.assignments.g(1, 0) = 1;
  s.assignments.g(1, 1) = 1;
  std::vector<double> a, b;
  for (int r = 0; r < 10'000; ++r) {
    sweep_params(s, ds, c.model, rng);
    a.push_back(s.params[0].theta[0]);
    b.push_back(s.params[1].theta[0]);
  }
  const double ma = mean(a), mb = mean(b);
  double cov = 0;
  for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - ma) * (b[i] - mb);
  cov /= a.size() - 1;
  CHECK(std::abs(cov / std::sqrt(sample_variance(a) * sample_variance(b))) < 0.05);
}

TEST_CASE("sticky indicator probability") {
  CHECK(sticky_indicator_probability(0.5, 0.5) == doctest::Approx(2.0 / 3));
  CHECK(sticky_indicator_probability(0.0, 0.3) == 0.0);
  CHECK(sticky_indicator_probability(1.0, 0.3) == 1.0);
}

TEST_CASE("sticky indicators follow the labels") {
  const auto ds = binary_panel(4, 3, 1);
  auto c = small_config(ds);
  c.init = InitMode::SingleCluster;
  Rng rng(13);
  auto s = initialize(ds, c, rng);
  s.assignments.g(0, 1) = 1;
  s.assignments.g(0, 2) = 1;
  s.p = 0.0;
  sweep_sticky_indicators(s, rng);
  for (auto d : s.assignments.d.data()) CHECK(d == 0);

  s.p = 0.5;
  int stuck = 0, n = 0;
  for (int r = 0; r < 20'000; ++r) {
    sweep_sticky_indicators(s, rng);
    CHECK(s.assignments.d(0, 1) == 0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(s.assignments.d(i, 0) == 0);
    stuck += s.assignments.d(1, 2);
    ++n;
  }
  const double expected = sticky_indicator_probability(0.5, s.weights.q(2, 0));
  CHECK(std::abs(double(stuck) / n - expected) < 4 * std::sqrt(0.25 / n));
}

TEST_CASE("stickiness posterior counts periods after the first") {
  Grid<std::uint8_t> d(2, 3, 0);
  d(0, 1) = d(0, 2) = d(1, 1) = 1;
  d(0, 0) = 1;  // ignored: the first period has no predecessor
  Rng rng(17);
  std::vector<double> xs;
  for (int r = 0; r < 10'000; ++r) xs.push_back(sample_stickiness(d, 1.0, 1.0, rng));
  const boost::math::beta_distribution<> post(4.0, 2.0);
  CHECK(ks_test(xs, [&](double x) { return cdf(post, x); }).p_value > 0.01);
  CHECK(std::abs(mean(xs) - 2.0 / 3) < 0.01);

  Grid<std::uint8_t> all(3, 4, 1);
  for (std::size_t i = 0; i < 3; ++i) all(i, 0) = 0;
  std::vector<double> ys;
  for (int r = 0; r < 10'000; ++r) ys.push_back(sample_stickiness(all, 1.0, 1.0, rng));
  CHECK(std::abs(mean(ys) - 10.0 / 11) < 0.01);

  Grid<std::uint8_t> none(3, 4, 0);
  std::vector<double> zs;
  for (int r = 0; r < 10'000; ++r) zs.push_back(sample_stickiness(none, 1.0, 1.0, rng));
  CHECK(std::abs(mean(zs) - 1.0 / 11) < 0.01);
}

TEST_CASE("stick weight posterior parameters") {
  AssignmentState a(4, 2);
  const int prev[] = {0, 0, 1, 1};
  for (std::size_t i = 0; i < 4; ++i) {
    a.g(i, 0) = prev[i];
    a.g(i, 1) = prev[i];
    a.d(i, 1) = 1;
  }
  const Concentration gamma(1.0);

  SUBCASE("first period uses its own counts") {
    const auto b = stick_weight_posterior_params(a, 0, gamma, 3);
    CHECK(b[0].a == 3.0);
    CHECK(b[0].b == 3.0);
    CHECK(b[1].a == 3.0);
    CHECK(b[1].b == 1.0);
  }
  SUBCASE("all sticky: only previous counts") {
    const auto b = stick_weight_posterior_params(a, 1, gamma, 3);
    CHECK(b[0].a == 3.0);
    CHECK(b[0].b == 3.0);
  }
  SUBCASE("one non-sticky unit adds to the current counts") {
    a.d(0, 1) = 0;
    const auto b = stick_weight_posterior_params(a, 1, gamma, 3);
    CHECK(b[0].a == 4.0);
    CHECK(b[0].b == 3.0);
    CHECK(b[1].a == 3.0);
    CHECK(b[1].b == 1.0);
  }
}

TEST_CASE("stick weight sweep keeps valid rows") {
  const auto ds = binary_panel(6, 3, 2);
  const auto c = small_config(ds, 5);
  Rng rng(19);
  auto s = initialize(ds, c, rng);
  for (int r = 0; r < 200; ++r) {
    sweep_stick_weights(s, Concentration(1.0), rng);
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(s.weights.pi(t, 4) == 1.0);
      double total = 0;
      for (std::size_t k = 0; k < 5; ++k) total += s.weights.q(t, k);
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("filter with one cluster is certain") {
  Rng rng(23);
  const auto w = random_weights(4, 1, rng);
  const auto f = forward_filter(random_evidence(4, 1, rng), w, 0.4);
  for (double x : f.log_prob.data()) CHECK(x == doctest::Approx(0.0));
  CHECK(backward_sample(f, w, 0.4, rng) == std::vector<int>(4, 0));
}

TEST_CASE("filter without stickiness mixes to the weights") {
  Rng rng(29);
  const auto w = random_weights(2, 3, rng);
  const auto e = random_evidence(2, 3, rng);
  const auto f = forward_filter(e, w, 0.0);
  double total = 0;
  for (int k = 0; k < 3; ++k) total += w.q(1, k) * std::exp(e(1, k));
  for (int k = 0; k < 3; ++k) {
    CHECK(std::exp(f.log_prob(1, k)) ==
          doctest::Approx(w.q(1, k) * std::exp(e(1, k)) / total).epsilon(1e-12));
  }
}

TEST_CASE("filter matches path enumeration") {
  Rng rng(31);
  for (int fixture = 0; fixture < 30; ++fixture) {
    const std::size_t periods = 1 + fixture % 3;
    const int k = 1 + (fixture / 3) % 3;
    const double p = fixture % 5 == 0 ? 0.0 : rng.uniform();
    const auto w = random_weights(periods, k, rng);
    const auto e = random_evidence(periods, k, rng);
    const auto f = forward_filter(e, w, p);
    CHECK(max_abs_diff(exp_grid(f.log_prob), enumerated_filter(e, w, p)) < 1e-10);
  }
}

TEST_CASE("filter rows are normalized on a dataset") {
  auto ds = binary_panel(2, 6, 8);
  ds.present(1, 3) = 0;
  const auto c = small_config(ds, 3);
  Rng rng(37);
  const auto s = initialize(ds, c, rng);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto f = forward_filter(i, ds, s.params, s.weights, s.p);
    for (std::size_t t = 0; t < 6; ++t) {
      double total = 0;
      for (double x : f.log_prob.row(t)) total += std::exp(x);
      CHECK(std::abs(total - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("filter reports impossible data") {
  Rng rng(41);
  const auto w = random_weights(3, 2, rng);
  Grid<double> e(3, 2, -1.0);
  e(2, 0) = e(2, 1) = -INFINITY;
  try {
    forward_filter(e, w, 0.5, 7);
    FAIL("expected FilterUnderflow");
  } catch (const FilterUnderflow& err) {
    CHECK(err.unit() == 7);
    CHECK(err.period() == 2);
  }
}

TEST_CASE("full stickiness keeps a sampled trajectory constant") {
  Rng rng(43);
  const auto w = random_weights(4, 3, rng);
  Grid<double> e(4, 3, 0.0);
  e(3, 0) = e(3, 2) = -INFINITY;
  const auto f = forward_filter(e, w, 1.0);
  for (int r = 0; r < 100; ++r) CHECK(backward_sample(f, w, 1.0, rng) == std::vector<int>(4, 1));
}

TEST_CASE("backward sampling matches the enumerated joint") {
  Rng rng(47);
  for (double p : {0.0, 0.3, 0.8}) {
    const auto w = random_weights(2, 2, rng);
    const auto e = random_evidence(2, 2, rng);
    const auto exact = enumerated_posterior(e, w, p);
    const auto f = forward_filter(e, w, p);
    std::map<std::vector<int>, double> empirical;
    const int n = 100'000;
    for (int r = 0; r < n; ++r) empirical[backward_sample(f, w, p, rng)] += 1.0 / n;
    double tv = 0;
    for (const auto& [path, prob] : exact) {
      tv += std::abs(prob - (empirical.contains(path) ? empirical.at(path) : 0.0));
    }
    CHECK(tv / 2 < 0.01);
  }
}

TEST_CASE("run_chain stores the post burn-in draws") {
  const auto ds = binary_panel(3, 3, 2);
  auto c = small_config(ds);
  c.n_iterations = 11;
  c.burn_in = 10;
  CHECK(run_chain(ds, c).draws.size() == 1);
  c.n_iterations = 30;
  c.thinning = 4;
  CHECK(c.stored_draw_count() == 5);
  const auto chain = run_chain(ds, c);
  REQUIRE(chain.draws.size() == 5);
  CHECK(chain.draws[0].iteration == 11);
  CHECK(chain.draws[4].iteration == 27);
  CHECK(chain.trace.size() == 30);
  for (const auto& t : chain.trace) CHECK(std::isfinite(t.log_joint));
}

TEST_CASE("run_chain is deterministic for a seed and worker count") {
  auto ds = binary_panel(6, 4, 3);
  Rng data_rng(53);
  for (auto& c : ds.cells.data()) c.binary[0].successes = long(data_rng.uniform() * 4);
  for (auto update : {AssignmentUpdate::Coupled, AssignmentUpdate::Independent}) {
    auto c = small_config(ds);
    c.update = update;
    c.seed = 99;
    const auto a = run_chain(ds, c);
    c.workers = 3;
    const auto b = run_chain(ds, c);
    REQUIRE(a.draws.size() == b.draws.size());
    for (std::size_t i = 0; i < a.draws.size(); ++i) {
      CHECK(a.draws[i].g == b.draws[i].g);
      CHECK(a.draws[i].d == b.draws[i].d);
      CHECK(a.draws[i].p == b.draws[i].p);
      CHECK(a.draws[i].log_joint == b.draws[i].log_joint);
    }
  }
}

TEST_CASE("stored draws are internally consistent") {
  const auto ds = binary_panel(5, 4, 2);
  auto c = small_config(ds, 6);
  c.n_iterations = 60;
  c.burn_in = 20;
  for (const auto& draw : run_chain(ds, c).draws) {
    AssignmentState a;
    a.g = draw.g;
    a.d = draw.d;
    CHECK_NOTHROW(a.check(6));
    for (const auto& [k, params] : draw.occupied_params) {
      CHECK(std::count(draw.g.data().begin(), draw.g.data().end(), k) > 0);
      CHECK(params.theta.size() == 1);
    }
  }
}

TEST_CASE("several chains differ and run concurrently") {
  const auto ds = binary_panel(4, 3, 2);
  auto c = small_config(ds);
  c.chains = 3;
  c.workers = 3;
  const auto chains = run_chains(ds, c);
  REQUIRE(chains.size() == 3);
  CHECK(chains[0].seed != chains[1].seed);
  const auto again = run_chain(ds, c, 2);
  CHECK(again.draws.back().g == chains[2].draws.back().g);
}

TEST_CASE("truncation alarm fires when the largest label is used") {
  PanelDataset ds(12, 2, {"y"}, {});
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t t = 0; t < 2; ++t) ds.cells(i, t).binary = {{(i % 2) ? 50 : 0, 50}};
  }
  auto c = small_config(ds, 2);
  c.n_iterations = 60;
  c.burn_in = 20;
  const auto chain = run_chain(ds, c);
  CHECK(chain.truncation_hit_rate > 0.01);
  CHECK(chain.truncation_warning);
}

TEST_CASE("occupancy counts labels in use") {
  Grid<int> g(2, 2, 0);
  g(1, 1) = 4;
  CHECK(occupancy(g) == std::pair<int, int>{2, 4});
}
