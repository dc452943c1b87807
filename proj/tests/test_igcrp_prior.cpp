#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dyndp/igcrp_prior.hpp"

using namespace dyndp;

namespace {

// Fraction of `n` draws for which `event` holds, with its binomial standard
// error.
template <class F>
std::pair<double, double> frequency(int n, F&& event) {
  int hits = 0;
  for (int s = 0; s < n; ++s) hits += event() ? 1 : 0;
  const double f = double(hits) / n;
  return {f, std::sqrt(std::max(f * (1 - f), 1e-12) / n)};
}

PartitionKey relabel_by_first_appearance(std::vector<int> labels) {
  std::vector<int> map(labels.size() + 1, -1);
  int next = 0;
  for (int& l : labels) {
    if (map[l] < 0) map[l] = next++;
    l = map[l];
  }
  return labels;
}

}  // namespace

TEST_CASE("first unit seeds cluster 0") {
  Rng rng(1);
  for (double gamma : {0.01, 1.0, 100.0}) {
    CHECK(sample_initial_assignments(1, Concentration(gamma), rng) == std::vector<int>{0});
  }
}

TEST_CASE("concentration must be positive") {
  CHECK_THROWS_AS(Concentration(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Concentration(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(Concentration(NAN), std::invalid_argument);
}

TEST_CASE("fourth unit joins a two-member table with probability 2/(3 + gamma)") {
  const auto dist = enumerate_partition_distribution(4, 1, 0.0, Concentration(1.0));
  const double joins = dist.at({0, 1, 1, 1});
  double prefix = 0.0;
  for (const auto& [key, prob] : dist) {
    if (key[0] == 0 && key[1] == 1 && key[2] == 1) prefix += prob;
  }
  CHECK(joins / prefix == doctest::Approx(0.5).epsilon(1e-12));

  Rng rng(7);
  int matched = 0, joined = 0;
  for (int s = 0; s < 200'000; ++s) {
    const auto g = sample_initial_assignments(4, Concentration(1.0), rng);
    if (g[0] == 0 && g[1] == 1 && g[2] == 1) {
      ++matched;
      joined += g[3] == 1;
    }
  }
  const double f = double(joined) / matched;
  CHECK(std::abs(f - 0.5) < 4 * std::sqrt(0.25 / matched));
}

TEST_CASE("huge concentration seats every unit alone") {
  Rng rng(3);
  const auto [f, se] = frequency(100'000, [&] {
    auto g = sample_initial_assignments(5, Concentration(1e6), rng);
    std::sort(g.begin(), g.end());
    return std::unique(g.begin(), g.end()) == g.end();
  });
  CHECK(f > 0.99);
}

TEST_CASE("full stickiness copies the previous generation") {
  Rng rng(5);
  const std::vector<int> prev{0, 3, 3, 1, 2, 0};
  for (int s = 0; s < 100; ++s) {
    CHECK(sample_transition(prev, 1.0, Concentration(2.0), rng) == prev);
  }
}

TEST_CASE("first current unit: stay 2/3, new table 1/6") {
  // prev [1,2,2,1] with p = 0.5, gamma = 2: p + (1-p) 2/(4+gamma) and
  // (1-p) gamma/(4+gamma).
  const std::vector<int> prev{0, 1, 1, 0};
  Rng rng(11);
  int stay = 0, fresh = 0;
  const int n = 200'000;
  for (int s = 0; s < n; ++s) {
    const auto g = sample_transition(prev, 0.5, Concentration(2.0), rng);
    stay += g[0] == 0;
    fresh += g[0] == 2;
  }
  CHECK(std::abs(double(stay) / n - 2.0 / 3) < 4 * std::sqrt((2.0 / 9) / n));
  CHECK(std::abs(double(fresh) / n - 1.0 / 6) < 4 * std::sqrt((5.0 / 36) / n));
}

TEST_CASE("without stickiness the transition still depends on previous counts") {
  Rng rng(13);
  const int n = 100'000;
  auto first_in_zero = [&](std::vector<int> prev) {
    return frequency(n, [&] { return sample_transition(prev, 0.0, Concentration(1.0), rng)[0] == 0; });
  };
  const auto [f_concentrated, se_c] = first_in_zero({0, 0, 0, 0});
  const auto [f_split, se_s] = first_in_zero({0, 0, 1, 1});
  CHECK(f_concentrated - 2.576 * se_c > f_split + 2.576 * se_s);
  CHECK(f_concentrated == doctest::Approx(4.0 / 5).epsilon(0.01));
  CHECK(f_split == doctest::Approx(2.0 / 5).epsilon(0.02));
}

TEST_CASE("stick_break evaluates the product formula") {
  CHECK(stick_break(std::vector<double>{1.0}) == std::vector<double>{1.0});
  CHECK(stick_break(std::vector<double>{0.5, 0.5, 1.0}) == std::vector<double>{0.5, 0.25, 0.25});
  CHECK(stick_break(std::vector<double>{0.0, 0.0, 1.0}) == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("stick_break rejects invalid fractions") {
  CHECK_THROWS_AS(stick_break(std::vector<double>{1.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(stick_break(std::vector<double>{-0.1, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(stick_break(std::vector<double>{0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("stick Beta parameters from previous counts") {
  const Concentration gamma(1.0);
  SUBCASE("all counts on the first cluster") {
    const auto params = stick_beta_params(std::vector<int>{4, 0}, gamma, 3);
    REQUIRE(params.size() == 2);
    CHECK(params[0].a == 5.0);
    CHECK(params[0].b == 1.0);
  }
  SUBCASE("two equal clusters") {
    const auto params = stick_beta_params(std::vector<int>{2, 2}, gamma, 3);
    CHECK(params[1].a == 3.0);
    CHECK(params[1].b == 1.0);
  }
  SUBCASE("zero counts reduce to Beta(1, gamma)") {
    for (const auto& b : stick_beta_params(std::vector<int>{}, Concentration(2.5), 5)) {
      CHECK(b.a == 1.0);
      CHECK(b.b == 2.5);
    }
  }
}

TEST_CASE("sampled stick fractions have the Beta means") {
  Rng rng(17);
  const int n = 100'000;
  double sum_first = 0, sum_second = 0, sum_zero = 0;
  for (int s = 0; s < n; ++s) {
    sum_first += sample_stick_weights_prior(std::vector<int>{4, 0}, Concentration(1.0), 4, rng)[0];
    sum_second += sample_stick_weights_prior(std::vector<int>{2, 2}, Concentration(1.0), 4, rng)[1];
    sum_zero += sample_stick_weights_prior(std::vector<int>{0, 0}, Concentration(3.0), 4, rng)[0];
  }
  // Beta(5,1), Beta(3,1), Beta(1,3) means; sd of each mean is below 0.0015.
  CHECK(std::abs(sum_first / n - 5.0 / 6) < 0.005);
  CHECK(std::abs(sum_second / n - 3.0 / 4) < 0.005);
  CHECK(std::abs(sum_zero / n - 1.0 / 4) < 0.005);
}

TEST_CASE("sampled weight rows sum to one and pin the last stick") {
  Rng rng(19);
  for (int s = 0; s < 2000; ++s) {
    const auto path = sample_prior_path(6, 4, 5, Concentration(0.7), 0.3, rng);
    for (std::size_t t = 0; t < 4; ++t) {
      CHECK(path.weights.pi(t, 4) == 1.0);
      double total = 0;
      for (std::size_t k = 0; k < 5; ++k) total += path.weights.q(t, k);
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
    CHECK_NOTHROW(path.assignments.check(5));
  }
}

TEST_CASE("enumeration base cases") {
  const auto one = enumerate_partition_distribution(1, 1, 0.5, Concentration(1.0));
  REQUIRE(one.size() == 1);
  CHECK(one.at({0}) == 1.0);

  const auto two = enumerate_partition_distribution(2, 1, 0.5, Concentration(1.0));
  REQUIRE(two.size() == 2);
  CHECK(two.at({0, 0}) == doctest::Approx(0.5));
  CHECK(two.at({0, 1}) == doctest::Approx(0.5));
}

TEST_CASE("enumerated probabilities sum to one") {
  for (double p : {0.0, 0.5, 0.9}) {
    for (double gamma : {0.5, 2.0}) {
      for (std::optional<int> k : {std::optional<int>{}, std::optional<int>{4}}) {
        const auto dist = enumerate_partition_distribution(3, 2, p, Concentration(gamma), k);
        double total = 0;
        for (const auto& [_, prob] : dist) total += prob;
        CHECK(std::abs(total - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("enumeration refuses oversized instances") {
  CHECK_THROWS_AS(enumerate_partition_distribution(5, 3, 0.5, Concentration(1.0), {}, 100),
                  std::length_error);
}

TEST_CASE("two-period table matches sample_transition frequencies") {
  const auto exact = enumerate_partition_distribution(2, 2, 0.5, Concentration(1.0));
  Rng rng(23);
  PartitionDistribution empirical;
  const int n = 200'000;
  for (int s = 0; s < n; ++s) {
    Grid<int> g(2, 2);
    const auto first = sample_initial_assignments(2, Concentration(1.0), rng);
    const auto second = sample_transition(first, 0.5, Concentration(1.0), rng);
    for (int i = 0; i < 2; ++i) {
      g(i, 0) = first[i];
      g(i, 1) = second[i];
    }
    empirical[canonical_partition_key(g)] += 1.0 / n;
  }
  CHECK(total_variation(exact, empirical) < 0.01);
}

TEST_CASE("first-period partition law is exchangeable") {
  const auto dist = enumerate_partition_distribution(3, 1, 0.0, Concentration(1.3));
  std::vector<int> order{0, 1, 2};
  do {
    for (const auto& [key, prob] : dist) {
      std::vector<int> permuted(3);
      for (int i = 0; i < 3; ++i) permuted[i] = key[order[i]];
      CHECK(dist.at(relabel_by_first_appearance(permuted)) == doctest::Approx(prob).epsilon(1e-12));
    }
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST_CASE("stick-breaking path matches the truncated law") {
  const int truncation = 4;
  const double p = 0.5;
  const Concentration gamma(1.0);
  const auto exact = enumerate_partition_distribution(3, 2, p, gamma, truncation);
  Rng rng(29);
  PartitionDistribution empirical;
  const int n = 100'000;
  for (int s = 0; s < n; ++s) {
    const auto path = sample_prior_path(3, 2, truncation, gamma, p, rng);
    empirical[canonical_partition_key(path.assignments.g)] += 1.0 / n;
  }
  CHECK(total_variation(exact, empirical) < 0.02);
}

TEST_CASE("assignment check rejects inconsistent sticky indicators") {
  AssignmentState s(1, 2);
  s.g(0, 0) = 0;
  s.g(0, 1) = 1;
  s.d(0, 1) = 1;
  CHECK_THROWS_AS(s.check(3), std::logic_error);
  s.d(0, 1) = 0;
  s.d(0, 0) = 1;
  CHECK_THROWS_AS(s.check(3), std::logic_error);
  s.d(0, 0) = 0;
  CHECK_NOTHROW(s.check(3));
  CHECK_THROWS_AS(s.check(1), std::logic_error);
}
