#include "dyndp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dyndp {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

Rng Rng::child(std::uint64_t stream_id) const {
  return Rng(mix64(seed_ ^ mix64(stream_id + 0x632be59bd9b4e019ULL)));
}

double Rng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

bool Rng::bernoulli(double p) { return uniform() < p; }

double Rng::log_gamma_variate(double shape) {
  if (!(shape > 0)) throw std::invalid_argument("gamma shape must be positive");
  if (shape >= 1.0) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return std::log(dist(engine_));
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a), evaluated in logs.
  std::gamma_distribution<double> dist(shape + 1.0, 1.0);
  const double g = dist(engine_);
  return std::log(g) + std::log(uniform()) / shape;
}

double Rng::gamma(double shape, double rate) {
  if (!(rate > 0)) throw std::invalid_argument("gamma rate must be positive");
  return std::exp(log_gamma_variate(shape)) / rate;
}

double Rng::beta(double a, double b) {
  if (!(a > 0) || !(b > 0)) {
    throw std::invalid_argument("beta parameters must be positive");
  }
  const double lx = log_gamma_variate(a);
  const double ly = log_gamma_variate(b);
  // x / (x + y) = 1 / (1 + exp(ly - lx))
  const double diff = ly - lx;
  if (diff > 0) {
    const double e = std::exp(-diff);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(diff));
}

long Rng::poisson(double mean) {
  if (mean < 0) throw std::invalid_argument("poisson mean must be nonnegative");
  if (mean == 0) return 0;
  std::poisson_distribution<long> dist(mean);
  return dist(engine_);
}

int Rng::categorical(std::span<const double> weights) {
  double total = 0;
  for (double w : weights) total += w;
  if (!(total > 0) || !std::isfinite(total)) {
    throw std::invalid_argument("categorical weights must have a positive finite total");
  }
  const double u = uniform() * total;
  double acc = 0;
  int last_positive = -1;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0) continue;
    acc += weights[k];
    last_positive = static_cast<int>(k);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

int Rng::categorical_log(std::span<const double> log_weights) {
  const double mx = *std::max_element(log_weights.begin(), log_weights.end());
  if (mx == -std::numeric_limits<double>::infinity() || std::isnan(mx)) {
    throw std::invalid_argument("categorical log-weights are all -inf");
  }
  double total = 0;
  for (double lw : log_weights) total += std::exp(lw - mx);
  const double u = uniform() * total;
  double acc = 0;
  int last_positive = -1;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    const double w = std::exp(log_weights[k] - mx);
    if (w <= 0) continue;
    acc += w;
    last_positive = static_cast<int>(k);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

}  // namespace dyndp
