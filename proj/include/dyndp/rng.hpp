#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace dyndp {

/// Seedable random source. Child streams are derived from the parent's seed
/// and a caller-chosen stream id without touching the parent's state, so the
/// assignment of streams to units or clusters never depends on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Independent stream keyed by `stream_id`.
  Rng child(std::uint64_t stream_id) const;

  std::uint64_t next_u64() { return engine_(); }
  double uniform();  // (0, 1)
  bool bernoulli(double p);
  /// Gamma with shape-rate parameterization (mean shape / rate).
  double gamma(double shape, double rate);
  /// log of a Gamma(shape, 1) variate; stays finite for tiny shapes.
  double log_gamma_variate(double shape);
  double beta(double a, double b);
  long poisson(double mean);
  /// Index drawn proportionally to nonnegative weights. Weights need not sum
  /// to one but must have a positive total.
  int categorical(std::span<const double> weights);
  /// Index drawn proportionally to exp(log_weights).
  int categorical_log(std::span<const double> log_weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used for deriving seeds and for config hashing.
std::uint64_t mix64(std::uint64_t x);

}  // namespace dyndp
