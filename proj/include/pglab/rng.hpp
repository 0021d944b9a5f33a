#pragma once

#include <cstdint>
#include <random>

namespace pglab {

/// Splittable random stream. (seed, id, call sequence) fully determines the draws.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t id);

  /// Independent stream derived from this stream's identity; does not advance this stream.
  RngStream child(std::uint64_t child_id) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal via Box–Muller, no cached variate.
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t id() const { return id_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t id_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace pglab
