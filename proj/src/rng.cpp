#include "pglab/rng.hpp"

#include <cmath>
#include <numbers>

namespace pglab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
std::uint64_t mix(std::uint64_t seed, std::uint64_t id) {
  return splitmix64(splitmix64(seed) ^ (id * 0xd1b54a32d192ed03ULL + 0x8bb84b93962eacc9ULL));
}
}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t id)
    : seed_(seed), id_(id), engine_(mix(seed, id)) {}

RngStream RngStream::child(std::uint64_t child_id) const {
  return RngStream(mix(seed_, id_), child_id);
}

double RngStream::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pglab
