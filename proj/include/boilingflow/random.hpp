#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

namespace bflow {

/// SplitMix64 finalizer; used for all seed derivations.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of substream `index` under `seed`: mix64(seed ^ mix64(index)).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) { return mix64(seed ^ mix64(index)); }

/// Standard-normal source for one generator step. Each (seed, step) pair
/// owns an independent stream, so a frame's noise never depends on how
/// many draws earlier frames consumed or on which thread produced them.
class StepNoise {
 public:
  StepNoise(std::uint64_t seed, std::uint64_t step) : engine_(derive_seed(seed, step)) {}
  double operator()() { return dist_(engine_); }

 private:
  boost::random::mt19937_64 engine_;
  boost::random::normal_distribution<double> dist_;
};

}  // namespace bflow
