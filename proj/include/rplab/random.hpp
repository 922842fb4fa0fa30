#pragma once

#include <cstdint>
#include <random>

namespace rplab {

// Seeded random source with derivable independent substreams.
//
// Draws are built from raw engine bits rather than std:: distributions so
// that identical seeds give identical sequences on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Independent child stream; depends only on (seed, stream path, id).
  Rng substream(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int n);  // [0, n)
  double normal();         // standard normal, Box-Muller

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rplab
