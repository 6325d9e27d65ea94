#ifndef SKD_RNG_HPP
#define SKD_RNG_HPP

#include <cstdint>
#include <random>

namespace skd {

namespace detail {
// splitmix64 finalizer, used to decorrelate derived seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace detail

// Seedable generator that every randomized routine receives by value.
// Copies are cheap enough and keep callers' state untouched; independent
// sub-tasks should use derive() so trial grids stay reproducible no matter
// how much randomness each task consumes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(detail::mix64(seed)) {}

  // Independent child generator for sub-task `stream`.
  Rng derive(std::uint64_t stream) const {
    return Rng(detail::mix64(seed_ ^ detail::mix64(stream + 0x51ed2701)));
  }

  std::uint64_t seed() const { return seed_; }

  double gaussian() { return normal_(engine_); }
  double uniform01() { return unit_(engine_); }
  bool bernoulli(double p) { return unit_(engine_) < p; }
  double rademacher() { return (engine_() & 1u) ? 1.0 : -1.0; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
    return d(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace skd

#endif  // SKD_RNG_HPP
