#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rqf {

// splitmix64 finalizer; bijective on 64-bit values.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t fnv1a64(std::string_view s);

// Stream-splitting rule: every random consumer derives its own generator
// from the single run seed and a stream name (plus optional integer
// indices). Adding a new consumer never perturbs the draws of existing
// streams.
//
//   key(seed, name)       = mix64(seed ^ fnv1a64(name))
//   key(seed, name, i...) = fold of k = mix64(k ^ mix64(i)) over the indices
std::uint64_t stream_key(std::uint64_t seed, std::string_view stream);
std::uint64_t stream_key(std::uint64_t seed, std::string_view stream,
                         std::uint64_t a);
std::uint64_t stream_key(std::uint64_t seed, std::string_view stream,
                         std::uint64_t a, std::uint64_t b);

// mt19937_64 with hand-rolled real-valued draws. The standard specifies the
// engine bit-exactly but not the distributions, so the conversions here are
// explicit to keep streams identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : gen_(key) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1), 53-bit resolution
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Marsaglia polar method; the spare deviate is cached.
  double normal(double mean, double stddev);

  // [0, n); fixed-point multiply, bias is O(n / 2^64)
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rqf
