#include "rqf/rng.hpp"

#include <cmath>

namespace rqf {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t stream_key(std::uint64_t seed, std::string_view stream) {
  return mix64(seed ^ fnv1a64(stream));
}

std::uint64_t stream_key(std::uint64_t seed, std::string_view stream,
                         std::uint64_t a) {
  return mix64(stream_key(seed, stream) ^ mix64(a));
}

std::uint64_t stream_key(std::uint64_t seed, std::string_view stream,
                         std::uint64_t a, std::uint64_t b) {
  return mix64(stream_key(seed, stream, a) ^ mix64(b));
}

double Rng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  double u, v, s;
  do {
    u = uniform(-1.0, 1.0);
    v = uniform(-1.0, 1.0);
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return mean + stddev * u * f;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

}  // namespace rqf
