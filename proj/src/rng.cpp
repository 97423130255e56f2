#include "mia/rng.hpp"

#include <cmath>
#include <cstring>

namespace mia {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x8f23ad4e9c1b0765ull;
  for (std::uint64_t p : parts) {
    state ^= p + 0x9e3779b97f4a7c15ull + (state << 6) + (state >> 2);
    state = splitmix64(state);
  }
  return state;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return mix_seed({a, b}); }

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed({a, b, c});
}

std::mt19937_64 seeded_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

std::vector<double> uniform_cube_point(std::mt19937_64& rng, int dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (double& v : out) v = u(rng);
  return out;
}

std::vector<double> gaussian_vector(std::mt19937_64& rng, int dim, double stddev) {
  std::normal_distribution<double> n(0.0, stddev);
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (double& v : out) v = n(rng);
  return out;
}

std::vector<double> unit_sphere_direction(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(dim));
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& v : out) {
      v = n(rng);
      norm2 += v * v;
    }
  } while (norm2 == 0.0);
  double inv = 1.0 / std::sqrt(norm2);
  for (double& v : out) v *= inv;
  return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64(const std::vector<double>& values, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h = fnv1a64(&bits, sizeof(bits), h);
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

}  // namespace mia
