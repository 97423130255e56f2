#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mia {

// splitmix64 step; the standard 64-bit finalizer-based generator.
std::uint64_t splitmix64(std::uint64_t& state);

// Order-sensitive combination of seed components, used to derive
// independent sub-streams from (seed, index, ...) tuples.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

std::mt19937_64 seeded_rng(std::uint64_t seed);

// Point with iid U[0,1] coordinates.
std::vector<double> uniform_cube_point(std::mt19937_64& rng, int dim);

// Vector with iid N(0, stddev^2) coordinates.
std::vector<double> gaussian_vector(std::mt19937_64& rng, int dim, double stddev);

// Uniformly distributed direction on the unit sphere.
std::vector<double> unit_sphere_direction(std::mt19937_64& rng, int dim);

// FNV-1a over arbitrary bytes; used for content digests and
// per-input noise derivation.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(const std::vector<double>& values, std::uint64_t seed = 0xcbf29ce484222325ull);

std::string hex64(std::uint64_t value);

}  // namespace mia
