#pragma once

#include <cstdint>

namespace eit3d {

// Counter-based Gaussian stream: the value at (seed, stream, index) is a pure
// function of its arguments, so parallel and serial generation agree bitwise.
// stream is used for the current-pattern index, index for the electrode.
double gaussian_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// splitmix64-style mix, exposed for hashing small tuples.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a over a byte range; used for config/layout fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull);

}  // namespace eit3d
