#include "eit3d/rng.hpp"

#include <cmath>
#include <cstddef>

namespace eit3d {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

static double uniform01(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t index, std::uint64_t lane) {
  std::uint64_t h = mix64(seed ^ mix64(stream ^ mix64(index ^ mix64(lane))));
  // 53-bit mantissa in (0,1]; never exactly 0 so log() is safe
  return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

double gaussian_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  double u1 = uniform01(seed, stream, index, 0);
  double u2 = uniform01(seed, stream, index, 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace eit3d
