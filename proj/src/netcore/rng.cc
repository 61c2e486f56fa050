#include "eelmo/netcore/rng.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "eelmo/errors.h"

namespace eelmo::net {

std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t SeededRng::NextU64() {
  return Mix64(Mix64(seed_) ^ (counter_++ * 0xd1b54a32d192ed03ULL));
}

double SeededRng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::Below(std::uint64_t n) {
  if (n == 0) throw ParameterError("Below(0) has no valid outcome");
  unsigned __int128 wide = static_cast<unsigned __int128>(NextU64()) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

double SeededRng::Normal() {
  double u1 = 1.0 - Uniform();  // (0, 1]
  double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

SeededRng SeededRng::Fork(std::uint64_t stream) const {
  return SeededRng(Mix64(seed_ ^ Mix64(stream + 0x632be59bd9b4e019ULL)));
}

std::vector<std::size_t> SeededRng::SampleWithoutReplacement(
    std::size_t n, std::size_t count, std::size_t exclude) {
  std::size_t available = exclude < n ? n - 1 : n;
  if (count > available) {
    throw ParameterError("cannot draw " + std::to_string(count) +
                         " distinct values from a pool of " +
                         std::to_string(available));
  }
  std::vector<std::size_t> out;
  out.reserve(count);
  if (count * 4 <= available) {
    // Sparse draw: rejection against what we already have.
    std::unordered_set<std::size_t> seen;
    const bool use_set = count > 64;
    while (out.size() < count) {
      std::size_t v = static_cast<std::size_t>(Below(n));
      if (v == exclude) continue;
      if (use_set) {
        if (!seen.insert(v).second) continue;
      } else if (std::find(out.begin(), out.end(), v) != out.end()) {
        continue;
      }
      out.push_back(v);
    }
    return out;
  }
  std::vector<std::size_t> pool;
  pool.reserve(available);
  for (std::size_t v = 0; v < n; ++v) {
    if (v != exclude) pool.push_back(v);
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + static_cast<std::size_t>(Below(pool.size() - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace eelmo::net
