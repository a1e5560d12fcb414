#include "vrmd/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include <algorithm>

namespace vrmd {

namespace {

inline std::uint64_t splitmix_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t a = seed;
  std::uint64_t b = stream_id ^ 0x9E3779B97F4A7C15ULL;
  for (auto& w : s_) w = splitmix_next(a) ^ splitmix_next(b);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be >= 1");
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (lo < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi_v<double> * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

std::uint64_t make_stream_id(StreamRole role, std::uint64_t t, std::uint64_t k) {
  return (static_cast<std::uint64_t>(role) << 56) | ((t & 0xFFFFFFFFULL) << 24) |
         (k & 0xFFFFFFULL);
}

IndexBatch full_batch(std::int64_t n) {
  IndexBatch b;
  b.indices.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) b.indices[static_cast<std::size_t>(i)] = i;
  return b;
}

IndexBatch sample_without_replacement(RngStream& rng, std::int64_t n, std::int64_t k) {
  if (k <= 0 || k > n) {
    throw std::invalid_argument("sample_without_replacement: need 1 <= k <= n, got k=" +
                                std::to_string(k) + " n=" + std::to_string(n));
  }
  std::unordered_set<std::int64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(2 * k));
  for (std::int64_t j = n - k; j < n; ++j) {
    const auto t = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(j) + 1));
    if (chosen.count(t) != 0) {
      chosen.insert(j);
    } else {
      chosen.insert(t);
    }
  }
  IndexBatch out;
  out.indices.assign(chosen.begin(), chosen.end());
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

}  // namespace vrmd
