#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vrmd/vec.hpp"

namespace vrmd {

// Deterministic, platform-stable random stream. xoshiro256** state seeded
// through SplitMix64 from (seed, stream_id), so each (seed, stream) pair owns
// an independent reproducible sequence. std::random distributions are
// implementation-defined, hence not used anywhere.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  // Unbiased draw from [0, n), n >= 1 (Lemire rejection).
  std::uint64_t next_below(std::uint64_t n);

  // [0, 1) with 53 random bits.
  double next_double();

  // Standard normal via Box-Muller; second value of each pair is cached.
  double next_gaussian();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::array<std::uint64_t, 4> s_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream-id layout shared by the optimizer loops so reference implementations
// can replay the exact same draws.
enum class StreamRole : std::uint64_t {
  kOutputSelect = 0,
  kOuterBatch = 1,
  kInnerBatch = 2,
  kProblemData = 3,
  kProbe = 4,
};

std::uint64_t make_stream_id(StreamRole role, std::uint64_t t = 0, std::uint64_t k = 0);

// Sorted distinct indices in [0, n).
struct IndexBatch {
  std::vector<std::int64_t> indices;
  std::int64_t size() const { return static_cast<std::int64_t>(indices.size()); }
};

IndexBatch full_batch(std::int64_t n);

// Uniform size-k subset of [0, n) via Floyd's algorithm. Every subset is
// equally probable. Throws std::invalid_argument unless 1 <= k <= n.
IndexBatch sample_without_replacement(RngStream& rng, std::int64_t n, std::int64_t k);

}  // namespace vrmd
