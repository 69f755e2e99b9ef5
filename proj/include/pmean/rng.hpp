#pragma once

#include <cstdint>

namespace pmean {

// Reserved stream-id offsets so that different sampler roles inside one
// experiment never share a stream even when they share the root seed.
inline constexpr std::uint64_t kChainStreamBase = 0;
inline constexpr std::uint64_t kExactPathStreamBase = std::uint64_t{1} << 40;
inline constexpr std::uint64_t kSdePathStreamBase = std::uint64_t{2} << 40;

// Counter-derived random stream: the (root_seed, stream_id) pair is hashed
// into the generator state, so stream i is the same sequence no matter how
// many streams run or in what order. Uniforms come from xoshiro256**,
// normals from Box-Muller; both are fixed algorithms with no
// platform-dependent behavior, which is what makes runs byte-reproducible.
class RngStream {
 public:
  explicit RngStream(std::uint64_t root_seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();

  // Uniform double in [0, 1), 53 random bits.
  double uniform();

  // Standard normal via Box-Muller; generates in pairs and caches the spare.
  double normal();

  std::uint64_t root_seed() const { return root_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t state_[4];
  std::uint64_t root_seed_;
  std::uint64_t stream_id_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pmean
