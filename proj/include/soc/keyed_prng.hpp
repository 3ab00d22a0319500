#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "soc/core.hpp"

namespace soc {

// Stable 64-bit mixer (splitmix64 constants). Same output on every platform.
std::uint64_t mix64(std::uint64_t z);

// Top 53 bits of a mixed word, mapped to [0,1). Never returns 1.0.
double bits_to_unit(std::uint64_t bits);

// Counter-based key stream: key(i) = mix64(seed + GOLDEN * i). Stateless in
// the sense that (seed, counter) fully determines every draw.
struct KeyStream {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  std::uint64_t next_bits();
  double next(); // uniform in [0,1)
};

// Componentwise floor(coord / delta) grid cell of a point.
std::vector<std::int64_t> cell_id(std::span<const double> x, double delta);

// Seed for a grid cell's stream, folded from the master seed and the cell
// coordinates with mix64. Collisions merge two cells' streams, which is
// harmless for key freshness.
std::uint64_t cell_seed(std::uint64_t master_seed, std::span<const std::int64_t> cell);

enum class KeyMode { master, grid };

// Source of fresh keys. Master mode draws from one stream; grid mode draws
// from a per-cell stream chosen by the anchor point handed to stream_for().
// Copyable value type so state can be snapshotted and restored exactly.
class KeySource {
 public:
  static KeySource master(std::uint64_t seed);
  static KeySource grid(std::uint64_t seed, double delta);

  KeyMode mode() const { return mode_; }
  std::uint64_t master_seed() const { return master_seed_; }
  double grid_delta() const { return delta_; }

  // Stream the next key for a point anchored at x would come from. The
  // reference stays valid until the KeySource is copied or destroyed.
  KeyStream& stream_for(std::span<const double> x);
  double next_key(std::span<const double> x) { return stream_for(x).next(); }

  // Serialized state: (seed, counter) pairs in ascending seed order. Master
  // mode exposes exactly one pair.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> state() const;
  void restore(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& streams);

 private:
  KeyMode mode_ = KeyMode::master;
  std::uint64_t master_seed_ = 0;
  double delta_ = 0.0;
  KeyStream master_stream_;
  std::map<std::uint64_t, KeyStream> grid_streams_; // cell seed -> stream
};

// Key draws for one engine step are anchored at the processed point: the
// anchor picks the stream once, every draw advances that same stream.
class AnchoredKeys {
 public:
  AnchoredKeys(KeySource& source, std::span<const double> anchor)
      : stream_(source.stream_for(anchor)) {}
  double next() { return stream_.next(); }

 private:
  KeyStream& stream_;
};

// Extension of a skeleton set to exactly h entries. The first |S| entries are
// the originals in order; each appended entry copies the point of an existing
// entry drawn with probability weight/total (cumulative-weight inverse
// transform), gets weight 1, a fresh key and a fresh entry_id. Draw order per
// appended entry: selection value first, then key. Throws if h < |S|.
std::vector<SkeletonEntry> ext(const SkeletonSet& set, std::size_t h,
                               AnchoredKeys& keys, Partition& ids);

// Extension of a bare point: h copies of x, weight 1, one fresh key and a
// fresh entry_id per copy. Throws if h < 1.
std::vector<SkeletonEntry> ext(const Point& x, std::size_t h,
                               AnchoredKeys& keys, Partition& ids);

} // namespace soc
