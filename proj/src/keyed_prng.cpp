#include "soc/keyed_prng.hpp"

#include <cmath>

namespace soc {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
} // namespace

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::uint64_t KeyStream::next_bits() {
  return mix64(seed + kGolden * ++counter);
}

double KeyStream::next() { return bits_to_unit(next_bits()); }

std::vector<std::int64_t> cell_id(std::span<const double> x, double delta) {
  if (!(delta > 0.0)) throw ContractError("grid delta must be positive");
  std::vector<std::int64_t> cell(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    cell[i] = static_cast<std::int64_t>(std::floor(x[i] / delta));
  }
  return cell;
}

std::uint64_t cell_seed(std::uint64_t master_seed, std::span<const std::int64_t> cell) {
  std::uint64_t h = mix64(master_seed ^ 0x5bf03635ca5a2c4bULL);
  for (std::int64_t c : cell) {
    h = mix64(h + kGolden + static_cast<std::uint64_t>(c));
  }
  return h;
}

KeySource KeySource::master(std::uint64_t seed) {
  KeySource s;
  s.mode_ = KeyMode::master;
  s.master_seed_ = seed;
  s.master_stream_ = KeyStream{seed, 0};
  return s;
}

KeySource KeySource::grid(std::uint64_t seed, double delta) {
  if (!(delta > 0.0)) throw ContractError("grid key mode needs a positive delta");
  KeySource s;
  s.mode_ = KeyMode::grid;
  s.master_seed_ = seed;
  s.delta_ = delta;
  return s;
}

KeyStream& KeySource::stream_for(std::span<const double> x) {
  if (mode_ == KeyMode::master) return master_stream_;
  const std::uint64_t seed = cell_seed(master_seed_, cell_id(x, delta_));
  auto [it, inserted] = grid_streams_.try_emplace(seed, KeyStream{seed, 0});
  return it->second;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> KeySource::state() const {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  if (mode_ == KeyMode::master) {
    out.emplace_back(master_stream_.seed, master_stream_.counter);
  } else {
    out.reserve(grid_streams_.size());
    for (const auto& [seed, stream] : grid_streams_) out.emplace_back(seed, stream.counter);
  }
  return out;
}

void KeySource::restore(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& streams) {
  if (mode_ == KeyMode::master) {
    if (streams.size() != 1 || streams[0].first != master_seed_) {
      throw ContractError("master key source restore state mismatch");
    }
    master_stream_.counter = streams[0].second;
  } else {
    grid_streams_.clear();
    for (const auto& [seed, counter] : streams) grid_streams_[seed] = KeyStream{seed, counter};
  }
}

std::vector<SkeletonEntry> ext(const SkeletonSet& set, std::size_t h,
                               AnchoredKeys& keys, Partition& ids) {
  if (set.entries.empty()) throw ContractError("ext of an empty skeleton set");
  if (h < set.entries.size()) {
    throw ContractError("ext target size below current skeleton size");
  }
  std::vector<SkeletonEntry> out = set.entries;
  out.reserve(h);
  if (h == set.entries.size()) return out;

  // Cumulative weights over the original entries; appended copies never
  // become selectable themselves.
  std::vector<std::uint64_t> cum(set.entries.size());
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    acc += set.entries[i].weight;
    cum[i] = acc;
  }
  const double total = static_cast<double>(acc);
  for (std::size_t j = set.entries.size(); j < h; ++j) {
    const double target = keys.next() * total;
    std::size_t pick = 0;
    while (pick + 1 < cum.size() && static_cast<double>(cum[pick]) <= target) ++pick;
    SkeletonEntry e;
    e.point = set.entries[pick].point;
    e.key = keys.next();
    e.weight = 1;
    e.entry_id = ids.fresh_entry_id();
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<SkeletonEntry> ext(const Point& x, std::size_t h,
                               AnchoredKeys& keys, Partition& ids) {
  if (h < 1) throw ContractError("ext of a point needs h >= 1");
  std::vector<SkeletonEntry> out;
  out.reserve(h);
  for (std::size_t j = 0; j < h; ++j) {
    SkeletonEntry e;
    e.point = x;
    e.key = keys.next();
    e.weight = 1;
    e.entry_id = ids.fresh_entry_id();
    out.push_back(std::move(e));
  }
  return out;
}

} // namespace soc
