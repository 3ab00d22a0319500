#include "soc/core.hpp"

#include <algorithm>
#include <cmath>

namespace soc {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw StreamError("dimension mismatch: " + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

std::uint64_t SkeletonSet::recompute_weight() const {
  std::uint64_t acc = 0;
  for (const auto& e : entries) acc += e.weight;
  return acc;
}

SkeletonSet* Partition::find(ClusterId id) {
  auto it = std::lower_bound(sets.begin(), sets.end(), id,
                             [](const SkeletonSet& s, ClusterId v) { return s.cluster_id < v; });
  if (it != sets.end() && it->cluster_id == id) return &*it;
  return nullptr;
}

const SkeletonSet* Partition::find(ClusterId id) const {
  return const_cast<Partition*>(this)->find(id);
}

void Partition::insert(SkeletonSet set) {
  if (!sets.empty() && sets.back().cluster_id >= set.cluster_id) {
    throw ContractError("partition insert must use a fresh (larger) cluster_id");
  }
  sets.push_back(std::move(set));
}

void Partition::erase(ClusterId id) {
  auto it = std::lower_bound(sets.begin(), sets.end(), id,
                             [](const SkeletonSet& s, ClusterId v) { return s.cluster_id < v; });
  if (it == sets.end() || it->cluster_id != id) {
    throw ContractError("partition erase of unknown cluster_id");
  }
  sets.erase(it);
}

void EngineParams::validate() const {
  if (!(radius > 0.0)) throw ContractError("radius must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ContractError("alpha must lie in (0,1)");
  if (max_skeleton < 1) throw ContractError("max_skeleton must be >= 1");
  if (h_init < 1 || h_init > max_skeleton) {
    throw ContractError("h_init must lie in [1, max_skeleton]");
  }
  if (grid_delta < 0.0) throw ContractError("grid_delta must be >= 0");
}

std::vector<std::size_t> ball_intersection(const SkeletonSet& set,
                                           std::span<const double> x,
                                           double r) {
  std::vector<std::size_t> out;
  const double r2 = r * r;
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    if (squared_distance(set.entries[i].point, x) <= r2) out.push_back(i);
  }
  return out;
}

std::uint64_t claim_weight(const SkeletonSet& set,
                           std::span<const std::size_t> entry_indices) {
  std::uint64_t acc = 0;
  for (std::size_t i : entry_indices) acc += set.entries[i].weight;
  return acc;
}

} // namespace soc
