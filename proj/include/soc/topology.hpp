#pragma once

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "soc/core.hpp"

namespace soc {

// Undirected graph over a cluster's entry ids. Edges are stored normalized
// (small id first) so iteration and serialization are deterministic.
struct TopologyGraph {
  ClusterId cluster_id = 0;
  std::set<EntryId> vertices;
  std::set<std::pair<EntryId, EntryId>> edges;

  void add_edge(EntryId a, EntryId b) {
    if (a == b) return;
    if (b < a) std::swap(a, b);
    edges.emplace(a, b);
  }
  bool has_edge(EntryId a, EntryId b) const {
    if (b < a) std::swap(a, b);
    return edges.count({a, b}) != 0;
  }
};

// One graph per live cluster when splitting is enabled.
struct GraphFamily {
  std::map<ClusterId, TopologyGraph> graphs;

  TopologyGraph* find(ClusterId id) {
    auto it = graphs.find(id);
    return it == graphs.end() ? nullptr : &it->second;
  }
  const TopologyGraph* find(ClusterId id) const {
    auto it = graphs.find(id);
    return it == graphs.end() ? nullptr : &it->second;
  }
};

// Vertices of each connected component, ascending within a component;
// components ordered by their smallest vertex.
std::vector<std::vector<EntryId>> connected_components(
    const std::set<EntryId>& vertices,
    const std::set<std::pair<EntryId, EntryId>>& edges);

// Outcome of a split: the replaced cluster, its fragments in creation order,
// and the fragment carrying the largest total weight (tie: smallest id),
// which evaluation uses as the parent's successor.
struct SplitRecord {
  ClusterId parent = 0;
  std::vector<ClusterId> fragments;
  ClusterId successor = 0;
};

// Split check around breaking-point entry v of cluster `id`: removes every
// entry within r/2 of v (v always removes itself), takes the connected
// components of the remainder, and when more than one is left replaces the
// cluster with one fragment per component. Zero or one component leaves the
// partition and graph family untouched. Removed entries are dropped.
std::optional<SplitRecord> check_split(GraphFamily& family,
                                       const SkeletonEntry& v, double r,
                                       ClusterId id, Partition& partition);

// Post-merge graph maintenance. origins[i] tags merged entry i with the index
// of the source cluster it came from (position in source_ids) or -1 when it
// embodies the linking point x. The merged graph keeps the union of source
// graphs restricted to surviving entry ids, adds edges between surviving
// entries inside B(x, r) with different source origins, and connects every
// linking-point entry to each surviving entry inside B(x, r).
void updated_graph(GraphFamily& family, std::span<const double> x, double r,
                   const std::vector<ClusterId>& source_ids,
                   const SkeletonSet& merged,
                   const std::vector<int>& origins);

} // namespace soc
