#include "soc/topology.hpp"

#include <algorithm>

namespace soc {

std::vector<std::vector<EntryId>> connected_components(
    const std::set<EntryId>& vertices,
    const std::set<std::pair<EntryId, EntryId>>& edges) {
  std::map<EntryId, std::vector<EntryId>> adj;
  for (const auto& [a, b] : edges) {
    if (!vertices.count(a) || !vertices.count(b)) {
      throw ContractError("edge endpoint outside the vertex set");
    }
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<std::vector<EntryId>> components;
  std::set<EntryId> seen;
  for (EntryId start : vertices) {
    if (seen.count(start)) continue;
    std::vector<EntryId> component;
    std::vector<EntryId> frontier{start};
    seen.insert(start);
    while (!frontier.empty()) {
      EntryId u = frontier.back();
      frontier.pop_back();
      component.push_back(u);
      auto it = adj.find(u);
      if (it == adj.end()) continue;
      for (EntryId w : it->second) {
        if (seen.insert(w).second) frontier.push_back(w);
      }
    }
    std::sort(component.begin(), component.end());
    components.push_back(std::move(component));
  }
  return components;
}

std::optional<SplitRecord> check_split(GraphFamily& family,
                                       const SkeletonEntry& v, double r,
                                       ClusterId id, Partition& partition) {
  const SkeletonSet* set = partition.find(id);
  const TopologyGraph* graph = family.find(id);
  if (set == nullptr || graph == nullptr) {
    throw ContractError("check_split on unknown cluster");
  }

  const double half_r2 = (r / 2.0) * (r / 2.0);
  std::set<EntryId> removed;
  for (const auto& e : set->entries) {
    if (squared_distance(e.point, v.point) <= half_r2) removed.insert(e.entry_id);
  }

  std::set<EntryId> survivors;
  for (EntryId u : graph->vertices) {
    if (!removed.count(u)) survivors.insert(u);
  }
  std::set<std::pair<EntryId, EntryId>> surviving_edges;
  for (const auto& edge : graph->edges) {
    if (survivors.count(edge.first) && survivors.count(edge.second)) {
      surviving_edges.insert(edge);
    }
  }

  auto components = connected_components(survivors, surviving_edges);
  if (components.size() <= 1) return std::nullopt;

  SplitRecord record;
  record.parent = id;

  std::vector<SkeletonSet> fragments;
  std::vector<TopologyGraph> fragment_graphs;
  for (const auto& component : components) {
    std::set<EntryId> members(component.begin(), component.end());
    SkeletonSet frag;
    frag.cluster_id = partition.fresh_cluster_id();
    for (const auto& e : set->entries) {
      if (members.count(e.entry_id)) frag.add_entry(e);
    }
    TopologyGraph g;
    g.cluster_id = frag.cluster_id;
    g.vertices = members;
    for (const auto& edge : surviving_edges) {
      if (members.count(edge.first) && members.count(edge.second)) {
        g.edges.insert(edge);
      }
    }
    record.fragments.push_back(frag.cluster_id);
    fragments.push_back(std::move(frag));
    fragment_graphs.push_back(std::move(g));
  }

  // Successor for membership tracing: heaviest fragment, ties to smallest id.
  std::uint64_t best_weight = 0;
  record.successor = record.fragments.front();
  for (const auto& frag : fragments) {
    if (frag.total_weight > best_weight) {
      best_weight = frag.total_weight;
      record.successor = frag.cluster_id;
    }
  }

  partition.erase(id);
  family.graphs.erase(id);
  for (auto& frag : fragments) partition.insert(std::move(frag));
  for (auto& g : fragment_graphs) family.graphs.emplace(g.cluster_id, std::move(g));
  return record;
}

void updated_graph(GraphFamily& family, std::span<const double> x, double r,
                   const std::vector<ClusterId>& source_ids,
                   const SkeletonSet& merged,
                   const std::vector<int>& origins) {
  if (origins.size() != merged.entries.size()) {
    throw ContractError("updated_graph origin tags must cover every entry");
  }
  TopologyGraph out;
  out.cluster_id = merged.cluster_id;
  for (const auto& e : merged.entries) out.vertices.insert(e.entry_id);

  for (ClusterId sid : source_ids) {
    const TopologyGraph* g = family.find(sid);
    if (g == nullptr) throw ContractError("updated_graph with unknown source graph");
    for (const auto& edge : g->edges) {
      if (out.vertices.count(edge.first) && out.vertices.count(edge.second)) {
        out.edges.insert(edge);
      }
    }
  }

  const double r2 = r * r;
  std::vector<bool> in_ball(merged.entries.size());
  for (std::size_t i = 0; i < merged.entries.size(); ++i) {
    in_ball[i] = squared_distance(merged.entries[i].point, x) <= r2;
  }
  for (std::size_t i = 0; i < merged.entries.size(); ++i) {
    if (!in_ball[i]) continue;
    for (std::size_t j = i + 1; j < merged.entries.size(); ++j) {
      if (!in_ball[j]) continue;
      const bool cross_source = origins[i] >= 0 && origins[j] >= 0 &&
                                origins[i] != origins[j];
      const bool linking = origins[i] < 0 || origins[j] < 0;
      if (cross_source || linking) {
        out.add_edge(merged.entries[i].entry_id, merged.entries[j].entry_id);
      }
    }
  }

  for (ClusterId sid : source_ids) family.graphs.erase(sid);
  family.graphs.emplace(out.cluster_id, std::move(out));
}

} // namespace soc
