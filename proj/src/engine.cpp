#include "soc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace soc {

namespace {

KeySource make_key_source(const EngineParams& p) {
  if (p.grid_delta > 0.0) return KeySource::grid(p.master_seed, p.grid_delta);
  return KeySource::master(p.master_seed);
}

} // namespace

SocEngine::SocEngine(EngineParams params)
    : params_(params), keys_(make_key_source(params)) {
  params_.validate();
}

SocEngine SocEngine::from_state(EngineState state) {
  SocEngine engine(state.params);
  engine.keys_.restore(state.key_streams);
  engine.partition_ = std::move(state.partition);
  engine.graphs_ = std::move(state.graphs);
  engine.dim_ = state.dim;
  engine.points_seen_ = state.points_seen;
  engine.dirty_ = std::set<ClusterId>(state.dirty.begin(), state.dirty.end());
  for (const auto& set : engine.partition_.sets) {
    engine.note_skeleton_size(set.size());
  }
  engine.validate_state();
  return engine;
}

EngineState SocEngine::export_state() const {
  EngineState state;
  state.params = params_;
  state.dim = dim_;
  state.points_seen = points_seen_;
  state.partition = partition_;
  state.graphs = graphs_;
  state.key_streams = keys_.state();
  state.dirty.assign(dirty_.begin(), dirty_.end());
  return state;
}

void SocEngine::note_skeleton_size(std::size_t n) {
  if (n > max_skeleton_seen_) max_skeleton_seen_ = n;
}

AssignmentEvent SocEngine::process_point(const Point& x) {
  if (x.empty()) throw StreamError("empty point in stream");
  if (dim_ == 0) {
    dim_ = x.size();
  } else if (x.size() != dim_) {
    throw StreamError("dimension drift: expected " + std::to_string(dim_) +
                      ", got " + std::to_string(x.size()));
  }

  std::vector<SplitRecord> splits;
  if (params_.split_enabled) splits = split_sweep();

  claim_scan(partition_, x, params_.radius, params_.alpha,
             params_.parallel_scan, scan_buf_);
  std::vector<std::size_t> claimed;
  for (std::size_t i = 0; i < scan_buf_.size(); ++i) {
    if (scan_buf_[i].claimed) claimed.push_back(i);
  }

  AssignmentEvent event = claimed.empty() ? add_singleton(x)
                                          : merge_point(x, std::move(claimed));
  event.point_index = points_seen_;
  event.splits = std::move(splits);
  ++points_seen_;
  return event;
}

std::vector<SplitRecord> SocEngine::split_sweep() {
  std::vector<ClusterId> to_check;
  if (params_.full_split_sweep) {
    to_check.reserve(partition_.sets.size());
    for (const auto& set : partition_.sets) to_check.push_back(set.cluster_id);
  } else {
    to_check.assign(dirty_.begin(), dirty_.end());
  }

  std::vector<SplitRecord> records;
  for (ClusterId id : to_check) {
    const SkeletonSet* set = partition_.find(id);
    if (set == nullptr) continue; // erased by an earlier split this sweep
    const double threshold =
        static_cast<double>(set->total_weight) / (2.0 * static_cast<double>(set->size()));

    // Breaking-point candidates in ascending (weight, entry_id) order.
    std::vector<const SkeletonEntry*> candidates;
    for (const auto& e : set->entries) {
      if (static_cast<double>(e.weight) <= threshold) candidates.push_back(&e);
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const SkeletonEntry* a, const SkeletonEntry* b) {
                if (a->weight != b->weight) return a->weight < b->weight;
                return a->entry_id < b->entry_id;
              });

    bool split = false;
    for (const SkeletonEntry* v : candidates) {
      // check_split erases the cluster on success, so copy the breaking point.
      SkeletonEntry breaking = *v;
      auto record = check_split(graphs_, breaking, params_.radius, id, partition_);
      if (record) {
        for (ClusterId frag : record->fragments) dirty_.insert(frag);
        dirty_.erase(id);
        records.push_back(std::move(*record));
        split = true;
        break;
      }
    }
    if (!split) dirty_.erase(id);
  }
  return records;
}

AssignmentEvent SocEngine::add_singleton(const Point& x) {
  AnchoredKeys keys(keys_, x);
  SkeletonSet set;
  set.cluster_id = partition_.fresh_cluster_id();
  for (auto& e : ext(x, params_.h_init, keys, partition_)) set.add_entry(std::move(e));
  note_skeleton_size(set.size());

  if (params_.split_enabled) {
    TopologyGraph g;
    g.cluster_id = set.cluster_id;
    for (const auto& e : set.entries) g.vertices.insert(e.entry_id);
    // Co-located copies (h_init > 1) start fully connected.
    for (std::size_t i = 0; i < set.entries.size(); ++i) {
      for (std::size_t j = i + 1; j < set.entries.size(); ++j) {
        g.add_edge(set.entries[i].entry_id, set.entries[j].entry_id);
      }
    }
    graphs_.graphs.emplace(g.cluster_id, std::move(g));
  }

  AssignmentEvent event;
  event.action = AssignmentEvent::Action::singleton;
  event.resulting_cluster_id = set.cluster_id;
  event.became_skeleton = true;
  dirty_.insert(set.cluster_id);
  partition_.insert(std::move(set));
  return event;
}

AssignmentEvent SocEngine::merge_point(const Point& x,
                                       std::vector<std::size_t> claimed) {
  const double r = params_.radius;
  const double r2 = r * r;
  const std::uint32_t cap = params_.max_skeleton;

  std::vector<ClusterId> claimed_ids;
  claimed_ids.reserve(claimed.size());
  for (std::size_t idx : claimed) {
    claimed_ids.push_back(partition_.sets[idx].cluster_id);
  }

  // Ball weight and weighted average distance over the claimed sets' original
  // entries, in cluster then entry order.
  std::uint64_t ball_weight = 0;
  double weighted_dist = 0.0;
  std::size_t size_sum = 0;
  for (std::size_t idx : claimed) {
    const SkeletonSet& set = partition_.sets[idx];
    size_sum += set.size();
    for (const auto& e : set.entries) {
      const double d2 = squared_distance(e.point, x);
      if (d2 <= r2) {
        ball_weight += e.weight;
        weighted_dist += static_cast<double>(e.weight) * std::sqrt(d2);
      }
    }
  }
  const double d_av = weighted_dist / static_cast<double>(ball_weight);
  const std::uint32_t h_un =
      static_cast<std::uint32_t>(std::min<std::size_t>(size_sum, cap));
  const bool include_x_set = d_av <= r / 2.0 || h_un == cap;
  const bool grow = d_av > r / 2.0 && h_un < cap;

  // Fresh keys for this merge all come from x's stream, in a fixed order:
  // claimed-cluster extensions ascending by cluster id, then the linking
  // point's column when included, then the single growth / nearest-entry key.
  AnchoredKeys keys(keys_, x);
  std::vector<std::vector<SkeletonEntry>> columns;
  columns.reserve(claimed.size() + 1);
  for (std::size_t idx : claimed) {
    columns.push_back(ext(partition_.sets[idx], h_un, keys, partition_));
  }
  if (include_x_set) columns.push_back(ext(x, h_un, keys, partition_));

  SkeletonSet merged;
  merged.cluster_id = partition_.fresh_cluster_id();
  std::vector<int> origins;
  std::vector<std::size_t> winner_column(h_un);
  origins.reserve(h_un + 1);
  bool x_survived = false;
  for (std::uint32_t j = 0; j < h_un; ++j) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < columns.size(); ++c) {
      if (columns[c][j].key < columns[best][j].key) best = c; // ties keep lowest column
    }
    winner_column[j] = best;
    const bool from_x = include_x_set && best + 1 == columns.size();
    if (from_x) x_survived = true;
    origins.push_back(from_x ? -1 : static_cast<int>(best));
    merged.add_entry(columns[best][j]);
  }

  bool became_skeleton;
  if (grow) {
    SkeletonEntry e;
    e.point = x;
    e.key = keys.next();
    e.weight = 1;
    e.entry_id = partition_.fresh_entry_id();
    merged.add_entry(std::move(e));
    origins.push_back(-1);
    became_skeleton = true;
  } else if (!x_survived) {
    // Nearest merged entry absorbs x's unit of weight; ties resolve to the
    // smallest entry_id.
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < merged.entries.size(); ++i) {
      const double d2 = squared_distance(merged.entries[i].point, x);
      if (d2 < best_d2 ||
          (d2 == best_d2 && merged.entries[i].entry_id < merged.entries[best].entry_id)) {
        best_d2 = d2;
        best = i;
      }
    }
    merged.entries[best].weight += 1;
    merged.total_weight += 1;
    merged.entries[best].key = std::min(merged.entries[best].key, keys.next());
    became_skeleton = false;
  } else {
    became_skeleton = true;
  }

  if (trace_ != nullptr) {
    trace_->contributor_ids = claimed_ids;
    trace_->columns = columns;
    trace_->x_set_included = include_x_set;
    trace_->winner_column = winner_column;
    trace_->origins = origins;
  }

  note_skeleton_size(merged.size());
  const ClusterId merged_id = merged.cluster_id;
  if (params_.split_enabled) {
    // Consumes and erases the source graphs, so this runs before the
    // partition drops the claimed sets.
    updated_graph(graphs_, x, r, claimed_ids, merged, origins);
  }
  for (ClusterId id : claimed_ids) {
    partition_.erase(id);
    dirty_.erase(id);
  }
  partition_.insert(std::move(merged));
  dirty_.insert(merged_id);

  AssignmentEvent event;
  event.action = AssignmentEvent::Action::merged;
  event.resulting_cluster_id = merged_id;
  event.absorbed_cluster_ids = std::move(claimed_ids);
  event.became_skeleton = became_skeleton;
  event.decision = MergeDecision{d_av, h_un, grow};
  return event;
}

void SocEngine::validate_state() const {
  std::set<EntryId> seen_entries;
  ClusterId prev = 0;
  bool first = true;
  for (const auto& set : partition_.sets) {
    if (!first && set.cluster_id <= prev) {
      throw ContractError("partition not in ascending cluster order");
    }
    first = false;
    prev = set.cluster_id;
    if (set.cluster_id >= partition_.next_cluster_id) {
      throw ContractError("cluster id at or beyond the id counter");
    }
    if (set.entries.empty()) throw ContractError("empty skeleton set");
    if (set.size() > params_.max_skeleton) throw ContractError("skeleton over cap");
    if (set.total_weight != set.recompute_weight()) {
      throw ContractError("stale cached total_weight");
    }
    for (const auto& e : set.entries) {
      if (e.weight < 1) throw ContractError("entry weight below 1");
      if (!(e.key >= 0.0 && e.key < 1.0)) throw ContractError("key outside [0,1)");
      if (dim_ != 0 && e.point.size() != dim_) throw ContractError("entry dimension drift");
      if (e.entry_id >= partition_.next_entry_id) {
        throw ContractError("entry id at or beyond the id counter");
      }
      if (!seen_entries.insert(e.entry_id).second) {
        throw ContractError("duplicate entry id across partition");
      }
    }
  }

  if (!params_.split_enabled) {
    if (!graphs_.graphs.empty()) throw ContractError("graphs present without splitting");
    return;
  }
  if (graphs_.graphs.size() != partition_.sets.size()) {
    throw ContractError("graph family out of sync with partition");
  }
  for (const auto& set : partition_.sets) {
    const TopologyGraph* g = graphs_.find(set.cluster_id);
    if (g == nullptr) throw ContractError("cluster without a graph");
    if (g->vertices.size() != set.size()) {
      throw ContractError("graph vertex count differs from skeleton size");
    }
    for (const auto& e : set.entries) {
      if (!g->vertices.count(e.entry_id)) {
        throw ContractError("entry missing from its graph");
      }
    }
    for (const auto& edge : g->edges) {
      if (!g->vertices.count(edge.first) || !g->vertices.count(edge.second)) {
        throw ContractError("edge endpoint outside the graph");
      }
      if (edge.first >= edge.second) throw ContractError("edge not normalized");
    }
  }
}

} // namespace soc
