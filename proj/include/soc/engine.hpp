#pragma once

#include <optional>
#include <set>
#include <vector>

#include "soc/claim_scan.hpp"
#include "soc/core.hpp"
#include "soc/keyed_prng.hpp"
#include "soc/topology.hpp"

namespace soc {

// Outcome of the merge arithmetic for one absorbed point.
// grow holds exactly when d_av > r/2 and h_un < max_skeleton.
struct MergeDecision {
  double d_av = 0.0;
  std::uint32_t h_un = 0;
  bool grow = false;
};

// What happened to one stream point. Historical points are never relabeled;
// a merge reports the freshly minted post-merge cluster id and the ids it
// replaced. splits lists cluster splits performed during this step's sweep,
// which runs before the point is read.
struct AssignmentEvent {
  enum class Action { merged, singleton };

  std::uint64_t point_index = 0;
  Action action = Action::singleton;
  ClusterId resulting_cluster_id = 0;
  std::vector<ClusterId> absorbed_cluster_ids;
  bool became_skeleton = true;
  std::optional<MergeDecision> decision; // merges only
  std::vector<SplitRecord> splits;
};

// Test-only introspection of one merge: the extended contributor columns in
// selection order (claimed clusters ascending by id, then the linking point's
// column when included) and the per-slot selection outcome.
struct MergeTrace {
  std::vector<ClusterId> contributor_ids;
  std::vector<std::vector<SkeletonEntry>> columns;
  bool x_set_included = false;
  std::vector<std::size_t> winner_column; // per slot, index into columns
  std::vector<int> origins;               // per merged entry, column index or -1
};

// Full engine state, exported for snapshots and restored on resume.
struct EngineState {
  EngineParams params;
  std::size_t dim = 0;
  std::uint64_t points_seen = 0;
  Partition partition;
  GraphFamily graphs;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> key_streams;
  std::vector<ClusterId> dirty;
};

// Streaming skeleton-set clusterer. Each point either merges every cluster
// that claims it (enough ball weight) into one new cluster, or founds a
// singleton cluster. With split_enabled the engine also maintains a topology
// graph per cluster and sweeps for breaking points before reading each point.
class SocEngine {
 public:
  explicit SocEngine(EngineParams params);
  static SocEngine from_state(EngineState state);
  EngineState export_state() const;

  AssignmentEvent process_point(const Point& x);

  const EngineParams& params() const { return params_; }
  const Partition& partition() const { return partition_; }
  const GraphFamily& graphs() const { return graphs_; }
  std::size_t dimension() const { return dim_; }
  std::uint64_t points_seen() const { return points_seen_; }
  std::size_t max_skeleton_seen() const { return max_skeleton_seen_; }

  void set_merge_trace(MergeTrace* sink) { trace_ = sink; }

  // Asserts every structural invariant; used by tests after each step.
  void validate_state() const;

 private:
  std::vector<SplitRecord> split_sweep();
  AssignmentEvent merge_point(const Point& x, std::vector<std::size_t> claimed);
  AssignmentEvent add_singleton(const Point& x);
  void note_skeleton_size(std::size_t n);

  EngineParams params_;
  KeySource keys_;
  Partition partition_;
  GraphFamily graphs_;
  std::size_t dim_ = 0;
  std::uint64_t points_seen_ = 0;
  std::size_t max_skeleton_seen_ = 0;
  std::set<ClusterId> dirty_;
  std::vector<ClaimStat> scan_buf_;
  MergeTrace* trace_ = nullptr;
};

} // namespace soc
