#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "soc/engine.hpp"

namespace soc {

// Unweighted mean over clusters of (dominant label count / cluster size).
// Outlier labels (-1) count like any other label here.
double purity(std::span<const ClusterId> assigned, std::span<const int> labels);

struct PuritySummary {
  double overall = 0.0;
  double non_outlier = 0.0; // restricted to points with label >= 0
  std::size_t cluster_count = 0;
};
PuritySummary purity_summary(std::span<const ClusterId> assigned,
                             std::span<const int> labels);

// Forwarding map from historical cluster ids to live ones. Merges forward
// every absorbed id to the minted id; a split forwards the parent to its
// recorded successor. Built by replaying assignment events.
class MembershipTrace {
 public:
  void record_merge(ClusterId into, std::span<const ClusterId> absorbed);
  void record_split(const SplitRecord& split);
  void apply(const AssignmentEvent& event);
  ClusterId resolve(ClusterId id) const;

 private:
  mutable std::unordered_map<ClusterId, ClusterId> forward_;
};

std::vector<ClusterId> resolve_all(std::span<const ClusterId> assigned,
                                   const MembershipTrace& trace);

// The two-sided error count: clusters whose traced points span two or more
// distinct non-outlier labels, and non-outlier labels spread across two or
// more clusters.
struct AuditCounts {
  std::size_t mixed_clusters = 0;
  std::size_t spread_labels = 0;
};
AuditCounts wrong_merge_audit(std::span<const ClusterId> assigned,
                              const MembershipTrace& trace,
                              std::span<const int> labels);

// Streaming view of how many live clusters contain each label, maintained
// incrementally from assignment events (splits included).
class LabelSpreadTracker {
 public:
  void observe(const AssignmentEvent& event, int label);
  std::size_t clusters_containing(int label) const;

 private:
  std::unordered_map<ClusterId, std::map<int, std::uint64_t>> cluster_labels_;
  std::unordered_map<int, std::size_t> label_clusters_;
};

// Nearest-center online baseline: a point joins the closest center within
// the threshold (running-mean update) or founds a new cluster.
std::vector<int> leader_follower(const std::vector<Point>& points,
                                 double threshold);

struct ThroughputResult {
  double micros_per_point = 0.0;
  std::uint64_t points = 0;
};
// Wall-clock over engine processing only; the point set is preloaded.
ThroughputResult measure_throughput(SocEngine& engine,
                                    const std::vector<Point>& points);

struct RunReport {
  bool has_labels = false;
  PuritySummary purity;
  AuditCounts audit;
  std::size_t final_cluster_count = 0;
  // Live cluster count after every 100th point, plus the final count.
  std::vector<std::pair<std::uint64_t, std::size_t>> cluster_trajectory;
  double micros_per_point = -1.0; // negative when not measured
  std::string params_echo;        // JSON text of the engine parameters
};

RunReport build_report(const std::vector<AssignmentEvent>& events,
                       std::span<const int> labels, // empty when unlabeled
                       const std::string& params_echo,
                       double micros_per_point);

std::string report_to_json(const RunReport& report);
std::string trajectory_to_csv(const RunReport& report);

} // namespace soc
