#include "soc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace soc {

namespace {

double purity_of_groups(const std::map<ClusterId, std::map<int, std::uint64_t>>& groups) {
  if (groups.empty()) throw ContractError("purity of an empty assignment");
  double acc = 0.0;
  for (const auto& [id, counts] : groups) {
    std::uint64_t total = 0, best = 0;
    for (const auto& [label, n] : counts) {
      total += n;
      best = std::max(best, n);
    }
    acc += static_cast<double>(best) / static_cast<double>(total);
  }
  return acc / static_cast<double>(groups.size());
}

std::map<ClusterId, std::map<int, std::uint64_t>> group_labels(
    std::span<const ClusterId> assigned, std::span<const int> labels,
    bool skip_outliers) {
  if (assigned.size() != labels.size()) {
    throw ContractError("assignments and labels differ in length");
  }
  std::map<ClusterId, std::map<int, std::uint64_t>> groups;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    if (skip_outliers && labels[i] < 0) continue;
    ++groups[assigned[i]][labels[i]];
  }
  return groups;
}

} // namespace

double purity(std::span<const ClusterId> assigned, std::span<const int> labels) {
  return purity_of_groups(group_labels(assigned, labels, false));
}

PuritySummary purity_summary(std::span<const ClusterId> assigned,
                             std::span<const int> labels) {
  PuritySummary out;
  auto groups = group_labels(assigned, labels, false);
  out.overall = purity_of_groups(groups);
  out.cluster_count = groups.size();
  auto core_groups = group_labels(assigned, labels, true);
  out.non_outlier = core_groups.empty() ? 1.0 : purity_of_groups(core_groups);
  return out;
}

void MembershipTrace::record_merge(ClusterId into,
                                   std::span<const ClusterId> absorbed) {
  for (ClusterId id : absorbed) forward_[id] = into;
}

void MembershipTrace::record_split(const SplitRecord& split) {
  forward_[split.parent] = split.successor;
}

void MembershipTrace::apply(const AssignmentEvent& event) {
  for (const auto& split : event.splits) record_split(split);
  if (event.action == AssignmentEvent::Action::merged) {
    record_merge(event.resulting_cluster_id, event.absorbed_cluster_ids);
  }
}

ClusterId MembershipTrace::resolve(ClusterId id) const {
  ClusterId cur = id;
  std::vector<ClusterId> path;
  for (auto it = forward_.find(cur); it != forward_.end(); it = forward_.find(cur)) {
    path.push_back(cur);
    cur = it->second;
  }
  for (ClusterId hop : path) forward_[hop] = cur; // path compression
  return cur;
}

std::vector<ClusterId> resolve_all(std::span<const ClusterId> assigned,
                                   const MembershipTrace& trace) {
  std::vector<ClusterId> out;
  out.reserve(assigned.size());
  for (ClusterId id : assigned) out.push_back(trace.resolve(id));
  return out;
}

AuditCounts wrong_merge_audit(std::span<const ClusterId> assigned,
                              const MembershipTrace& trace,
                              std::span<const int> labels) {
  if (assigned.size() != labels.size()) {
    throw ContractError("assignments and labels differ in length");
  }
  std::map<ClusterId, std::set<int>> cluster_core_labels;
  std::map<int, std::set<ClusterId>> label_clusters;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    if (labels[i] < 0) continue;
    const ClusterId c = trace.resolve(assigned[i]);
    cluster_core_labels[c].insert(labels[i]);
    label_clusters[labels[i]].insert(c);
  }
  AuditCounts out;
  for (const auto& [c, ls] : cluster_core_labels) {
    if (ls.size() >= 2) ++out.mixed_clusters;
  }
  for (const auto& [label, cs] : label_clusters) {
    if (cs.size() >= 2) ++out.spread_labels;
  }
  return out;
}

void LabelSpreadTracker::observe(const AssignmentEvent& event, int label) {
  // Splits happened before the point was read: the parent's traced points
  // move wholesale to the recorded successor fragment.
  for (const auto& split : event.splits) {
    auto node = cluster_labels_.extract(split.parent);
    if (!node.empty()) {
      node.key() = split.successor;
      cluster_labels_.insert(std::move(node));
    }
  }

  // The minted cluster starts empty, so after folding the absorbed label
  // counts in, each label present lost one live cluster per absorbed set
  // containing it and gained exactly the minted one.
  auto& target = cluster_labels_[event.resulting_cluster_id];
  if (event.action == AssignmentEvent::Action::merged) {
    for (ClusterId absorbed : event.absorbed_cluster_ids) {
      auto it = cluster_labels_.find(absorbed);
      if (it == cluster_labels_.end()) continue;
      for (const auto& [l, n] : it->second) {
        target[l] += n;
        --label_clusters_[l];
      }
      cluster_labels_.erase(it);
    }
    for (const auto& [l, n] : target) ++label_clusters_[l];
  }

  auto [it, inserted] = target.try_emplace(label, 0);
  if (it->second == 0) ++label_clusters_[label];
  it->second += 1;
}

std::size_t LabelSpreadTracker::clusters_containing(int label) const {
  auto it = label_clusters_.find(label);
  return it == label_clusters_.end() ? 0 : it->second;
}

std::vector<int> leader_follower(const std::vector<Point>& points,
                                 double threshold) {
  if (!(threshold > 0.0)) throw ContractError("leader-follower threshold must be positive");
  std::vector<Point> centers;
  std::vector<std::uint64_t> counts;
  std::vector<int> assigned;
  assigned.reserve(points.size());
  for (const auto& x : points) {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d2 = squared_distance(centers[c], x);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = c;
      }
    }
    if (!centers.empty() && std::sqrt(best_d2) <= threshold) {
      counts[best] += 1;
      const double inv = 1.0 / static_cast<double>(counts[best]);
      for (std::size_t d = 0; d < x.size(); ++d) {
        centers[best][d] += (x[d] - centers[best][d]) * inv;
      }
      assigned.push_back(static_cast<int>(best));
    } else {
      centers.push_back(x);
      counts.push_back(1);
      assigned.push_back(static_cast<int>(centers.size()) - 1);
    }
  }
  return assigned;
}

ThroughputResult measure_throughput(SocEngine& engine,
                                    const std::vector<Point>& points) {
  const auto start = std::chrono::steady_clock::now();
  for (const auto& x : points) engine.process_point(x);
  const auto stop = std::chrono::steady_clock::now();
  ThroughputResult out;
  out.points = points.size();
  const double micros =
      std::chrono::duration<double, std::micro>(stop - start).count();
  out.micros_per_point = points.empty() ? 0.0 : micros / static_cast<double>(points.size());
  return out;
}

RunReport build_report(const std::vector<AssignmentEvent>& events,
                       std::span<const int> labels,
                       const std::string& params_echo,
                       double micros_per_point) {
  RunReport report;
  report.params_echo = params_echo;
  report.micros_per_point = micros_per_point;

  MembershipTrace trace;
  std::vector<ClusterId> assigned;
  assigned.reserve(events.size());
  std::size_t live = 0;
  for (const auto& event : events) {
    for (const auto& split : event.splits) {
      live += split.fragments.size();
      live -= 1;
    }
    if (event.action == AssignmentEvent::Action::merged) {
      live -= event.absorbed_cluster_ids.size();
    }
    live += 1;
    trace.apply(event);
    assigned.push_back(event.resulting_cluster_id);
    if ((event.point_index + 1) % 100 == 0) {
      report.cluster_trajectory.emplace_back(event.point_index, live);
    }
  }
  if (!events.empty() &&
      (report.cluster_trajectory.empty() ||
       report.cluster_trajectory.back().first != events.back().point_index)) {
    report.cluster_trajectory.emplace_back(events.back().point_index, live);
  }
  report.final_cluster_count = live;

  if (!labels.empty() && !events.empty()) {
    report.has_labels = true;
    auto resolved = resolve_all(assigned, trace);
    report.purity = purity_summary(resolved, labels);
    report.audit = wrong_merge_audit(assigned, trace, labels);
  }
  return report;
}

std::string report_to_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["format"] = "soc-report-v1";
  if (report.has_labels) {
    j["purity"] = report.purity.overall;
    j["purity_non_outlier"] = report.purity.non_outlier;
    j["wrong_merge_count"] = report.audit.mixed_clusters;
    j["label_spread_count"] = report.audit.spread_labels;
  } else {
    j["purity"] = nullptr;
    j["purity_non_outlier"] = nullptr;
    j["wrong_merge_count"] = nullptr;
    j["label_spread_count"] = nullptr;
  }
  j["final_cluster_count"] = report.final_cluster_count;
  nlohmann::ordered_json traj = nlohmann::ordered_json::array();
  for (const auto& [idx, n] : report.cluster_trajectory) {
    traj.push_back({{"point_index", idx}, {"clusters", n}});
  }
  j["n_clusters_over_time"] = std::move(traj);
  if (report.micros_per_point >= 0.0) {
    j["micros_per_point"] = report.micros_per_point;
  } else {
    j["micros_per_point"] = nullptr;
  }
  j["params"] = report.params_echo.empty()
                    ? nlohmann::ordered_json(nullptr)
                    : nlohmann::ordered_json::parse(report.params_echo);
  return j.dump(2) + "\n";
}

std::string trajectory_to_csv(const RunReport& report) {
  std::ostringstream out;
  out << "point_index,clusters\n";
  for (const auto& [idx, n] : report.cluster_trajectory) {
    out << idx << "," << n << "\n";
  }
  return out.str();
}

} // namespace soc
