#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace soc {

using Point = std::vector<double>;
using ClusterId = std::uint64_t;
using EntryId = std::uint64_t;

// Thrown on malformed input data (dimension drift, bad stream lines, bad files).
class StreamError : public std::runtime_error {
 public:
  explicit StreamError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on API misuse (violated preconditions). Not a data error.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);

// One weighted skeleton point. key is uniform in [0,1); weight >= 1.
// entry_id is assigned once at creation and survives merges unchanged.
struct SkeletonEntry {
  Point point;
  double key = 0.0;
  std::uint64_t weight = 1;
  EntryId entry_id = 0;
};

// A cluster's bounded multiset of skeleton entries. total_weight caches the
// sum of entry weights and is kept in sync by the owning code.
struct SkeletonSet {
  ClusterId cluster_id = 0;
  std::vector<SkeletonEntry> entries;
  std::uint64_t total_weight = 0;

  void add_entry(SkeletonEntry e) {
    total_weight += e.weight;
    entries.push_back(std::move(e));
  }
  std::size_t size() const { return entries.size(); }
  std::uint64_t recompute_weight() const;
};

// Live clusters ordered by ascending cluster_id. Ids are handed out by the
// monotone counters below and never reused, so insertion is always at the back.
struct Partition {
  std::vector<SkeletonSet> sets;
  ClusterId next_cluster_id = 0;
  EntryId next_entry_id = 0;

  ClusterId fresh_cluster_id() { return next_cluster_id++; }
  EntryId fresh_entry_id() { return next_entry_id++; }

  SkeletonSet* find(ClusterId id);
  const SkeletonSet* find(ClusterId id) const;
  // Requires id larger than any existing one (monotone id discipline).
  void insert(SkeletonSet set);
  void erase(ClusterId id);
  std::size_t size() const { return sets.size(); }
};

struct EngineParams {
  double radius = 0.07;             // ball radius r
  double alpha = 0.03;              // claim fraction in (0,1)
  std::uint32_t max_skeleton = 400; // hard cap H on skeleton size
  std::uint32_t h_init = 1;         // singleton skeleton size, <= max_skeleton
  bool split_enabled = false;       // maintain topology graphs and run split sweeps
  bool full_split_sweep = false;    // check every cluster each step, not only dirty ones
  double grid_delta = 0.0;          // > 0 switches key derivation to grid mode
  std::uint64_t master_seed = 0;
  bool parallel_scan = true;        // claim scan kernel selection

  void validate() const; // throws ContractError on out-of-range values
};

// Indices (in entry order) of entries whose point lies within the closed
// ball B(x, r). r == 0 still matches exact duplicates of x.
std::vector<std::size_t> ball_intersection(const SkeletonSet& set,
                                           std::span<const double> x,
                                           double r);

std::uint64_t claim_weight(const SkeletonSet& set,
                           std::span<const std::size_t> entry_indices);

} // namespace soc
