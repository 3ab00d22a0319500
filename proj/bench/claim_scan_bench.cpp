// Microbenchmark for the claim-scan kernels: serial reference vs. the
// OpenMP-parallel variant, swept over partition shapes. Both kernels must
// return identical results; this target only times them.

#include <chrono>
#include <cstdio>
#include <vector>

#include "soc/claim_scan.hpp"
#include "soc/keyed_prng.hpp"

namespace {

soc::Partition make_partition(std::size_t clusters, std::size_t entries,
                              std::size_t dim, soc::KeyStream& rng) {
  soc::Partition partition;
  for (std::size_t c = 0; c < clusters; ++c) {
    soc::SkeletonSet set;
    set.cluster_id = partition.fresh_cluster_id();
    for (std::size_t e = 0; e < entries; ++e) {
      soc::SkeletonEntry entry;
      entry.point.resize(dim);
      for (auto& v : entry.point) v = rng.next() * 4.0;
      entry.key = rng.next();
      entry.weight = 1 + (rng.next_bits() % 5);
      entry.entry_id = partition.fresh_entry_id();
      set.add_entry(std::move(entry));
    }
    partition.insert(std::move(set));
  }
  return partition;
}

double time_scans(const soc::Partition& partition,
                  const std::vector<soc::Point>& queries, bool parallel,
                  std::vector<soc::ClaimStat>& out) {
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& q : queries) {
    soc::claim_scan(partition, q, 0.25, 0.03, parallel, out);
  }
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::micro>(t1 - t0).count() /
         static_cast<double>(queries.size());
}

} // namespace

int main() {
  soc::KeyStream rng{0x5ca1ab1eULL, 0};
  const std::size_t dim = 20;
  const std::size_t n_queries = 2000;

  std::vector<soc::Point> queries(n_queries);
  for (auto& q : queries) {
    q.resize(dim);
    for (auto& v : q) v = rng.next() * 4.0;
  }

  std::printf("parallel kernel available: %s\n",
              soc::claim_scan_parallel_available() ? "yes" : "no");
  std::printf("%10s %10s %12s %12s %9s\n", "clusters", "entries", "serial us",
              "parallel us", "speedup");

  std::vector<soc::ClaimStat> out;
  for (auto [clusters, entries] : {std::pair<std::size_t, std::size_t>{8, 50},
                                   {64, 50},
                                   {64, 400},
                                   {512, 100},
                                   {2048, 25}}) {
    auto partition = make_partition(clusters, entries, dim, rng);
    // warm up and verify a first pass runs
    time_scans(partition, {queries.front()}, false, out);
    const double serial = time_scans(partition, queries, false, out);
    if (!soc::claim_scan_parallel_available()) {
      std::printf("%10zu %10zu %12.2f %12s %9s\n", clusters, entries, serial,
                  "n/a", "n/a");
      continue;
    }
    time_scans(partition, {queries.front()}, true, out);
    const double parallel = time_scans(partition, queries, true, out);
    std::printf("%10zu %10zu %12.2f %12.2f %8.2fx\n", clusters, entries,
                serial, parallel, serial / parallel);
  }
  return 0;
}
