#include "doctest.h"

#include <cmath>
#include <vector>

#include "soc/claim_scan.hpp"
#include "soc/core.hpp"
#include "soc/keyed_prng.hpp"

using namespace soc;

namespace {

Point random_point(KeyStream& rng, std::size_t dim, double scale) {
  Point x(dim);
  for (auto& v : x) v = (rng.next() * 2.0 - 1.0) * scale;
  return x;
}

Partition random_partition(KeyStream& rng, std::size_t clusters,
                           std::size_t max_entries, std::size_t dim) {
  Partition p;
  for (std::size_t c = 0; c < clusters; ++c) {
    SkeletonSet set;
    set.cluster_id = p.fresh_cluster_id();
    const std::size_t n = 1 + static_cast<std::size_t>(rng.next() * max_entries);
    for (std::size_t i = 0; i < n; ++i) {
      SkeletonEntry e;
      e.point = random_point(rng, dim, 1.0);
      e.key = rng.next();
      e.weight = 1 + static_cast<std::uint64_t>(rng.next() * 9.0);
      e.entry_id = p.fresh_entry_id();
      set.add_entry(std::move(e));
    }
    p.insert(std::move(set));
  }
  return p;
}

// Oracle: exact distance comparison per entry, exact weight sums.
std::vector<ClaimStat> scan_oracle(const Partition& p, const Point& x,
                                   double r, double alpha) {
  std::vector<ClaimStat> out;
  for (const auto& set : p.sets) {
    ClaimStat stat;
    for (const auto& e : set.entries) {
      if (distance(e.point, x) <= r) stat.weight_in_ball += e.weight;
    }
    stat.claimed = static_cast<double>(stat.weight_in_ball) >=
                   alpha * static_cast<double>(set.total_weight);
    out.push_back(stat);
  }
  return out;
}

bool same_stats(const std::vector<ClaimStat>& a, const std::vector<ClaimStat>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].weight_in_ball != b[i].weight_in_ball) return false;
    if (a[i].claimed != b[i].claimed) return false;
  }
  return true;
}

} // namespace

TEST_CASE("serial scan matches the brute-force oracle on random partitions") {
  KeyStream rng{101, 0};
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dim = 1 + static_cast<std::size_t>(rng.next() * 5.0);
    auto p = random_partition(rng, 1 + trial % 7, 12, dim);
    const Point x = random_point(rng, dim, 1.0);
    const double r = 0.2 + rng.next();
    const double alpha = 0.05 + rng.next() * 0.4;

    std::vector<ClaimStat> got;
    claim_scan_serial(p, x, r, alpha, got);
    CHECK(same_stats(got, scan_oracle(p, x, r, alpha)));
  }
}

TEST_CASE("parallel scan is bitwise identical to the serial scan") {
  KeyStream rng{202, 0};
  for (int trial = 0; trial < 30; ++trial) {
    auto p = random_partition(rng, 1 + trial, 20, 8);
    const Point x = random_point(rng, 8, 1.0);

    std::vector<ClaimStat> serial, parallel;
    claim_scan_serial(p, x, 0.8, 0.1, serial);
    claim_scan_parallel(p, x, 0.8, 0.1, parallel);
    CHECK(same_stats(serial, parallel));

    std::vector<ClaimStat> dispatched;
    claim_scan(p, x, 0.8, 0.1, true, dispatched);
    CHECK(same_stats(serial, dispatched));
    claim_scan(p, x, 0.8, 0.1, false, dispatched);
    CHECK(same_stats(serial, dispatched));
  }
}

TEST_CASE("claim threshold holds exactly at the boundary") {
  // Weights 1 and 3 out of 4 total: alpha = 0.25 claims on exactly 1 in ball.
  Partition p;
  SkeletonSet set;
  set.cluster_id = 0;
  set.add_entry({{0.0}, 0.1, 1, 0});
  set.add_entry({{10.0}, 0.2, 3, 1});
  p.insert(std::move(set));

  std::vector<ClaimStat> out;
  claim_scan_serial(p, Point{0.0}, 0.5, 0.25, out);
  REQUIRE(out.size() == 1);
  CHECK(out[0].weight_in_ball == 1);
  CHECK(out[0].claimed); // 1 >= 0.25 * 4, equality claims

  claim_scan_serial(p, Point{0.0}, 0.5, 0.2500001, out);
  CHECK_FALSE(out[0].claimed);

  claim_scan_serial(p, Point{20.0}, 0.5, 0.25, out);
  CHECK(out[0].weight_in_ball == 0);
  CHECK_FALSE(out[0].claimed);
}

TEST_CASE("ball boundary is closed in the scan kernels") {
  Partition p;
  SkeletonSet set;
  set.cluster_id = 0;
  set.add_entry({{3.0, 4.0}, 0.1, 1, 0}); // distance 5 from origin
  p.insert(std::move(set));

  std::vector<ClaimStat> out;
  claim_scan_serial(p, Point{0.0, 0.0}, 5.0, 0.5, out);
  CHECK(out[0].weight_in_ball == 1);
  claim_scan_serial(p, Point{0.0, 0.0}, 4.9999, 0.5, out);
  CHECK(out[0].weight_in_ball == 0);
}

TEST_CASE("empty partition yields an empty result and clears stale buffers") {
  Partition p;
  std::vector<ClaimStat> out(7);
  claim_scan_serial(p, Point{0.0}, 1.0, 0.1, out);
  CHECK(out.empty());
  claim_scan_parallel(p, Point{0.0}, 1.0, 0.1, out);
  CHECK(out.empty());
}

TEST_CASE("output buffer is reusable across calls of different sizes") {
  KeyStream rng{303, 0};
  auto big = random_partition(rng, 9, 6, 3);
  auto small = random_partition(rng, 2, 6, 3);
  const Point x{0.0, 0.0, 0.0};

  std::vector<ClaimStat> out;
  claim_scan_serial(big, x, 0.5, 0.1, out);
  CHECK(out.size() == 9);
  claim_scan_serial(small, x, 0.5, 0.1, out);
  REQUIRE(out.size() == 2);
  CHECK(same_stats(out, scan_oracle(small, x, 0.5, 0.1)));
}
