#pragma once

#include <span>
#include <vector>

#include "soc/core.hpp"

namespace soc {

// Per-cluster result of scanning one incoming point against the partition.
struct ClaimStat {
  std::uint64_t weight_in_ball = 0;
  bool claimed = false; // weight_in_ball >= alpha * total_weight
};

// Reference kernel: clusters in partition order, entries in entry order.
void claim_scan_serial(const Partition& partition, std::span<const double> x,
                       double r, double alpha, std::vector<ClaimStat>& out);

// OpenMP kernel parallelized across clusters. Each cluster's reduction runs
// serially in entry order, so results are identical to the serial kernel.
void claim_scan_parallel(const Partition& partition, std::span<const double> x,
                         double r, double alpha, std::vector<ClaimStat>& out);

// Dispatch; falls back to the serial kernel when OpenMP is unavailable.
void claim_scan(const Partition& partition, std::span<const double> x,
                double r, double alpha, bool parallel, std::vector<ClaimStat>& out);

bool claim_scan_parallel_available();

} // namespace soc
