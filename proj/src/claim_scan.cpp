#include "soc/claim_scan.hpp"

namespace soc {

namespace {

inline ClaimStat scan_one(const SkeletonSet& set, std::span<const double> x,
                          double r2, double alpha) {
  std::uint64_t w = 0;
  const std::size_t dim = x.size();
  for (const auto& e : set.entries) {
    double acc = 0.0;
    const double* p = e.point.data();
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = p[d] - x[d];
      acc += diff * diff;
    }
    if (acc <= r2) w += e.weight;
  }
  ClaimStat stat;
  stat.weight_in_ball = w;
  stat.claimed = static_cast<double>(w) >= alpha * static_cast<double>(set.total_weight);
  return stat;
}

} // namespace

void claim_scan_serial(const Partition& partition, std::span<const double> x,
                       double r, double alpha, std::vector<ClaimStat>& out) {
  out.resize(partition.sets.size());
  const double r2 = r * r;
  for (std::size_t i = 0; i < partition.sets.size(); ++i) {
    out[i] = scan_one(partition.sets[i], x, r2, alpha);
  }
}

void claim_scan_parallel(const Partition& partition, std::span<const double> x,
                         double r, double alpha, std::vector<ClaimStat>& out) {
  out.resize(partition.sets.size());
  const double r2 = r * r;
  const std::int64_t n = static_cast<std::int64_t>(partition.sets.size());
#ifdef SOC_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        scan_one(partition.sets[static_cast<std::size_t>(i)], x, r2, alpha);
  }
}

void claim_scan(const Partition& partition, std::span<const double> x,
                double r, double alpha, bool parallel, std::vector<ClaimStat>& out) {
  if (parallel && claim_scan_parallel_available()) {
    claim_scan_parallel(partition, x, r, alpha, out);
  } else {
    claim_scan_serial(partition, x, r, alpha, out);
  }
}

bool claim_scan_parallel_available() {
#ifdef SOC_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

} // namespace soc
