#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "soc/core.hpp"
#include "soc/keyed_prng.hpp"

namespace soc {

// Portable standard gaussian (Box-Muller over the portable key stream).
double next_gauss(KeyStream& stream);

// Annular arc band: center + rho * (cos t, sin t) for t in [theta0, theta1]
// degrees and rho in [radius - thickness/2, radius + thickness/2].
struct ArcShape {
  std::array<double, 2> center{0.0, 0.0};
  double radius = 1.0;
  double theta0_deg = 0.0;
  double theta1_deg = 180.0;
  double thickness = 0.1;
};

// Union of capsules around scaled, shifted polylines. A single-vertex
// polyline is a disk of radius thickness/2.
struct StrokesShape {
  std::vector<std::vector<std::array<double, 2>>> polylines;
  double thickness = 0.1;
  std::array<double, 2> offset{0.0, 0.0};
  double scale = 1.0;
};

struct CoreShape {
  enum class Kind { arc, strokes };
  Kind kind = Kind::arc;
  ArcShape arc;
  StrokesShape strokes;

  std::array<double, 2> sample(KeyStream& stream) const;
  // Euclidean distance from a 2-D point to the support; 0 inside.
  double support_distance(std::array<double, 2> q) const;
  std::array<double, 4> bbox() const; // xmin, ymin, xmax, ymax
};

// Stream composition. Exactly one of the two modes is active: fixed-count
// recipes (core_counts + outlier_count, shuffled exact composition) or the
// probabilistic model (per point: cluster by prior pi, core with probability
// p, otherwise outlier).
struct ModelConfig {
  std::string name;
  std::vector<CoreShape> shapes;

  std::vector<std::uint64_t> core_counts; // non-empty selects fixed mode
  std::uint64_t outlier_count = 0;

  std::vector<double> pi;
  std::vector<double> p;
  std::uint64_t total_points = 0;

  std::uint32_t noise_dims = 0;
  double noise_sigma = 0.0;
  double outlier_margin = 0.0; // empty band around every support
  double outlier_extent = 0.0; // bbox expansion for the outlier sampler
  std::uint64_t seed = 0;
  std::uint64_t permute_seed = 0; // 0 derives one from seed

  bool fixed_mode() const { return !core_counts.empty(); }
  std::size_t dim() const { return 2 + noise_dims; }
  void validate() const; // throws StreamError on inconsistent composition
};

struct LabeledPoint {
  Point x;
  int label = -1; // cluster index, -1 for outliers
};

// Emits the full stream: core samples carry their cluster index, outliers
// carry -1, noise dims are appended, and the order is a seeded permutation.
std::vector<LabeledPoint> generate_stream(const ModelConfig& config);

// Minimum pairwise distance between fresh core samples of distinct clusters,
// measured in the full (noise-extended) space. Samples are a prefix-stable
// function of probe_seed, so the estimate never increases with n_probe.
double measure_delta(const ModelConfig& config, std::size_t n_probe,
                     std::uint64_t probe_seed);

// Greedy upper bound on how many balls of the given radius cover the shape,
// from n_sample support samples.
std::size_t estimate_covering(const CoreShape& shape, double radius,
                              std::size_t n_sample, std::uint64_t seed);

// Separation-model bounds: p_f = sum(1 - p_i), p_b = 1/s,
// gamma_upper_i = pi_i p_i p_b / (p_f + pi_i p_i),
// gamma_lower_i = p_f / (p_f + pi_i p_i).
struct SeparationBounds {
  double p_f = 0.0;
  std::vector<double> gamma_upper; // per cluster
  std::vector<double> gamma_lower; // per cluster
  double Gamma = 0.0;              // min over clusters of gamma_upper
  double gamma = 0.0;              // max over clusters of gamma_lower
};
SeparationBounds separation_bounds(std::span<const double> pi,
                             std::span<const double> p, std::size_t s);

struct ModelStats {
  double delta = 0.0;
  std::size_t s_estimate = 0; // max over cores, radius delta/4
  SeparationBounds bounds;
};
ModelStats model_stats(const ModelConfig& config, std::size_t n_probe,
                       std::uint64_t probe_seed);

// Versioned JSON recipe files; throws StreamError on malformed content.
ModelConfig load_recipe(const std::string& path);
ModelConfig parse_recipe(const std::string& json_text);

} // namespace soc
