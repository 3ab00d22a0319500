#include "soc/streamgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace soc {

namespace {

constexpr double kPi = std::numbers::pi;

double deg_to_rad(double deg) { return deg * kPi / 180.0; }

double point_segment_distance(std::array<double, 2> q, std::array<double, 2> a,
                              std::array<double, 2> b) {
  const double abx = b[0] - a[0];
  const double aby = b[1] - a[1];
  const double len2 = abx * abx + aby * aby;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((q[0] - a[0]) * abx + (q[1] - a[1]) * aby) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double px = a[0] + t * abx;
  const double py = a[1] + t * aby;
  return std::hypot(q[0] - px, q[1] - py);
}

std::array<double, 2> stroke_vertex(const StrokesShape& s,
                                    std::array<double, 2> v) {
  return {s.offset[0] + s.scale * v[0], s.offset[1] + s.scale * v[1]};
}

} // namespace

double next_gauss(KeyStream& stream) {
  const double u1 = 1.0 - stream.next(); // in (0, 1]
  const double u2 = stream.next();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::array<double, 2> CoreShape::sample(KeyStream& stream) const {
  if (kind == Kind::arc) {
    const double t = deg_to_rad(arc.theta0_deg +
                                stream.next() * (arc.theta1_deg - arc.theta0_deg));
    const double rho = arc.radius + (stream.next() - 0.5) * arc.thickness;
    return {arc.center[0] + rho * std::cos(t), arc.center[1] + rho * std::sin(t)};
  }

  // Segment chosen with probability proportional to length; zero-length
  // entries (single-vertex disks) get a nominal weight so they stay samplable.
  struct Seg {
    std::array<double, 2> a, b;
    double len;
  };
  std::vector<Seg> segs;
  double total = 0.0;
  for (const auto& line : strokes.polylines) {
    if (line.empty()) continue;
    if (line.size() == 1) {
      auto v = stroke_vertex(strokes, line[0]);
      segs.push_back({v, v, strokes.thickness});
    } else {
      for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        auto a = stroke_vertex(strokes, line[i]);
        auto b = stroke_vertex(strokes, line[i + 1]);
        segs.push_back({a, b, std::hypot(b[0] - a[0], b[1] - a[1])});
      }
    }
  }
  if (segs.empty()) throw StreamError("strokes shape without segments");
  for (const auto& s : segs) total += s.len;

  double target = stream.next() * total;
  std::size_t pick = 0;
  while (pick + 1 < segs.size() && target >= segs[pick].len) {
    target -= segs[pick].len;
    ++pick;
  }
  const Seg& s = segs[pick];
  const double t = stream.next();
  const double bx = s.a[0] + t * (s.b[0] - s.a[0]);
  const double by = s.a[1] + t * (s.b[1] - s.a[1]);
  // Uniform offset in the thickness disk.
  const double rho = 0.5 * strokes.thickness * std::sqrt(stream.next());
  const double phi = 2.0 * kPi * stream.next();
  return {bx + rho * std::cos(phi), by + rho * std::sin(phi)};
}

double CoreShape::support_distance(std::array<double, 2> q) const {
  if (kind == Kind::strokes) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& line : strokes.polylines) {
      if (line.empty()) continue;
      if (line.size() == 1) {
        auto v = stroke_vertex(strokes, line[0]);
        best = std::min(best, std::hypot(q[0] - v[0], q[1] - v[1]));
      } else {
        for (std::size_t i = 0; i + 1 < line.size(); ++i) {
          best = std::min(best, point_segment_distance(
                                    q, stroke_vertex(strokes, line[i]),
                                    stroke_vertex(strokes, line[i + 1])));
        }
      }
    }
    return std::max(0.0, best - 0.5 * strokes.thickness);
  }

  const double dx = q[0] - arc.center[0];
  const double dy = q[1] - arc.center[1];
  const double rho = std::hypot(dx, dy);
  const double t0 = deg_to_rad(arc.theta0_deg);
  const double t1 = deg_to_rad(arc.theta1_deg);
  double ang = std::atan2(dy, dx);
  // Wrap into [t0, t0 + 2*pi) to test membership in the angular span.
  double rel = std::fmod(ang - t0, 2.0 * kPi);
  if (rel < 0.0) rel += 2.0 * kPi;
  const double lo = arc.radius - 0.5 * arc.thickness;
  const double hi = arc.radius + 0.5 * arc.thickness;
  if (rel <= t1 - t0) {
    if (rho < lo) return lo - rho;
    if (rho > hi) return rho - hi;
    return 0.0;
  }
  // Outside the span: distance to the radial end caps.
  auto cap_distance = [&](double theta) {
    const std::array<double, 2> a{arc.center[0] + lo * std::cos(theta),
                                  arc.center[1] + lo * std::sin(theta)};
    const std::array<double, 2> b{arc.center[0] + hi * std::cos(theta),
                                  arc.center[1] + hi * std::sin(theta)};
    return point_segment_distance(q, a, b);
  };
  return std::min(cap_distance(t0), cap_distance(t1));
}

std::array<double, 4> CoreShape::bbox() const {
  if (kind == Kind::arc) {
    // Conservative box of the full annulus; fine for outlier sampling.
    const double reach = arc.radius + 0.5 * arc.thickness;
    return {arc.center[0] - reach, arc.center[1] - reach,
            arc.center[0] + reach, arc.center[1] + reach};
  }
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (const auto& line : strokes.polylines) {
    for (const auto& raw : line) {
      auto v = stroke_vertex(strokes, raw);
      xmin = std::min(xmin, v[0]);
      ymin = std::min(ymin, v[1]);
      xmax = std::max(xmax, v[0]);
      ymax = std::max(ymax, v[1]);
    }
  }
  if (!(xmin <= xmax)) throw StreamError("strokes shape without vertices");
  const double pad = 0.5 * strokes.thickness;
  return {xmin - pad, ymin - pad, xmax + pad, ymax + pad};
}

void ModelConfig::validate() const {
  if (shapes.empty()) throw StreamError("recipe declares no shapes");
  if (fixed_mode()) {
    if (core_counts.size() != shapes.size()) {
      throw StreamError("core_counts must match the number of shapes");
    }
  } else {
    if (pi.size() != shapes.size() || p.size() != shapes.size()) {
      throw StreamError("pi and p must match the number of shapes");
    }
    double sum = 0.0;
    for (double v : pi) {
      if (v < 0.0) throw StreamError("negative prior");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw StreamError("priors must sum to 1");
    for (double v : p) {
      if (v < 0.0 || v > 1.0) throw StreamError("core probability outside [0,1]");
    }
    if (total_points == 0) throw StreamError("model mode needs total_points");
  }
  if (noise_sigma < 0.0) throw StreamError("negative noise sigma");
  if (outlier_margin < 0.0 || outlier_extent < 0.0) {
    throw StreamError("negative outlier sampler constant");
  }
}

namespace {

std::array<double, 4> scene_bbox(const ModelConfig& config) {
  std::array<double, 4> box{std::numeric_limits<double>::infinity(),
                            std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity()};
  for (const auto& shape : config.shapes) {
    auto b = shape.bbox();
    box[0] = std::min(box[0], b[0]);
    box[1] = std::min(box[1], b[1]);
    box[2] = std::max(box[2], b[2]);
    box[3] = std::max(box[3], b[3]);
  }
  box[0] -= config.outlier_extent;
  box[1] -= config.outlier_extent;
  box[2] += config.outlier_extent;
  box[3] += config.outlier_extent;
  return box;
}

std::array<double, 2> sample_outlier(const ModelConfig& config,
                                     const std::array<double, 4>& box,
                                     KeyStream& stream) {
  for (int tries = 0; tries < 100000; ++tries) {
    const double x = box[0] + stream.next() * (box[2] - box[0]);
    const double y = box[1] + stream.next() * (box[3] - box[1]);
    bool clear = true;
    for (const auto& shape : config.shapes) {
      if (shape.support_distance({x, y}) <= config.outlier_margin) {
        clear = false;
        break;
      }
    }
    if (clear) return {x, y};
  }
  throw StreamError("outlier sampler starved; margin leaves no room in the box");
}

Point with_noise(std::array<double, 2> base, const ModelConfig& config,
                 KeyStream& stream) {
  Point out(config.dim());
  out[0] = base[0];
  out[1] = base[1];
  for (std::uint32_t d = 0; d < config.noise_dims; ++d) {
    out[2 + d] = config.noise_sigma * next_gauss(stream);
  }
  return out;
}

} // namespace

std::vector<LabeledPoint> generate_stream(const ModelConfig& config) {
  config.validate();
  KeyStream content{mix64(config.seed ^ 0x636f6e74656e7431ULL), 0};
  const auto box = scene_bbox(config);

  std::vector<LabeledPoint> out;
  if (config.fixed_mode()) {
    std::uint64_t total = config.outlier_count;
    for (std::uint64_t c : config.core_counts) total += c;
    out.reserve(total);
    for (std::size_t i = 0; i < config.shapes.size(); ++i) {
      for (std::uint64_t n = 0; n < config.core_counts[i]; ++n) {
        out.push_back({with_noise(config.shapes[i].sample(content), config, content),
                       static_cast<int>(i)});
      }
    }
    for (std::uint64_t n = 0; n < config.outlier_count; ++n) {
      out.push_back({with_noise(sample_outlier(config, box, content), config, content), -1});
    }
  } else {
    out.reserve(config.total_points);
    std::vector<double> cum(config.pi.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < config.pi.size(); ++i) {
      acc += config.pi[i];
      cum[i] = acc;
    }
    for (std::uint64_t n = 0; n < config.total_points; ++n) {
      const double u = content.next() * acc;
      std::size_t i = 0;
      while (i + 1 < cum.size() && u >= cum[i]) ++i;
      if (content.next() < config.p[i]) {
        out.push_back({with_noise(config.shapes[i].sample(content), config, content),
                       static_cast<int>(i)});
      } else {
        out.push_back({with_noise(sample_outlier(config, box, content), config, content), -1});
      }
    }
  }

  // Seeded Fisher-Yates permutation; label multiset is permutation-invariant.
  const std::uint64_t pseed =
      config.permute_seed != 0 ? config.permute_seed
                               : mix64(config.seed ^ 0x7065726d75746531ULL);
  KeyStream perm{mix64(pseed), 0};
  for (std::size_t i = out.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(perm.next() * static_cast<double>(i));
    std::swap(out[i - 1], out[std::min(j, i - 1)]);
  }
  return out;
}

double measure_delta(const ModelConfig& config, std::size_t n_probe,
                     std::uint64_t probe_seed) {
  if (config.shapes.size() < 2) {
    throw ContractError("delta needs at least two cores");
  }
  if (n_probe == 0) throw ContractError("n_probe must be positive");

  // One stream per core so samples are a prefix-stable function of n_probe.
  std::vector<std::vector<Point>> samples(config.shapes.size());
  for (std::size_t i = 0; i < config.shapes.size(); ++i) {
    KeyStream stream{mix64(probe_seed + 0x9e3779b97f4a7c15ULL * (i + 1)), 0};
    samples[i].reserve(n_probe);
    for (std::size_t n = 0; n < n_probe; ++n) {
      samples[i].push_back(with_noise(config.shapes[i].sample(stream), config, stream));
    }
  }

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < samples.size(); ++a) {
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      const auto& A = samples[a];
      const auto& B = samples[b];
      double local = std::numeric_limits<double>::infinity();
#ifdef SOC_HAVE_OPENMP
#pragma omp parallel for reduction(min : local) schedule(static)
#endif
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(A.size()); ++i) {
        for (std::size_t j = 0; j < B.size(); ++j) {
          local = std::min(local,
                           squared_distance(A[static_cast<std::size_t>(i)], B[j]));
        }
      }
      best = std::min(best, local);
    }
  }
  return std::sqrt(best);
}

std::size_t estimate_covering(const CoreShape& shape, double radius,
                              std::size_t n_sample, std::uint64_t seed) {
  if (!(radius > 0.0)) throw ContractError("covering radius must be positive");
  if (n_sample == 0) throw ContractError("covering needs samples");
  KeyStream stream{mix64(seed ^ 0x636f766572ULL), 0};
  std::vector<std::array<double, 2>> pts(n_sample);
  for (auto& p : pts) p = shape.sample(stream);

  const double r2 = radius * radius;
  std::vector<bool> covered(n_sample, false);
  std::size_t balls = 0;
  for (std::size_t i = 0; i < n_sample; ++i) {
    if (covered[i]) continue;
    ++balls;
    for (std::size_t j = i; j < n_sample; ++j) {
      if (covered[j]) continue;
      const double dx = pts[j][0] - pts[i][0];
      const double dy = pts[j][1] - pts[i][1];
      if (dx * dx + dy * dy <= r2) covered[j] = true;
    }
  }
  return balls;
}

SeparationBounds separation_bounds(std::span<const double> pi,
                             std::span<const double> p, std::size_t s) {
  if (pi.size() != p.size() || pi.empty()) {
    throw ContractError("separation bounds need matching pi and p");
  }
  if (s == 0) throw ContractError("covering estimate must be positive");
  SeparationBounds out;
  for (double v : p) out.p_f += 1.0 - v;
  const double p_b = 1.0 / static_cast<double>(s);
  out.gamma_upper.resize(pi.size());
  out.gamma_lower.resize(pi.size());
  out.Gamma = std::numeric_limits<double>::infinity();
  out.gamma = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const double mass = out.p_f + pi[i] * p[i];
    out.gamma_upper[i] = pi[i] * p[i] * p_b / mass;
    out.gamma_lower[i] = out.p_f / mass;
    out.Gamma = std::min(out.Gamma, out.gamma_upper[i]);
    out.gamma = std::max(out.gamma, out.gamma_lower[i]);
  }
  return out;
}

ModelStats model_stats(const ModelConfig& config, std::size_t n_probe,
                       std::uint64_t probe_seed) {
  ModelStats stats;
  stats.delta = measure_delta(config, n_probe, probe_seed);
  const double r = stats.delta / 4.0;
  stats.s_estimate = 0;
  for (const auto& shape : config.shapes) {
    stats.s_estimate = std::max(
        stats.s_estimate, estimate_covering(shape, r, std::max<std::size_t>(n_probe, 64),
                                            probe_seed));
  }
  std::vector<double> pi = config.pi;
  std::vector<double> p = config.p;
  if (config.fixed_mode()) {
    // Effective model parameters of a fixed-count recipe.
    double core_total = 0.0;
    for (std::uint64_t c : config.core_counts) core_total += static_cast<double>(c);
    const double grand = core_total + static_cast<double>(config.outlier_count);
    pi.clear();
    p.clear();
    for (std::uint64_t c : config.core_counts) {
      pi.push_back(static_cast<double>(c) / core_total);
      p.push_back(core_total / grand);
    }
  }
  stats.bounds = separation_bounds(pi, p, stats.s_estimate);
  return stats;
}

namespace {

using nlohmann::json;

std::array<double, 2> parse_vec2(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) {
    throw StreamError(std::string("recipe field is not a 2-vector: ") + what);
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

CoreShape parse_shape(const json& j) {
  CoreShape shape;
  const std::string kind = j.value("kind", "");
  if (kind == "arc") {
    shape.kind = CoreShape::Kind::arc;
    shape.arc.center = parse_vec2(j.at("center"), "center");
    shape.arc.radius = j.at("radius").get<double>();
    auto span = j.at("theta_deg");
    if (!span.is_array() || span.size() != 2) {
      throw StreamError("arc theta_deg must be [from, to]");
    }
    shape.arc.theta0_deg = span[0].get<double>();
    shape.arc.theta1_deg = span[1].get<double>();
    shape.arc.thickness = j.at("thickness").get<double>();
    if (!(shape.arc.thickness > 0.0) || !(shape.arc.radius > 0.0) ||
        !(shape.arc.theta1_deg > shape.arc.theta0_deg)) {
      throw StreamError("arc shape constants out of range");
    }
  } else if (kind == "strokes") {
    shape.kind = CoreShape::Kind::strokes;
    for (const auto& line : j.at("polylines")) {
      std::vector<std::array<double, 2>> poly;
      for (const auto& v : line) poly.push_back(parse_vec2(v, "polyline vertex"));
      if (poly.empty()) throw StreamError("empty polyline in strokes shape");
      shape.strokes.polylines.push_back(std::move(poly));
    }
    if (shape.strokes.polylines.empty()) {
      throw StreamError("strokes shape needs at least one polyline");
    }
    shape.strokes.thickness = j.at("thickness").get<double>();
    if (!(shape.strokes.thickness > 0.0)) {
      throw StreamError("strokes thickness must be positive");
    }
    if (j.contains("offset")) shape.strokes.offset = parse_vec2(j["offset"], "offset");
    if (j.contains("scale")) shape.strokes.scale = j["scale"].get<double>();
  } else {
    throw StreamError("unknown shape kind: '" + kind + "'");
  }
  return shape;
}

} // namespace

ModelConfig parse_recipe(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw StreamError(std::string("recipe is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "soc-recipe-v1") {
      throw StreamError("unsupported recipe format tag");
    }
    ModelConfig config;
    config.name = j.value("name", "");
    for (const auto& s : j.at("shapes")) config.shapes.push_back(parse_shape(s));
    if (j.contains("core_counts")) {
      config.core_counts = j["core_counts"].get<std::vector<std::uint64_t>>();
      config.outlier_count = j.value("outliers", std::uint64_t{0});
    } else {
      config.pi = j.at("pi").get<std::vector<double>>();
      config.p = j.at("p").get<std::vector<double>>();
      config.total_points = j.at("total_points").get<std::uint64_t>();
    }
    config.noise_dims = j.value("noise_dims", 0u);
    config.noise_sigma = j.value("noise_sigma", 0.0);
    config.outlier_margin = j.value("outlier_margin", 0.0);
    config.outlier_extent = j.value("outlier_extent", 0.0);
    config.seed = j.value("default_seed", std::uint64_t{0});
    config.validate();
    return config;
  } catch (const json::exception& e) {
    throw StreamError(std::string("recipe structure invalid: ") + e.what());
  }
}

ModelConfig load_recipe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StreamError("cannot open recipe file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_recipe(buffer.str());
}

} // namespace soc
