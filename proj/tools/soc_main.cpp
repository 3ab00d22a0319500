// soc: generate planted streams, run the clusterer, evaluate, benchmark.
//
// Exit codes: 0 ok, 1 usage error, 2 data error. Relative output paths are
// placed under $SOC_OUT_DIR when that variable is set.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "soc/eval.hpp"
#include "soc/io.hpp"

namespace {

using soc::AssignmentEvent;
using soc::EngineParams;
using soc::StreamRecord;
using ojson = nlohmann::ordered_json;

std::string out_path(const std::string& path) {
  const char* dir = std::getenv("SOC_OUT_DIR");
  if (!dir || !*dir || path.empty() || path.front() == '/') return path;
  std::string base(dir);
  if (base.back() != '/') base += '/';
  return base + path;
}

struct ParamFlags {
  double alpha = 0.0;
  double radius = 0.0;
  std::uint32_t max_skeleton = 0;
  std::uint32_t h_init = 0;
  bool split = false;
  bool full_split_sweep = false;
  double grid_delta = 0.0;
  std::uint64_t seed = 0;

  std::vector<CLI::Option*> opts;
};

// Engine parameter flags shared by run and bench.
ParamFlags add_param_flags(CLI::App& cmd, ParamFlags& f) {
  EngineParams d;
  f.alpha = d.alpha;
  f.radius = d.radius;
  f.max_skeleton = d.max_skeleton;
  f.h_init = d.h_init;
  f.grid_delta = d.grid_delta;
  f.opts.push_back(cmd.add_option("--alpha", f.alpha, "claim fraction"));
  f.opts.push_back(cmd.add_option("--radius", f.radius, "ball radius"));
  f.opts.push_back(cmd.add_option("--max-skeleton", f.max_skeleton, "skeleton cap H"));
  f.opts.push_back(cmd.add_option("--h-init", f.h_init, "singleton skeleton size"));
  f.opts.push_back(cmd.add_flag("--split", f.split, "maintain topology graphs and split"));
  f.opts.push_back(cmd.add_flag("--full-split-sweep", f.full_split_sweep,
                                "check every cluster each sweep"));
  f.opts.push_back(cmd.add_option("--grid-delta", f.grid_delta,
                                  "grid cell size for key derivation"));
  f.opts.push_back(cmd.add_option("--seed", f.seed, "master key seed"));
  return f;
}

EngineParams params_from_flags(const ParamFlags& f) {
  EngineParams p;
  p.alpha = f.alpha;
  p.radius = f.radius;
  p.max_skeleton = f.max_skeleton;
  p.h_init = f.h_init;
  p.split_enabled = f.split;
  p.full_split_sweep = f.full_split_sweep;
  p.grid_delta = f.grid_delta;
  p.master_seed = f.seed;
  return p;
}

int cmd_generate(const std::string& recipe_path, const std::string& out,
                 std::optional<std::uint64_t> seed, bool stats,
                 std::size_t stat_probes) {
  soc::ModelConfig config = soc::load_recipe(recipe_path);
  if (seed) config.seed = *seed;
  config.validate();
  auto points = soc::generate_stream(config);
  soc::write_stream(out_path(out), points);
  std::cout << "wrote " << points.size() << " points (dim " << config.dim()
            << ") to " << out_path(out) << "\n";
  if (stats) {
    auto s = soc::model_stats(config, stat_probes,
                              soc::mix64(config.seed ^ 0x70726f6265ULL));
    ojson j;
    j["delta"] = s.delta;
    j["s_estimate"] = s.s_estimate;
    j["p_f"] = s.bounds.p_f;
    j["Gamma"] = s.bounds.Gamma;
    j["gamma"] = s.bounds.gamma;
    std::cout << j.dump() << "\n";
  }
  return 0;
}

int cmd_run(const std::string& stream_path, const std::string& out,
            EngineParams params, bool have_resume, const std::string& resume,
            const std::string& snapshot_out, const std::string& meta_out,
            std::uint64_t limit) {
  std::uint64_t skip = 0;
  std::size_t dim = 0;
  std::optional<soc::SocEngine> engine;
  if (have_resume) {
    soc::EngineState state = soc::load_snapshot(resume);
    state.params.parallel_scan = params.parallel_scan;
    skip = state.points_seen;
    dim = state.dim;
    engine.emplace(soc::SocEngine::from_state(std::move(state)));
  }

  std::ifstream in(stream_path);
  if (!in) throw soc::StreamError("cannot open stream file: " + stream_path);

  // Reader thread parses lines into a bounded queue; this thread runs the
  // engine and writes one assignment line per point.
  soc::BoundedQueue<StreamRecord> queue(512);
  std::exception_ptr reader_error;
  std::thread reader([&] {
    try {
      std::string line;
      std::size_t line_no = 0;
      std::size_t seen_dim = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        StreamRecord rec = soc::parse_stream_line(line, line_no);
        if (seen_dim == 0) {
          seen_dim = rec.x.size();
        } else if (rec.x.size() != seen_dim) {
          throw soc::StreamError("dimension drift at line " +
                                 std::to_string(line_no));
        }
        queue.push(std::move(rec));
      }
    } catch (...) {
      reader_error = std::current_exception();
    }
    queue.close();
  });

  std::optional<soc::AssignmentWriter> writer;
  std::uint64_t processed = 0;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    std::uint64_t skipped = 0;
    while (auto rec = queue.pop()) {
      if (skipped < skip) {
        ++skipped;
        continue;
      }
      if (!engine) engine.emplace(soc::SocEngine(params));
      if (!writer) {
        if (dim == 0) dim = rec->x.size();
        writer.emplace(out_path(out), engine->params(), dim);
      }
      AssignmentEvent event = engine->process_point(rec->x);
      writer->write(event);
      if (++processed >= limit && limit > 0) break;
    }
  } catch (...) {
    queue.close();
    reader.join();
    throw;
  }
  queue.close();
  reader.join();
  if (reader_error && (limit == 0 || processed < limit)) {
    std::rethrow_exception(reader_error);
  }
  const auto t1 = std::chrono::steady_clock::now();

  if (!engine) engine.emplace(soc::SocEngine(params));
  if (!writer) writer.emplace(out_path(out), engine->params(), dim);
  writer->close();

  if (!snapshot_out.empty()) {
    soc::save_snapshot(out_path(snapshot_out), engine->export_state());
  }
  if (!meta_out.empty()) {
    const double micros =
        processed == 0
            ? 0.0
            : std::chrono::duration<double, std::micro>(t1 - t0).count() /
                  static_cast<double>(processed);
    ojson meta;
    meta["points"] = processed;
    meta["micros_per_point"] = micros;
    meta["max_skeleton"] = engine->max_skeleton_seen();
    meta["final_clusters"] = engine->partition().size();
    meta["parallel_scan"] = engine->params().parallel_scan;
    std::ofstream mf(out_path(meta_out));
    if (!mf) throw soc::StreamError("cannot open for writing: " + out_path(meta_out));
    mf << meta.dump(2) << "\n";
  }
  std::cout << "processed " << processed << " points, "
            << engine->partition().size() << " clusters live\n";
  return 0;
}

int cmd_eval(const std::string& assign_path, const std::string& stream_path,
             const std::string& report_out, const std::string& trajectory_out,
             double micros) {
  soc::AssignmentLog log = soc::read_assignments(assign_path);
  auto records = soc::read_stream(stream_path);
  if (records.size() != log.events.size()) {
    throw soc::StreamError("length mismatch: stream has " +
                           std::to_string(records.size()) +
                           " points, assignments have " +
                           std::to_string(log.events.size()));
  }
  bool has_labels = false;
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& rec : records) {
    has_labels = has_labels || rec.label.has_value();
    labels.push_back(rec.label.value_or(-1));
  }
  if (!has_labels) labels.clear();

  soc::RunReport report =
      soc::build_report(log.events, labels, log.params_echo, micros);
  const std::string doc = soc::report_to_json(report);
  std::cout << doc << "\n";
  if (!report_out.empty()) {
    std::ofstream rf(out_path(report_out));
    if (!rf) throw soc::StreamError("cannot open for writing: " + out_path(report_out));
    rf << doc << "\n";
  }
  if (!trajectory_out.empty()) {
    std::ofstream tf(out_path(trajectory_out));
    if (!tf) throw soc::StreamError("cannot open for writing: " + out_path(trajectory_out));
    tf << soc::trajectory_to_csv(report);
  }
  return 0;
}

int cmd_bench(const std::string& recipe_path, EngineParams params,
              std::optional<std::uint64_t> seed, std::uint64_t min_points) {
  soc::ModelConfig config = soc::load_recipe(recipe_path);
  if (seed) config.seed = *seed;

  // Scale the recipe composition up to at least min_points.
  std::uint64_t total = config.outlier_count;
  for (auto c : config.core_counts) total += c;
  if (!config.fixed_mode()) total = config.total_points;
  if (total == 0) throw soc::StreamError("recipe generates no points");
  const std::uint64_t factor = (min_points + total - 1) / total;
  if (factor > 1) {
    for (auto& c : config.core_counts) c *= factor;
    config.outlier_count *= factor;
    config.total_points *= factor;
  }
  config.validate();

  auto labeled = soc::generate_stream(config);
  std::vector<soc::Point> points;
  points.reserve(labeled.size());
  for (auto& lp : labeled) points.push_back(std::move(lp.x));
  std::cout << "benchmark stream: " << points.size() << " points, dim "
            << config.dim() << "\n";
  std::cout << "split  scan      us/point   points/s   clusters\n";

  for (bool split : {false, true}) {
    for (bool parallel : {false, true}) {
      if (parallel && !soc::claim_scan_parallel_available()) {
        std::cout << (split ? "on " : "off") << "    parallel  unavailable\n";
        continue;
      }
      EngineParams p = params;
      p.split_enabled = split;
      p.parallel_scan = parallel;
      soc::SocEngine engine(p);
      auto r = soc::measure_throughput(engine, points);
      char line[160];
      std::snprintf(line, sizeof(line), "%-6s %-9s %9.2f %10.0f %10zu\n",
                    split ? "on" : "off", parallel ? "parallel" : "serial",
                    r.micros_per_point, 1e6 / r.micros_per_point,
                    engine.partition().size());
      std::cout << line;
    }
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"skeleton-set online clustering"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "sample a labeled stream from a recipe");
  std::string gen_recipe, gen_out;
  std::uint64_t gen_seed = 0;
  bool gen_stats = false;
  std::size_t gen_probes = 2000;
  gen->add_option("recipe", gen_recipe, "recipe JSON path")->required();
  gen->add_option("--out", gen_out, "output stream path (JSONL)")->required();
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "override recipe seed");
  gen->add_flag("--stats", gen_stats, "print separation stats for the recipe");
  gen->add_option("--stat-probes", gen_probes, "probe samples for --stats");

  // run
  auto* run = app.add_subcommand("run", "cluster a stream file");
  std::string run_stream, run_out, run_resume, run_snapshot, run_meta;
  std::uint64_t run_limit = 0;
  bool run_serial = false;
  ParamFlags run_flags;
  run->add_option("stream", run_stream, "input stream path")->required();
  run->add_option("--out", run_out, "assignment log path")->required();
  add_param_flags(*run, run_flags);
  auto* resume_opt = run->add_option("--resume", run_resume,
                                     "resume from a snapshot (engine params come from it)");
  run->add_option("--snapshot-out", run_snapshot, "write final engine snapshot");
  run->add_option("--meta-out", run_meta, "write timing/meta JSON (kept out of the log)");
  run->add_option("--limit", run_limit, "process at most this many points");
  run->add_flag("--serial-scan", run_serial, "force the serial claim-scan kernel");

  // eval
  auto* ev = app.add_subcommand("eval", "score an assignment log against its stream");
  std::string ev_assign, ev_stream, ev_report, ev_traj;
  double ev_micros = -1.0;
  ev->add_option("--assign", ev_assign, "assignment log path")->required();
  ev->add_option("--stream", ev_stream, "stream path (labels used when present)")->required();
  ev->add_option("--report-out", ev_report, "write the report document here too");
  ev->add_option("--trajectory-out", ev_traj, "write cluster-count trajectory CSV");
  ev->add_option("--micros", ev_micros, "embed a measured us/point figure");

  // bench
  auto* bench = app.add_subcommand("bench", "time the engine on a recipe");
  std::string bench_recipe;
  std::uint64_t bench_seed = 0, bench_min = 10000;
  ParamFlags bench_flags;
  bench->add_option("recipe", bench_recipe, "recipe JSON path")->required();
  add_param_flags(*bench, bench_flags);
  auto* bench_seed_gen = bench->add_option("--gen-seed", bench_seed, "stream generation seed");
  bench->add_option("--min-points", bench_min, "scale the recipe to at least this many points");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) {
      return cmd_generate(gen_recipe, gen_out,
                          gen_seed_opt->count() ? std::optional(gen_seed) : std::nullopt,
                          gen_stats, gen_probes);
    }
    if (run->parsed()) {
      if (resume_opt->count()) {
        for (auto* opt : run_flags.opts) {
          if (opt->count()) {
            throw soc::ContractError("engine parameters come from the snapshot; " +
                                     opt->get_name() + " conflicts with --resume");
          }
        }
      }
      EngineParams params = params_from_flags(run_flags);
      params.parallel_scan = !run_serial;
      return cmd_run(run_stream, run_out, params, resume_opt->count() > 0,
                     run_resume, run_snapshot, run_meta, run_limit);
    }
    if (ev->parsed()) {
      return cmd_eval(ev_assign, ev_stream, ev_report, ev_traj, ev_micros);
    }
    if (bench->parsed()) {
      return cmd_bench(bench_recipe, params_from_flags(bench_flags),
                       bench_seed_gen->count() ? std::optional(bench_seed) : std::nullopt,
                       bench_min);
    }
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const soc::ContractError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const soc::StreamError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
