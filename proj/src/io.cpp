#include "soc/io.hpp"

#include <sstream>

#include "json.hpp"

namespace soc {

namespace {

using ojson = nlohmann::ordered_json;

ojson parse_line(const std::string& line, std::size_t line_no,
                 const char* what) {
  try {
    return ojson::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw StreamError(std::string("malformed ") + what + " at line " +
                      std::to_string(line_no) + ": " + e.what());
  }
}

} // namespace

void write_stream(const std::string& path, const std::vector<LabeledPoint>& points) {
  std::ofstream out(path);
  if (!out) throw StreamError("cannot open for writing: " + path);
  for (const auto& pt : points) {
    ojson j;
    j["x"] = pt.x;
    j["label"] = pt.label;
    out << j.dump() << "\n";
  }
  if (!out) throw StreamError("write failure on " + path);
}

StreamRecord parse_stream_line(const std::string& line, std::size_t line_no) {
  ojson j = parse_line(line, line_no, "stream record");
  StreamRecord rec;
  try {
    rec.x = j.at("x").get<Point>();
    if (j.contains("label") && !j["label"].is_null()) {
      rec.label = j["label"].get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw StreamError("malformed stream record at line " +
                      std::to_string(line_no) + ": " + e.what());
  }
  if (rec.x.empty()) {
    throw StreamError("empty point at line " + std::to_string(line_no));
  }
  return rec;
}

std::vector<StreamRecord> read_stream(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StreamError("cannot open stream file: " + path);
  std::vector<StreamRecord> records;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    StreamRecord rec = parse_stream_line(line, line_no);
    if (dim == 0) {
      dim = rec.x.size();
    } else if (rec.x.size() != dim) {
      throw StreamError("dimension drift at line " + std::to_string(line_no) +
                        ": expected " + std::to_string(dim) + ", got " +
                        std::to_string(rec.x.size()));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string params_to_json(const EngineParams& params) {
  ojson j;
  j["radius"] = params.radius;
  j["alpha"] = params.alpha;
  j["max_skeleton"] = params.max_skeleton;
  j["h_init"] = params.h_init;
  j["split"] = params.split_enabled;
  j["full_split_sweep"] = params.full_split_sweep;
  j["grid_delta"] = params.grid_delta;
  j["master_seed"] = params.master_seed;
  return j.dump();
}

EngineParams params_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw StreamError(std::string("malformed params JSON: ") + e.what());
  }
  EngineParams p;
  p.radius = j.value("radius", p.radius);
  p.alpha = j.value("alpha", p.alpha);
  p.max_skeleton = j.value("max_skeleton", p.max_skeleton);
  p.h_init = j.value("h_init", p.h_init);
  p.split_enabled = j.value("split", p.split_enabled);
  p.full_split_sweep = j.value("full_split_sweep", p.full_split_sweep);
  p.grid_delta = j.value("grid_delta", p.grid_delta);
  p.master_seed = j.value("master_seed", p.master_seed);
  return p;
}

std::string event_to_json(const AssignmentEvent& event) {
  ojson j;
  j["i"] = event.point_index;
  j["c"] = event.resulting_cluster_id;
  j["a"] = event.action == AssignmentEvent::Action::merged ? "merged" : "singleton";
  j["absorbed"] = event.absorbed_cluster_ids;
  j["sk"] = event.became_skeleton;
  if (!event.splits.empty()) {
    ojson splits = ojson::array();
    for (const auto& s : event.splits) {
      splits.push_back({{"parent", s.parent}, {"frags", s.fragments}, {"to", s.successor}});
    }
    j["splits"] = std::move(splits);
  }
  return j.dump();
}

AssignmentWriter::AssignmentWriter(const std::string& path,
                                   const EngineParams& params, std::size_t dim) {
  out_.open(path);
  if (!out_) throw StreamError("cannot open for writing: " + path);
  ojson header;
  header["format"] = "soc-assign-v1";
  header["params"] = ojson::parse(params_to_json(params));
  header["dim"] = dim;
  out_ << header.dump() << "\n";
}

void AssignmentWriter::write(const AssignmentEvent& event) {
  out_ << event_to_json(event) << "\n";
  if (++since_flush_ >= 128) {
    out_.flush();
    since_flush_ = 0;
  }
}

void AssignmentWriter::close() {
  out_.flush();
  out_.close();
  if (out_.fail()) throw StreamError("write failure while closing assignment log");
}

AssignmentLog read_assignments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StreamError("cannot open assignment file: " + path);
  AssignmentLog log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j = parse_line(line, line_no, "assignment record");
    if (!have_header) {
      if (j.value("format", "") != "soc-assign-v1") {
        throw StreamError("assignment file missing its header line");
      }
      log.params_echo = j.at("params").dump();
      log.dim = j.value("dim", std::size_t{0});
      have_header = true;
      continue;
    }
    AssignmentEvent event;
    try {
      event.point_index = j.at("i").get<std::uint64_t>();
      event.resulting_cluster_id = j.at("c").get<ClusterId>();
      const std::string action = j.at("a").get<std::string>();
      if (action == "merged") {
        event.action = AssignmentEvent::Action::merged;
      } else if (action == "singleton") {
        event.action = AssignmentEvent::Action::singleton;
      } else {
        throw StreamError("unknown action '" + action + "' at line " +
                          std::to_string(line_no));
      }
      event.absorbed_cluster_ids = j.value("absorbed", std::vector<ClusterId>{});
      event.became_skeleton = j.value("sk", true);
      if (j.contains("splits")) {
        for (const auto& s : j["splits"]) {
          SplitRecord rec;
          rec.parent = s.at("parent").get<ClusterId>();
          rec.fragments = s.at("frags").get<std::vector<ClusterId>>();
          rec.successor = s.at("to").get<ClusterId>();
          event.splits.push_back(std::move(rec));
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw StreamError("malformed assignment record at line " +
                        std::to_string(line_no) + ": " + e.what());
    }
    log.events.push_back(std::move(event));
  }
  if (!have_header) throw StreamError("assignment file is empty (no header)");
  return log;
}

void save_snapshot(const std::string& path, const EngineState& state) {
  ojson j;
  j["format"] = "soc-snapshot-v1";
  j["params"] = ojson::parse(params_to_json(state.params));
  j["dim"] = state.dim;
  j["points_seen"] = state.points_seen;
  j["next_cluster_id"] = state.partition.next_cluster_id;
  j["next_entry_id"] = state.partition.next_entry_id;
  ojson streams = ojson::array();
  for (const auto& [seed, counter] : state.key_streams) {
    streams.push_back({seed, counter});
  }
  j["key_streams"] = std::move(streams);
  j["dirty"] = state.dirty;

  ojson clusters = ojson::array();
  for (const auto& set : state.partition.sets) {
    ojson c;
    c["id"] = set.cluster_id;
    ojson entries = ojson::array();
    for (const auto& e : set.entries) {
      entries.push_back({{"p", e.point}, {"key", e.key}, {"w", e.weight}, {"eid", e.entry_id}});
    }
    c["entries"] = std::move(entries);
    ojson edges = ojson::array();
    if (const TopologyGraph* g = state.graphs.find(set.cluster_id)) {
      for (const auto& [a, b] : g->edges) edges.push_back({a, b});
    }
    c["edges"] = std::move(edges);
    clusters.push_back(std::move(c));
  }
  j["clusters"] = std::move(clusters);

  std::ofstream out(path);
  if (!out) throw StreamError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw StreamError("write failure on " + path);
}

EngineState load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StreamError("cannot open snapshot: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  ojson j;
  try {
    j = ojson::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw StreamError(std::string("snapshot is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "soc-snapshot-v1") {
      throw StreamError("unsupported snapshot format tag");
    }
    EngineState state;
    state.params = params_from_json(j.at("params").dump());
    state.dim = j.value("dim", std::size_t{0});
    state.points_seen = j.value("points_seen", std::uint64_t{0});
    state.partition.next_cluster_id = j.at("next_cluster_id").get<ClusterId>();
    state.partition.next_entry_id = j.at("next_entry_id").get<EntryId>();
    for (const auto& s : j.at("key_streams")) {
      state.key_streams.emplace_back(s.at(0).get<std::uint64_t>(),
                                     s.at(1).get<std::uint64_t>());
    }
    state.dirty = j.value("dirty", std::vector<ClusterId>{});
    for (const auto& c : j.at("clusters")) {
      SkeletonSet set;
      set.cluster_id = c.at("id").get<ClusterId>();
      for (const auto& e : c.at("entries")) {
        SkeletonEntry entry;
        entry.point = e.at("p").get<Point>();
        entry.key = e.at("key").get<double>();
        entry.weight = e.at("w").get<std::uint64_t>();
        entry.entry_id = e.at("eid").get<EntryId>();
        set.add_entry(std::move(entry));
      }
      if (state.params.split_enabled) {
        TopologyGraph g;
        g.cluster_id = set.cluster_id;
        for (const auto& e : set.entries) g.vertices.insert(e.entry_id);
        for (const auto& edge : c.at("edges")) {
          g.add_edge(edge.at(0).get<EntryId>(), edge.at(1).get<EntryId>());
        }
        state.graphs.graphs.emplace(g.cluster_id, std::move(g));
      }
      state.partition.sets.push_back(std::move(set));
    }
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw StreamError(std::string("snapshot structure invalid: ") + e.what());
  }
}

} // namespace soc
