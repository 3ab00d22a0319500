#pragma once

#include <condition_variable>
#include <fstream>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "soc/engine.hpp"
#include "soc/streamgen.hpp"

namespace soc {

struct StreamRecord {
  Point x;
  std::optional<int> label;
};

// One JSON object per line: {"x":[...],"label":n}, label optional.
void write_stream(const std::string& path, const std::vector<LabeledPoint>& points);
std::vector<StreamRecord> read_stream(const std::string& path);

// Parses a single stream line; line_no is only used in error messages.
StreamRecord parse_stream_line(const std::string& line, std::size_t line_no);

// Engine parameter echo used in assignment headers, snapshots and reports.
// parallel_scan is an execution knob with no effect on results and is
// deliberately left out so kernel choice never shows up in output bytes.
std::string params_to_json(const EngineParams& params);
EngineParams params_from_json(const std::string& text);

// Assignment log: a header line {"format":"soc-assign-v1","params":...,
// "dim":D} followed by one event line per processed point.
class AssignmentWriter {
 public:
  AssignmentWriter(const std::string& path, const EngineParams& params,
                   std::size_t dim);
  void write(const AssignmentEvent& event);
  void close();

 private:
  std::ofstream out_;
  std::uint64_t since_flush_ = 0;
};

std::string event_to_json(const AssignmentEvent& event);

struct AssignmentLog {
  std::string params_echo; // JSON text from the header
  std::size_t dim = 0;
  std::vector<AssignmentEvent> events;
};
AssignmentLog read_assignments(const std::string& path);

// Snapshots capture the complete engine state; loading one and resuming
// reproduces the exact continuation of the original run.
void save_snapshot(const std::string& path, const EngineState& state);
EngineState load_snapshot(const std::string& path);

// Bounded single-producer single-consumer queue used to feed the engine
// thread from the stream reader. push blocks when full; pop blocks until an
// item or close() arrives and returns nullopt once drained.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
    if (closed_) throw ContractError("push into a closed queue");
    items_.push(std::move(item));
    not_empty_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::queue<T> items_;
  bool closed_ = false;
};

} // namespace soc
