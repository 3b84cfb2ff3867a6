#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "cidm/signals.hpp"

namespace cidm {

// Event kinds in dispatch-priority order at equal times: transition
// indicators first, then gate inputs, then gate outputs.
enum class EventKind : int {
  transition_indicator = 0,  // evTI(source, input, target)
  gate_input = 1,            // evGI(input, target)
  gate_output = 2,           // evGO(target)
};

const char* event_kind_name(EventKind k);

// Identity of an event: kind plus its full coordinates. Two events are the
// same event iff all coordinates match.
struct EventKey {
  EventKind kind = EventKind::gate_output;
  int target = -1;  // vertex the event belongs to
  int input = 0;    // 1-based input index, 0 when not applicable
  int source = -1;  // feeding vertex for transition indicators

  auto operator<=>(const EventKey&) const = default;
};

struct QueuedEvent {
  double time = 0.0;
  EventKey key;
  // Payload
  Bit value = Bit::zero;
  double stim_offset = 0.0;
  bool is_stimulus = false;
  std::size_t expected_file_size = 0;
};

// Time-ordered event queue with the simulation's full dispatch contract:
//   - ascending time; ties broken by kind priority, then target rank, then
//     input index, then source rank, then insertion order;
//   - scheduling deletes every pending instance of the same event with
//     scheduled time >= the new time (last-scheduled-wins / preemption);
//   - scheduling strictly before the current time is an error.
// Ranks are an id-derived ordering of vertices, so dispatch order does not
// depend on declaration order.
class EventQueue {
 public:
  explicit EventQueue(std::vector<int> vertex_rank)
      : rank_(std::move(vertex_rank)) {}

  void schedule(QueuedEvent ev, double now);

  bool empty() const { return q_.empty(); }
  std::size_t size() const { return q_.size(); }

  // Removes and returns the next event in dispatch order.
  QueuedEvent pop();

 private:
  struct Entry {
    QueuedEvent ev;
    int target_rank;
    int source_rank;
    std::uint64_t seq;
  };
  struct Cmp {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.ev.time != b.ev.time) return a.ev.time < b.ev.time;
      if (a.ev.key.kind != b.ev.key.kind) return a.ev.key.kind < b.ev.key.kind;
      if (a.target_rank != b.target_rank) return a.target_rank < b.target_rank;
      if (a.ev.key.input != b.ev.key.input) return a.ev.key.input < b.ev.key.input;
      if (a.source_rank != b.source_rank) return a.source_rank < b.source_rank;
      return a.seq < b.seq;
    }
  };

  int rank_of(int vertex) const {
    return vertex < 0 ? -1 : rank_.at(static_cast<std::size_t>(vertex));
  }

  std::vector<int> rank_;
  std::set<Entry, Cmp> q_;
  std::map<EventKey, std::vector<std::set<Entry, Cmp>::iterator>> by_key_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace cidm
