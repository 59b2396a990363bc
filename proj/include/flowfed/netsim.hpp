#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

#include "flowfed/topology.hpp"

namespace flowfed {

using FlowId = std::uint64_t;

struct ElasticDemand {
  double bytes_total = 0.0;
  double bytes_remaining = 0.0;  // counted in delivered (post-loss) bytes
};

struct InelasticDemand {
  double demand_mbps = 0.0;
};

/// A unidirectional transfer placed on a static route.
struct Flow {
  FlowId id = 0;
  NodeId src;
  NodeId dst;
  Route route;
  std::variant<ElasticDemand, InelasticDemand> kind;
  double start_s = 0.0;
  std::optional<double> drained_s;  // last byte injected
  std::optional<double> done_s;     // last byte delivered
  double propagation_s = 0.0;
  double path_loss = 0.0;

  bool elastic() const noexcept {
    return std::holds_alternative<ElasticDemand>(kind);
  }
};

/// Input to the fair-share computation: one entry per active flow.
struct FlowDemand {
  FlowId id = 0;
  std::vector<LinkIndex> links;
  std::optional<double> cap_mbps;  // set for inelastic flows
};

using RateAllocation = std::map<FlowId, double>;

/// Progressive-filling max-min fair allocation; inelastic demands act as
/// per-flow caps. `capacity_mbps` is indexed by LinkIndex.
RateAllocation allocate_rates(const std::vector<FlowDemand>& flows,
                              const std::vector<double>& capacity_mbps);
RateAllocation allocate_rates(const std::vector<FlowDemand>& flows,
                              const Topology& topo);

struct TransferTime {
  double propagation_s = 0.0;
  double transmission_s = 0.0;
  double total_s() const noexcept { return propagation_s + transmission_s; }
};

/// Requires a completed elastic flow.
TransferTime transfer_time_components(const Flow& flow);

enum class EventKind {
  FlowStart,
  FlowDrain,
  FlowComplete,
  RateProcessChange,
  MetricSampleTick,
  RoundPhaseBoundary,
};
const char* to_string(EventKind kind) noexcept;

struct NodeCounters {
  double tx_bytes = 0.0;
  double rx_bytes = 0.0;
  double tx_bps = 0.0;
  double rx_bps = 0.0;
};

struct TraceEntry {
  double time_s;
  std::uint64_t seq;
  EventKind kind;
  bool operator==(const TraceEntry&) const = default;
};

class Simulator;

/// Min-queue over (time, insertion sequence); simultaneous events pop FIFO.
class EventQueue {
 public:
  using Action = std::function<void(Simulator&)>;
  struct Entry {
    double time_s;
    std::uint64_t seq;
    EventKind kind;
    Action action;
  };

  std::uint64_t push(double time_s, EventKind kind, Action action);
  Entry pop();
  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }
  double top_time() const { return heap_.top().time_s; }

 private:
  struct Later {
    bool operator()(const Entry& x, const Entry& y) const noexcept {
      if (x.time_s != y.time_s) return x.time_s > y.time_s;
      return x.seq > y.seq;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

/// Flow-level fluid network simulator. All mutation happens from event
/// actions or between calls to step(); rates are recomputed only when the
/// active flow set or an inelastic demand changes.
class Simulator {
 public:
  using CompletionCallback = std::function<void(Simulator&, const Flow&)>;

  explicit Simulator(std::shared_ptr<const Topology> topo);

  double now() const noexcept { return now_s_; }
  const Topology& topology() const noexcept { return *topo_; }

  void schedule(double at_s, EventKind kind, EventQueue::Action action);

  /// Immediate mutators: act at now(). Use schedule() to act later.
  FlowId open_elastic(const NodeId& src, const NodeId& dst, double bytes,
                      CompletionCallback on_complete = {});
  FlowId open_inelastic(const NodeId& src, const NodeId& dst, double demand_mbps);
  void set_demand(FlowId id, double demand_mbps);
  void close(FlowId id);

  /// Pops and processes the earliest live event. Returns false when the
  /// queue is empty.
  bool step();
  bool idle() const noexcept { return queue_.empty(); }
  double next_event_time() const { return queue_.top_time(); }

  const Flow& flow(FlowId id) const;
  bool active(FlowId id) const { return active_.count(id) != 0; }
  double rate_mbps(FlowId id) const;
  const RateAllocation& allocation() const noexcept { return allocation_; }

  /// Cumulative per-node byte counters and instantaneous rates, for hosts
  /// and switches alike.
  std::map<NodeId, NodeCounters> link_counters() const;

  void set_tracing(bool on) noexcept { tracing_ = on; }
  const std::vector<TraceEntry>& trace() const noexcept { return trace_; }

  /// Cached static route (computed once per ordered pair).
  const Route& route(const NodeId& src, const NodeId& dst);

 private:
  void integrate_to(double t);
  void reallocate();
  void project_drain();
  void on_drain(std::uint64_t epoch);

  std::shared_ptr<const Topology> topo_;
  std::vector<double> capacity_;
  EventQueue queue_;
  double now_s_ = 0.0;
  double integrated_to_s_ = 0.0;

  FlowId next_flow_id_ = 1;
  std::map<FlowId, Flow> flows_;
  std::map<FlowId, CompletionCallback> callbacks_;
  std::map<FlowId, bool> active_;
  RateAllocation allocation_;
  bool dirty_ = false;
  std::uint64_t drain_epoch_ = 0;

  std::map<NodeId, NodeCounters> counters_;
  std::map<std::pair<NodeId, NodeId>, Route> routes_;

  bool tracing_ = false;
  std::vector<TraceEntry> trace_;
};

}  // namespace flowfed
