#include "flowfed/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "flowfed/error.hpp"

namespace flowfed {

namespace {

constexpr double kBitsPerByte = 8.0;
constexpr double kMega = 1e6;

bool at_most(double value, double level) {
  return value <= level + 1e-12 * std::max(1.0, std::abs(level));
}

}  // namespace

RateAllocation allocate_rates(const std::vector<FlowDemand>& flows,
                              const std::vector<double>& capacity_mbps) {
  RateAllocation rates;
  const std::size_t n = flows.size();
  std::vector<double> rate(n, 0.0);
  std::vector<bool> frozen(n, false);
  std::vector<double> frozen_load(capacity_mbps.size(), 0.0);

  std::size_t remaining = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = flows[i];
    for (auto l : f.links)
      if (l >= capacity_mbps.size())
        throw Error(ErrorCode::InvalidArgs, "flow uses unknown link");
    if (f.links.empty()) {
      if (!f.cap_mbps)
        throw Error(ErrorCode::InvalidArgs, "elastic flow with an empty route");
      rate[i] = std::max(0.0, *f.cap_mbps);
      frozen[i] = true;
    } else if (f.cap_mbps && !(*f.cap_mbps > 0.0)) {
      frozen[i] = true;
    } else {
      ++remaining;
    }
  }

  double level = 0.0;
  while (remaining > 0) {
    std::vector<std::size_t> unfrozen_on(capacity_mbps.size(), 0);
    for (std::size_t i = 0; i < n; ++i)
      if (!frozen[i])
        for (auto l : flows[i].links) ++unfrozen_on[l];

    std::vector<double> saturation(capacity_mbps.size(),
                                   std::numeric_limits<double>::infinity());
    double next = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < capacity_mbps.size(); ++l) {
      if (unfrozen_on[l] == 0) continue;
      saturation[l] = std::max(0.0, capacity_mbps[l] - frozen_load[l]) /
                      static_cast<double>(unfrozen_on[l]);
      next = std::min(next, saturation[l]);
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!frozen[i] && flows[i].cap_mbps) next = std::min(next, *flows[i].cap_mbps);
    level = std::max(level, next);

    std::vector<std::size_t> freeze;
    for (std::size_t i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      rate[i] = level;
      bool stop = flows[i].cap_mbps && at_most(*flows[i].cap_mbps, level);
      for (auto l : flows[i].links) stop = stop || at_most(saturation[l], level);
      if (stop) freeze.push_back(i);
    }
    for (auto i : freeze) {
      if (flows[i].cap_mbps) rate[i] = std::min(rate[i], *flows[i].cap_mbps);
      frozen[i] = true;
      --remaining;
      for (auto l : flows[i].links) frozen_load[l] += rate[i];
    }
  }

  for (std::size_t i = 0; i < n; ++i) rates[flows[i].id] = rate[i];
  return rates;
}

RateAllocation allocate_rates(const std::vector<FlowDemand>& flows,
                              const Topology& topo) {
  std::vector<double> capacity;
  capacity.reserve(topo.links().size());
  for (const auto& l : topo.links()) capacity.push_back(l.attrs.bandwidth_mbps);
  return allocate_rates(flows, capacity);
}

TransferTime transfer_time_components(const Flow& flow) {
  if (!flow.elastic() || !flow.drained_s)
    throw Error(ErrorCode::InvalidArgs,
                "transfer time requires a completed elastic flow");
  return TransferTime{flow.propagation_s, *flow.drained_s - flow.start_s};
}

const char* to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::FlowStart: return "FlowStart";
    case EventKind::FlowDrain: return "FlowDrain";
    case EventKind::FlowComplete: return "FlowComplete";
    case EventKind::RateProcessChange: return "RateProcessChange";
    case EventKind::MetricSampleTick: return "MetricSampleTick";
    case EventKind::RoundPhaseBoundary: return "RoundPhaseBoundary";
  }
  return "?";
}

std::uint64_t EventQueue::push(double time_s, EventKind kind, Action action) {
  const auto seq = next_seq_++;
  heap_.push(Entry{time_s, seq, kind, std::move(action)});
  return seq;
}

EventQueue::Entry EventQueue::pop() {
  Entry e = heap_.top();
  heap_.pop();
  return e;
}

Simulator::Simulator(std::shared_ptr<const Topology> topo) : topo_(std::move(topo)) {
  for (const auto& l : topo_->links()) capacity_.push_back(l.attrs.bandwidth_mbps);
  for (const auto& [id, _] : topo_->nodes()) counters_[id];
}

void Simulator::schedule(double at_s, EventKind kind, EventQueue::Action action) {
  if (at_s < now_s_)
    throw Error(ErrorCode::InvalidArgs, "cannot schedule an event in the past");
  queue_.push(at_s, kind, std::move(action));
}

const Route& Simulator::route(const NodeId& src, const NodeId& dst) {
  auto key = std::make_pair(src, dst);
  auto it = routes_.find(key);
  if (it == routes_.end())
    it = routes_.emplace(key, shortest_route(*topo_, src, dst)).first;
  return it->second;
}

FlowId Simulator::open_elastic(const NodeId& src, const NodeId& dst, double bytes,
                               CompletionCallback on_complete) {
  if (!(bytes >= 0.0) || !std::isfinite(bytes))
    throw Error(ErrorCode::InvalidArgs, "elastic flow needs a finite size >= 0");
  Flow f;
  f.id = next_flow_id_++;
  f.src = src;
  f.dst = dst;
  f.route = route(src, dst);
  f.kind = ElasticDemand{bytes, bytes};
  f.start_s = now_s_;
  f.propagation_s = path_delay_s(*topo_, f.route);
  f.path_loss = path_loss(*topo_, f.route);
  const auto id = f.id;
  flows_.emplace(id, std::move(f));
  if (on_complete) callbacks_.emplace(id, std::move(on_complete));
  active_[id] = true;
  dirty_ = true;
  return id;
}

FlowId Simulator::open_inelastic(const NodeId& src, const NodeId& dst,
                                 double demand_mbps) {
  Flow f;
  f.id = next_flow_id_++;
  f.src = src;
  f.dst = dst;
  f.route = route(src, dst);
  f.kind = InelasticDemand{std::max(0.0, demand_mbps)};
  f.start_s = now_s_;
  f.propagation_s = path_delay_s(*topo_, f.route);
  f.path_loss = path_loss(*topo_, f.route);
  const auto id = f.id;
  flows_.emplace(id, std::move(f));
  active_[id] = true;
  dirty_ = true;
  return id;
}

void Simulator::set_demand(FlowId id, double demand_mbps) {
  auto& f = flows_.at(id);
  auto* d = std::get_if<InelasticDemand>(&f.kind);
  if (!d) throw Error(ErrorCode::InvalidArgs, "set_demand on an elastic flow");
  demand_mbps = std::max(0.0, demand_mbps);
  if (d->demand_mbps != demand_mbps) {
    d->demand_mbps = demand_mbps;
    if (active(id)) dirty_ = true;
  }
}

void Simulator::close(FlowId id) {
  if (active_.erase(id)) dirty_ = true;
}

const Flow& Simulator::flow(FlowId id) const {
  auto it = flows_.find(id);
  if (it == flows_.end()) throw Error(ErrorCode::InvalidArgs, "unknown flow");
  return it->second;
}

double Simulator::rate_mbps(FlowId id) const {
  auto it = allocation_.find(id);
  return it == allocation_.end() ? 0.0 : it->second;
}

void Simulator::integrate_to(double t) {
  const double dt = t - integrated_to_s_;
  if (dt <= 0.0) return;
  for (const auto& [id, _] : active_) {
    auto& f = flows_.at(id);
    const double injected = rate_mbps(id) * kMega / kBitsPerByte * dt;
    const double delivered = injected * (1.0 - f.path_loss);
    counters_[f.src].tx_bytes += injected;
    counters_[f.dst].rx_bytes += delivered;
    if (auto* e = std::get_if<ElasticDemand>(&f.kind))
      e->bytes_remaining = std::max(0.0, e->bytes_remaining - delivered);
  }
  integrated_to_s_ = t;
}

void Simulator::reallocate() {
  std::vector<FlowDemand> demands;
  demands.reserve(active_.size());
  for (const auto& [id, _] : active_) {
    const auto& f = flows_.at(id);
    FlowDemand d{id, f.route.links, std::nullopt};
    if (const auto* in = std::get_if<InelasticDemand>(&f.kind)) d.cap_mbps = in->demand_mbps;
    demands.push_back(std::move(d));
  }
  allocation_ = allocate_rates(demands, capacity_);
  dirty_ = false;
}

void Simulator::project_drain() {
  ++drain_epoch_;
  double earliest = std::numeric_limits<double>::infinity();
  for (const auto& [id, _] : active_) {
    const auto& f = flows_.at(id);
    const auto* e = std::get_if<ElasticDemand>(&f.kind);
    if (!e) continue;
    const double goodput = rate_mbps(id) * (1.0 - f.path_loss);
    double t;
    if (e->bytes_remaining <= 0.0) {
      t = now_s_;
    } else if (goodput > 0.0) {
      t = now_s_ + e->bytes_remaining * kBitsPerByte / (goodput * kMega);
    } else {
      throw StalledSimulationError(id);
    }
    earliest = std::min(earliest, t);
  }
  if (std::isfinite(earliest)) {
    const auto epoch = drain_epoch_;
    queue_.push(earliest, EventKind::FlowDrain,
                [epoch](Simulator& sim) { sim.on_drain(epoch); });
  }
}

void Simulator::on_drain(std::uint64_t epoch) {
  if (epoch != drain_epoch_) return;
  std::vector<FlowId> drained;
  for (const auto& [id, _] : active_) {
    const auto& f = flows_.at(id);
    const auto* e = std::get_if<ElasticDemand>(&f.kind);
    if (!e) continue;
    const double goodput = rate_mbps(id) * (1.0 - f.path_loss) * kMega / kBitsPerByte;
    // Anything within a picosecond of draining is done now.
    if (e->bytes_remaining <= goodput * 1e-12 + 1e-9) drained.push_back(id);
  }
  for (auto id : drained) {
    auto& f = flows_.at(id);
    auto& e = std::get<ElasticDemand>(f.kind);
    // Settle the integration residue so delivered bytes equal bytes_total.
    const double residual = e.bytes_remaining;
    counters_[f.dst].rx_bytes += residual;
    counters_[f.src].tx_bytes += residual / (1.0 - f.path_loss);
    e.bytes_remaining = 0.0;
    f.drained_s = now_s_;
    f.done_s = now_s_ + f.propagation_s;
    active_.erase(id);
    dirty_ = true;
    queue_.push(*f.done_s, EventKind::FlowComplete, [id](Simulator& sim) {
      auto cb = sim.callbacks_.find(id);
      if (cb == sim.callbacks_.end()) return;
      auto fn = std::move(cb->second);
      sim.callbacks_.erase(cb);
      fn(sim, sim.flows_.at(id));
    });
  }
  // A stale projection (e.g. after float drift) must not leave flows stranded.
  if (drained.empty()) dirty_ = true;
}

bool Simulator::step() {
  if (dirty_) {
    reallocate();
    project_drain();
  }
  if (queue_.empty()) return false;
  auto entry = queue_.pop();
  integrate_to(entry.time_s);
  now_s_ = std::max(now_s_, entry.time_s);
  entry.action(*this);
  if (tracing_ && !(entry.kind == EventKind::FlowDrain && !dirty_))
    trace_.push_back(TraceEntry{entry.time_s, entry.seq, entry.kind});
  if (dirty_) {
    reallocate();
    project_drain();
  }
  return true;
}

std::map<NodeId, NodeCounters> Simulator::link_counters() const {
  auto out = counters_;
  for (const auto& [id, _] : active_) {
    const auto& f = flows_.at(id);
    const double bps = rate_mbps(id) * kMega;
    out[f.src].tx_bps += bps;
    out[f.dst].rx_bps += bps * (1.0 - f.path_loss);
  }
  return out;
}

}  // namespace flowfed
