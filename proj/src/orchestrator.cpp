#include "flowfed/orchestrator.hpp"

#include <fstream>
#include <map>
#include <memory>

#include "flowfed/fl/aggregation.hpp"
#include "flowfed/fl/dataset.hpp"
#include "flowfed/fl/partition.hpp"
#include "flowfed/fl/selection.hpp"
#include "flowfed/metrics.hpp"
#include "flowfed/netsim.hpp"
#include "flowfed/report.hpp"
#include "flowfed/seed.hpp"
#include "flowfed/traffic.hpp"

namespace flowfed {

double compute_time_s(const ComputeModel& model, int local_epochs, std::size_t n_samples,
                      double cpu_units) {
  if (cpu_units <= 0.0) throw Error(ErrorCode::InvalidArgs, "cpu_units must be > 0");
  return static_cast<double>(local_epochs) * static_cast<double>(n_samples) *
         model.work_per_sample_s / cpu_units;
}

SystemSample synthesize_system_metrics(const std::vector<ComputeWindow>& windows, double t) {
  for (const auto& w : windows)
    if (t >= w.start_s && t < w.end_s) return {kBusyCpuPct, kIdleMemMb + w.mem_mb};
  return {kIdleCpuPct, kIdleMemMb};
}

namespace {

// Seconds of schedule pulled from a traffic source per refill.
constexpr double kTrafficChunkS = 10.0;

Error with_context(const Error& e, const std::string& where) {
  return Error(e.code(), where + ": " + e.what());
}

struct BackgroundFlow {
  TrafficSource source;
  std::optional<FlowId> flow;
};

class Experiment {
 public:
  Experiment(const ExperimentConfig& cfg, const RunOptions& opts)
      : cfg_(cfg), opts_(opts) {}

  ExperimentResult run();

 private:
  void setup_sinks();
  void start_traffic();
  void refill(std::size_t idx, double horizon);
  void sample_tick();
  RoundRecord run_round(int round);
  void publish(double t, std::string source, Topic topic, Payload payload) {
    if (bus_) bus_->publish({t, std::move(source), topic, std::move(payload)});
  }

  const ExperimentConfig& cfg_;
  const RunOptions& opts_;
  std::shared_ptr<const Topology> topo_;
  std::unique_ptr<Simulator> sim_;
  std::unique_ptr<MetricBus> bus_;
  std::vector<NodeId> clients_;
  std::map<NodeId, std::vector<std::size_t>> rows_;
  fl::Dataset train_;
  fl::Dataset test_;
  fl::ModelParams global_;
  std::unique_ptr<fl::ServerAggregator> aggregator_;
  std::vector<BackgroundFlow> background_;
  std::map<NodeId, std::vector<ComputeWindow>> windows_;
  bool finished_ = false;
};

void Experiment::setup_sinks() {
  const auto& g = cfg_.general;
  const bool files = !opts_.out_dir.empty() && (g.csv || g.logfile);
  if (!files && !g.stream) return;
  bus_ = std::make_unique<MetricBus>();
  if (!opts_.out_dir.empty()) {
    if (g.csv) bus_->add_file_sink(std::make_unique<CsvWriter>(opts_.out_dir / g.csv->dir));
    if (g.logfile)
      bus_->add_file_sink(std::make_unique<LogfileWriter>(opts_.out_dir / g.logfile->path));
  }
  if (g.stream) {
    auto pub = std::make_shared<StreamPublisher>(g.stream->bind, g.stream->buffer_messages);
    if (opts_.on_stream_bound) opts_.on_stream_bound(pub->port());
    if (opts_.wait_for_subscribers > 0) pub->wait_for_subscribers(opts_.wait_for_subscribers, 5.0);
    bus_->set_stream(std::move(pub));
  }
}

void Experiment::start_traffic() {
  for (const auto& spec : cfg_.net.traffic) {
    try {
      background_.push_back({TrafficSource(spec), std::nullopt});
    } catch (const Error& e) {
      throw with_context(e, "traffic flow '" + spec.name + "'");
    }
  }
  for (std::size_t i = 0; i < background_.size(); ++i) {
    const auto& spec = background_[i].source.spec();
    sim_->schedule(spec.start_s, EventKind::RateProcessChange, [this, i](Simulator& sim) {
      auto& bg = background_[i];
      const auto& s = bg.source.spec();
      bg.flow = sim.open_inelastic(s.src, s.dst, 0.0);
      refill(i, sim.now() + kTrafficChunkS);
    });
  }
}

void Experiment::refill(std::size_t idx, double horizon) {
  auto& bg = background_[idx];
  for (const auto& ev : bg.source.events_until(horizon)) {
    const bool terminal = bg.source.finished() && ev.time_s >= bg.source.spec().stop_s;
    sim_->schedule(ev.time_s, EventKind::RateProcessChange,
                   [this, idx, ev, terminal](Simulator& sim) {
                     auto& b = background_[idx];
                     if (!b.flow || !sim.active(*b.flow)) return;
                     publish(sim.now(), b.source.spec().src, Topic::TrafficEvent,
                             {{"flow_id", b.source.spec().name},
                              {"demand_mbps", ev.demand_mbps}});
                     if (terminal)
                       sim.close(*b.flow);
                     else
                       sim.set_demand(*b.flow, ev.demand_mbps);
                   });
  }
  if (!bg.source.finished())
    sim_->schedule(horizon, EventKind::RateProcessChange,
                   [this, idx](Simulator& sim) { refill(idx, sim.now() + kTrafficChunkS); });
}

void Experiment::sample_tick() {
  const double t = sim_->now();
  for (const auto& c : clients_) {
    const auto s = synthesize_system_metrics(windows_[c], t);
    publish(t, c, Topic::SysSample, {{"node", c}, {"cpu_pct", s.cpu_pct}, {"mem_mb", s.mem_mb}});
  }
  const auto counters = sim_->link_counters();
  for (const auto& h : topo_->hosts()) {
    const auto it = counters.find(h);
    const NodeCounters n = it == counters.end() ? NodeCounters{} : it->second;
    publish(t, h, Topic::NetSample,
            {{"node", h},
             {"tx_bytes", n.tx_bytes},
             {"rx_bytes", n.rx_bytes},
             {"tx_bps", n.tx_bps},
             {"rx_bps", n.rx_bps}});
  }
}

RoundRecord Experiment::run_round(int round) {
  const auto& fl = cfg_.fl;
  const NodeId& server = cfg_.net.server_node;
  RoundRecord rec;
  rec.round = round;
  rec.start_s = sim_->now();

  std::map<NodeId, fl::ClientState> states;
  for (const auto& c : clients_) states[c] = {*topo_->node(c).resources, true};
  auto sel_rng = make_rng({fl.seed, stream::kSelection, static_cast<std::uint64_t>(round)});
  rec.selected = fl::select_clients(fl.selection, states, fl.clients_per_round_fraction, sel_rng);

  // Learning never looks at the clock, so it runs up front.
  std::vector<fl::ClientUpdate> updates;
  for (const auto& c : rec.selected) {
    const auto& rows = rows_.at(c);
    const auto seed = derive_seed({fl.seed, static_cast<std::uint64_t>(round), fnv1a(c)});
    try {
      auto res = fl::local_train(global_, train_, rows, fl.train, seed);
      updates.push_back({std::move(res.params), rows.size()});
    } catch (const Error& e) {
      throw with_context(e, "round " + std::to_string(round) + ", client " + c);
    }
  }
  const double wire = static_cast<double>(global_.wire_bytes());
  global_ = aggregator_->step(global_, updates);
  if (!global_.all_finite())
    throw Error(ErrorCode::NumericalDivergence,
                "round " + std::to_string(round) + ": global model became non-finite");
  const auto eval = fl::evaluate(global_, test_);
  rec.global_loss = eval.loss;
  rec.global_accuracy = eval.accuracy;

  const std::size_t n = rec.selected.size();
  rec.timings.resize(n);
  std::vector<double> c2s_start(n, 0.0);
  std::size_t remaining = n;
  const double t0 = rec.start_s;
  const double param_mb = 3.0 * 8.0 * static_cast<double>(global_.count()) / 1e6;

  for (std::size_t i = 0; i < n; ++i) {
    const NodeId c = rec.selected[i];
    rec.timings[i].client_id = c;
    const std::size_t n_samples = rows_.at(c).size();
    const double ct = compute_time_s(fl.compute, fl.train.local_epochs, n_samples,
                                     topo_->node(c).resources->cpu_units);
    const double mem = param_mb + 8.0 * static_cast<double>(n_samples * (train_.dim + 1)) / 1e6;
    sim_->open_elastic(server, c, wire, [&, i, c, ct, mem](Simulator& sim, const Flow&) {
      const double got = sim.now();
      rec.timings[i].s2c_s = got - t0;
      rec.timings[i].compute_s = ct;
      windows_[c].push_back({got, got + ct, mem});
      sim.schedule(got + ct, EventKind::RoundPhaseBoundary, [&, i, c](Simulator& s) {
        c2s_start[i] = s.now();
        s.open_elastic(c, server, wire, [&, i](Simulator& s2, const Flow&) {
          rec.timings[i].c2s_s = s2.now() - c2s_start[i];
          --remaining;
        });
      });
    });
  }

  try {
    while (remaining > 0) {
      if (!sim_->step())
        throw Error(ErrorCode::StalledSimulation, "event queue drained mid-round");
    }
  } catch (const Error& e) {
    throw with_context(e, "round " + std::to_string(round));
  }

  for (const auto& t : rec.timings) rec.round_duration_s = std::max(rec.round_duration_s, t.span_s());
  // Old compute windows can no longer match a sample time.
  for (auto& [_, w] : windows_)
    std::erase_if(w, [&](const ComputeWindow& x) { return x.end_s < sim_->now(); });

  const double t_end = sim_->now();
  for (const auto& t : rec.timings)
    publish(t_end, t.client_id, Topic::FlRound,
            {{"round", static_cast<std::int64_t>(round)},
             {"client_id", t.client_id},
             {"s2c_s", t.s2c_s},
             {"compute_s", t.compute_s},
             {"c2s_s", t.c2s_s},
             {"round_duration_s", rec.round_duration_s},
             {"global_loss", rec.global_loss},
             {"global_accuracy", rec.global_accuracy}});
  publish(t_end, "server", Topic::Log,
          {{"event", std::string("round_complete")},
           {"round", static_cast<std::int64_t>(round)},
           {"selected", static_cast<std::int64_t>(n)},
           {"round_duration_s", rec.round_duration_s}});
  return rec;
}

ExperimentResult Experiment::run() {
  const auto& fl = cfg_.fl;
  topo_ = std::make_shared<const Topology>(resolve_topology(cfg_.net));
  if (auto v = validate(cfg_, *topo_); !v.empty()) throw ValidationError(std::move(v));
  clients_ = topo_->hosts_with_role(NodeRole::Client);

  std::tie(train_, test_) = fl::make_train_test(fl.dataset);
  const auto part = fl::partition(train_, fl.partition, fl.n_clients, fl.seed);
  for (std::size_t k = 0; k < clients_.size(); ++k) rows_[clients_[k]] = part.assignments[k];
  global_ = fl::init_params(fl.model, train_.dim, train_.n_classes, fl.seed);
  aggregator_ = std::make_unique<fl::ServerAggregator>(fl.aggregator);

  setup_sinks();
  sim_ = std::make_unique<Simulator>(topo_);
  publish(0.0, "experiment", Topic::Log,
          {{"event", std::string("start")},
           {"clients", static_cast<std::int64_t>(clients_.size())},
           {"rounds", static_cast<std::int64_t>(fl.rounds)},
           {"aggregator", std::string(fl::aggregator_name(fl.aggregator))},
           {"partition", std::string(fl::partition_name(fl.partition))}});

  start_traffic();
  const double period = cfg_.general.metric_sample_period_s;
  std::function<void(Simulator&)> tick = [&](Simulator& sim) {
    sample_tick();
    if (!finished_) sim.schedule(sim.now() + period, EventKind::MetricSampleTick, tick);
  };
  sim_->schedule(0.0, EventKind::MetricSampleTick, tick);

  ExperimentResult result;
  for (int r = 0; r < fl.rounds; ++r) {
    result.rounds.push_back(run_round(r));
    if (opts_.on_round) opts_.on_round(result.rounds.back());
  }
  finished_ = true;
  result.end_time_s = sim_->now();
  result.final_params = global_;
  publish(result.end_time_s, "experiment", Topic::Log,
          {{"event", std::string("finish")}, {"t_end_s", result.end_time_s}});
  if (bus_) bus_->close();

  const auto& g = cfg_.general;
  if (g.report && g.csv && !opts_.out_dir.empty()) {
    const auto dir = opts_.out_dir / g.csv->dir;
    std::ofstream out(dir / "report.json", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write report.json");
    out << report_json(summarize(dir));
  }
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  Experiment exp(cfg, opts);
  return exp.run();
}

}  // namespace flowfed
