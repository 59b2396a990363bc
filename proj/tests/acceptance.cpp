// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "flowfed/config.hpp"
#include "flowfed/fl/aggregation.hpp"
#include "flowfed/fl/dataset.hpp"
#include "flowfed/fl/model.hpp"
#include "flowfed/fl/partition.hpp"
#include "flowfed/metrics.hpp"
#include "flowfed/netsim.hpp"
#include "flowfed/orchestrator.hpp"
#include "flowfed/traffic.hpp"
#include "oracles.hpp"
#include "scratch.hpp"
#include "subscriber.hpp"

using namespace flowfed;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(FLOWFED_SOURCE_DIR) / "configs";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Every experiment run by the suite, for the decomposition check.
std::vector<ExperimentResult> g_runs;

const ExperimentResult& record(ExperimentResult r) {
  g_runs.push_back(std::move(r));
  return g_runs.back();
}

// ---------------------------------------------------------------------------

Outcome maxmin_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> cap_d(0.5, 1000.0);
  double worst = 0.0;
  int inelastic = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const int nl = 1 + static_cast<int>(rng() % 6);
    const int nf = 1 + static_cast<int>(rng() % 6);
    std::vector<double> caps(nl);
    for (auto& c : caps) c = cap_d(rng);
    std::vector<FlowDemand> flows;
    std::vector<oracle::MaxMinFlow> oflows;
    for (int f = 0; f < nf; ++f) {
      FlowDemand d{static_cast<FlowId>(100 + f), {}, {}};
      for (int l = 0; l < nl; ++l)
        if (rng() % 2) d.links.push_back(l);
      if (d.links.empty()) d.links.push_back(rng() % nl);
      if (rng() % 2) {
        d.cap_mbps = cap_d(rng) * 0.5;
        ++inelastic;
      }
      flows.push_back(d);
      oflows.push_back({d.links, d.cap_mbps});
    }
    const auto got = allocate_rates(flows, caps);
    const auto want = oracle::maxmin_rates(oflows, caps);
    for (int f = 0; f < nf; ++f) worst = std::max(worst, std::abs(got.at(100 + f) - want[f]));
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-9 && dt < 10.0,
          "max |err| " + fmt("%.3g", worst) + " Mbps over 500 instances (" +
              std::to_string(inelastic) + " inelastic flows), " + fmt("%.2f", dt) + " s"};
}

Outcome transfer_arithmetic() {
  auto topo = std::make_shared<const Topology>(Topology::build(
      {{"a", NodeKind::Host, NodeRole::Server, NodeResources{}},
       {"b", NodeKind::Host, NodeRole::Client, NodeResources{}}},
      {{"a", "b", {50.0, 10.0, 0.0}}}));
  Simulator sim(topo);
  const auto id = sim.open_elastic("a", "b", 10e6);
  while (sim.step()) {
  }
  const double done = *sim.flow(id).done_s;
  return {std::abs(done - 1.610) <= 1e-9, "completion at " + fmt("%.12f", done) + " s"};
}

Outcome partitioner_suite() {
  using namespace flowfed::fl;
  std::mt19937_64 rng(77);
  int cover_fail = 0, shard_fail = 0;
  for (int draw = 0; draw < 1000; ++draw) {
    const int classes = 2 + static_cast<int>(rng() % 9);
    // at least 30 per class so every drawn shard layout is feasible
    const std::size_t n = 30 * classes + rng() % 400;
    const auto data = make_synthetic_dataset(rng(), n, classes, 2, 1.0);
    const std::uint64_t seed = rng();
    int clients = 1 + static_cast<int>(rng() % 12);
    PartitionSpec spec;
    switch (draw % 3) {
      case 0: spec = IidPartition{}; break;
      case 1: {
        const int cpc = 1 + static_cast<int>(rng() % classes);
        // smallest client count that divides evenly, scaled up a little
        const int base = classes / std::gcd(classes, cpc);
        clients = base * (1 + static_cast<int>(rng() % 3));
        spec = ShardPartition{cpc};
        break;
      }
      default:
        spec = DirichletPartition{std::pow(10.0, -1.0 + 3.0 * (rng() % 1000) / 1000.0)};
    }
    const auto p = partition(data, spec, clients, seed);
    std::vector<int> seen(n, 0);
    for (const auto& a : p.assignments)
      for (auto i : a) ++seen[i];
    if (p.assignments.size() != static_cast<std::size_t>(clients) ||
        std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
      ++cover_fail;
    if (const auto* s = std::get_if<ShardPartition>(&spec))
      for (const auto& a : p.assignments) {
        std::set<int> labels;
        for (auto i : a) labels.insert(data.labels[i]);
        if (labels.size() > static_cast<std::size_t>(s->classes_per_client)) ++shard_fail;
      }
  }

  // alpha = 1000: seed-averaged per-client class proportions and sizes.
  const auto data = make_synthetic_dataset(3, 10000, 10, 2, 1.0);
  const int seeds = 200;
  std::vector<double> prop(5 * 10, 0.0), size(5, 0.0);
  for (int s = 0; s < seeds; ++s) {
    const auto p = partition(data, DirichletPartition{1000.0}, 5, 1000 + s);
    for (int c = 0; c < 5; ++c) {
      const auto& a = p.assignments[c];
      size[c] += static_cast<double>(a.size()) / seeds;
      std::vector<double> cnt(10, 0.0);
      for (auto i : a) cnt[data.labels[i]] += 1.0;
      for (int k = 0; k < 10; ++k) prop[c * 10 + k] += cnt[k] / a.size() / seeds;
    }
  }
  double worst_prop = 0.0, worst_size = 0.0;
  for (double v : prop) worst_prop = std::max(worst_prop, std::abs(v - 0.1) / 0.1);
  for (double v : size) worst_size = std::max(worst_size, std::abs(v - 2000.0) / 2000.0);

  const bool ok = cover_fail == 0 && shard_fail == 0 && worst_prop <= 0.05 && worst_size <= 0.05;
  return {ok, "cover failures " + std::to_string(cover_fail) + ", shard-label violations " +
                  std::to_string(shard_fail) + ", Dirichlet(1000) worst class-proportion dev " +
                  fmt("%.2f", 100 * worst_prop) + "% / size dev " +
                  fmt("%.2f", 100 * worst_size) + "% over 200 seeds"};
}

Outcome aggregator_algebra() {
  using namespace flowfed::fl;
  auto scalar = [](double v) { return ModelParams{{v}, {1}}; };
  std::vector<std::string> bad;

  std::vector<ClientUpdate> u{{scalar(0), 1}, {scalar(4), 3}};
  if (aggregate_fedavg(u).values[0] != 3.0) bad.push_back("fedavg weighted");
  std::vector<ClientUpdate> one{{ModelParams{{1.25, -7.5}, {2, 1}}, 4}};
  if (!(aggregate_fedavg(one) == one[0].params)) bad.push_back("fedavg identity");
  std::vector<ClientUpdate> eq{{scalar(2), 10}, {scalar(4), 10}};
  if (aggregate_fedavg(eq).values[0] != 3.0) bad.push_back("fedavg equal weights");

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    ModelParams prev{{}, {4, 2}}, avg{{}, {4, 2}};
    for (int k = 0; k < 10; ++k) {
      prev.values.push_back(g(rng));
      avg.values.push_back(g(rng));
    }
    auto [w, st] = server_update_fedavgm({}, prev, avg, FedAvgMSpec{1.0, 0.0});
    for (std::size_t k = 0; k < w.values.size(); ++k)
      if (std::abs(w.values[k] - avg.values[k]) > 1e-12) {
        bad.push_back("fedavgm(beta=0, lr=1) vs fedavg");
        break;
      }

    auto [wy, sy] = server_update_fedyogi({}, prev, prev, FedYogiSpec{});
    if (!(wy == prev) || std::any_of(sy.m.begin(), sy.m.end(), [](double m) { return m != 0; }))
      bad.push_back("fedyogi fixed point");
  }

  auto [wy, sy] = server_update_fedyogi({}, scalar(0.0), scalar(1.0),
                                        FedYogiSpec{0.1, 0.9, 0.99, 1e-3});
  const double want = 0.1 * 0.1 / (0.1 + 0.001);
  const double err = std::abs(wy.values[0] - want);
  if (err > 1e-12) bad.push_back("fedyogi single step");

  std::string detail = "FedYogi step " + fmt("%.15f", wy.values[0]) + " (|err| " +
                       fmt("%.1g", err) + ")";
  for (const auto& b : bad) detail += "; failed: " + b;
  return {bad.empty(), detail};
}

Outcome gradient_checks() {
  using namespace flowfed::fl;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  double worst_ce = 0.0, worst_prox = 0.0;
  auto rel = [](const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      num += (a[i] - b[i]) * (a[i] - b[i]);
      den = std::max(den, std::max(a[i] * a[i], b[i] * b[i]));
    }
    num = std::sqrt(num);
    den = std::sqrt(den * static_cast<double>(a.size()));
    return den > 0 ? num / den : num;
  };
  for (int inst = 0; inst < 50; ++inst) {
    const int classes = 2 + inst % 4;
    const std::size_t dim = 2 + static_cast<std::size_t>(inst % 5);
    const auto data = make_synthetic_dataset(inst, 12, classes, dim, 2.0);
    const ModelSpec spec{inst % 2 ? ModelKind::Mlp : ModelKind::Logistic, static_cast<std::size_t>(3 + inst % 4)};
    auto params = init_params(spec, dim, classes, inst);
    for (auto& v : params.values) v = 0.5 * g(rng);
    std::vector<std::size_t> rows{0, 2, 3, 5, 7, 8, 11};

    std::vector<double> grad;
    cross_entropy(params, data, rows, &grad);
    std::vector<double> fd(params.count());
    const double h = 1e-5;
    for (std::size_t i = 0; i < params.count(); ++i) {
      auto p = params, m = params;
      p.values[i] += h;
      m.values[i] -= h;
      fd[i] = (cross_entropy(p, data, rows, nullptr) - cross_entropy(m, data, rows, nullptr)) /
              (2 * h);
    }
    worst_ce = std::max(worst_ce, rel(grad, fd));

    std::vector<double> anchor(params.count());
    for (auto& a : anchor) a = g(rng);
    const double mu = 0.01 + std::abs(g(rng));
    std::vector<double> pg(params.count(), 0.0), pfd(params.count());
    add_proximal_gradient(params.values, anchor, mu, pg);
    for (std::size_t i = 0; i < params.count(); ++i) {
      auto p = params.values, m = params.values;
      p[i] += h;
      m[i] -= h;
      pfd[i] = (proximal_penalty(p, anchor, mu) - proximal_penalty(m, anchor, mu)) / (2 * h);
    }
    worst_prox = std::max(worst_prox, rel(pg, pfd));
  }
  return {worst_ce <= 1e-6 && worst_prox <= 1e-6,
          "worst relative error: cross-entropy " + fmt("%.2g", worst_ce) + ", proximal " +
              fmt("%.2g", worst_prox) + " (50 instances, logistic and MLP)"};
}

Outcome traffic_statistics() {
  auto spec = [](TrafficPatternSpec p, std::uint64_t seed) {
    TrafficFlowSpec s;
    s.name = "x";
    s.src = "a";
    s.dst = "b";
    s.pattern = std::move(p);
    s.cap_mbps = 100;
    s.start_s = 0;
    s.stop_s = 1000;
    s.seed = seed;
    return s;
  };
  struct Case {
    const char* name;
    TrafficPatternSpec pattern;
    double analytic;
  };
  const std::vector<Case> cases{
      {"uniform", UniformPattern{20}, 20},
      {"bursty", BurstyPattern{40, 2, 3}, 40 * 2.0 / 5.0},
      {"normal", NormalPattern{30, 3, 0.5}, 30},
      {"sinewave", SineWavePattern{25, 20, 60}, 25},
      {"poisson", PoissonPattern{10, 12500}, 10 * 12500 * 8 / 1e6},
  };
  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    const auto ev = schedule_events(spec(c.pattern, 4242), 1000);
    const double mean = mean_demand_mbps(ev, 0, 1000);
    const double dev = std::abs(mean - c.analytic) / c.analytic;
    ok &= dev <= 0.05;
    detail += std::string(c.name) + " " + fmt("%.2f", 100 * dev) + "%, ";
  }

  const auto ev = schedule_events(spec(PoissonPattern{10, 12500}, 99), 1000);
  std::vector<double> arrivals;
  for (const auto& e : ev)
    if (e.burst_bytes > 0) arrivals.push_back(e.time_s);
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 1; i < arrivals.size(); ++i) {
    const double gap = arrivals[i] - arrivals[i - 1];
    sum += gap;
    sq += gap * gap;
  }
  const double n = static_cast<double>(arrivals.size() - 1);
  const double mean_gap = sum / n;
  const double cv = std::sqrt(sq / n - mean_gap * mean_gap) / mean_gap;
  ok &= cv >= 0.9 && cv <= 1.1;

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    TrafficPatternSpec p;
    switch (i % 5) {
      case 0: p = UniformPattern{200 * u(rng)}; break;
      case 1: p = BurstyPattern{200 * u(rng), 0.1 + 3 * u(rng), 3 * u(rng)}; break;
      case 2: p = NormalPattern{150 * u(rng), 100 * u(rng), 0.05 + u(rng)}; break;
      case 3: p = SineWavePattern{150 * u(rng), 150 * u(rng), 0.5 + 30 * u(rng)}; break;
      default: p = PoissonPattern{5 * u(rng), 5e6 * u(rng)}; break;
    }
    auto s = spec(p, i);
    s.cap_mbps = 1 + 99 * u(rng);
    s.stop_s = 40;
    const double d = demand_at(s, 45 * u(rng) - 2);
    violations += !(d >= 0.0 && d <= s.cap_mbps);
  }
  ok &= violations == 0;
  detail += "Poisson gap CV " + fmt("%.3f", cv) + ", clamp violations " +
            std::to_string(violations) + "/10000";
  return {ok, detail};
}

struct SeedTriple {
  std::uint64_t fl, traffic, dataset;
};
const SeedTriple kTriples[] = {{7, 11, 7}, {8, 21, 8}, {9, 31, 9}};

ExperimentConfig congestion_config(const char* scenario, const SeedTriple& s) {
  auto cfg = load_config(kConfigs / "congestion" / scenario);
  cfg.fl.seed = s.fl;
  cfg.fl.dataset.seed = s.dataset;
  for (auto& t : cfg.net.traffic) t.seed = s.traffic;
  return cfg;
}

std::pair<double, double> max_s2c_mean_var(const ExperimentResult& r) {
  std::vector<double> v;
  for (const auto& round : r.rounds) {
    double m = 0.0;
    for (const auto& t : round.timings) m = std::max(m, t.s2c_s);
    v.push_back(m);
  }
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, var / v.size()};
}

// Learning must not see the network: keep these for the decomposition check.
std::vector<std::vector<ExperimentResult>> g_congestion_runs;

Outcome congestion_shape() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& s : kTriples) {
    std::vector<ExperimentResult> runs;
    for (const char* scenario : {"none", "poisson", "sinewave"})
      runs.push_back(run_experiment(congestion_config(scenario, s)));
    const auto [m0, v0] = max_s2c_mean_var(runs[0]);
    const auto [mp, vp] = max_s2c_mean_var(runs[1]);
    const auto [ms, vs] = max_s2c_mean_var(runs[2]);
    const bool pass = mp > m0 && ms > m0 && vp > vs;
    ok &= pass;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "seeds(%llu,%llu,%llu): mean none %.4f poisson %.4f sine %.4f, var poisson "
                  "%.2e sine %.2e%s; ",
                  static_cast<unsigned long long>(s.fl),
                  static_cast<unsigned long long>(s.traffic),
                  static_cast<unsigned long long>(s.dataset), m0, mp, ms, vp, vs,
                  pass ? "" : " FAIL");
    detail += buf;
    g_congestion_runs.push_back(runs);
    for (auto& r : runs) record(std::move(r));
  }
  const double dt = seconds_since(t0);
  ok &= dt < 60.0;
  return {ok, detail + fmt("%.1f", dt) + " s"};
}

Outcome noniid_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto base = load_config(kConfigs / "noniid" / "iid_fedprox");
    auto& fl = base.fl;
    fl.n_clients = 15;
    fl.rounds = 30;
    fl.clients_per_round_fraction = 0.1;
    fl.aggregator = fl::FedAvgSpec{};
    fl.train = fl::TrainConfig{20, 10, 0.5, 0.0};
    fl.model = fl::ModelSpec{};
    fl.dataset = fl::DatasetSpec{3000, 1000, 10, 32, 3.0, seed};
    fl.seed = seed;

    auto iid_cfg = base;
    iid_cfg.fl.partition = fl::IidPartition{};
    auto shard_cfg = base;
    shard_cfg.fl.partition = fl::ShardPartition{2};

    const auto& iid = record(run_experiment(iid_cfg));
    const auto& shards = record(run_experiment(shard_cfg));
    const double a_iid = iid.rounds.back().global_accuracy;
    const double a_shard = shards.rounds.back().global_accuracy;

    // Same number of passes over the data as the federated run made in total.
    std::size_t samples_seen = 0;
    const auto [train, test] = fl::make_train_test(fl.dataset);
    const auto parts = fl::partition(train, fl::IidPartition{}, fl.n_clients, fl.seed);
    const auto clients = resolve_topology(base.net).hosts_with_role(NodeRole::Client);
    for (const auto& r : iid.rounds)
      for (const auto& c : r.selected) {
        const auto k = std::find(clients.begin(), clients.end(), c) - clients.begin();
        samples_seen += parts.assignments[k].size() * fl.train.local_epochs;
      }
    const int epochs = static_cast<int>(std::lround(double(samples_seen) / train.size()));
    const double a_central =
        oracle::centralized_sgd_accuracy(train, test, epochs, fl.train.batch_size, fl.train.lr, seed);

    const bool pass = a_iid - a_shard >= 0.05 && a_central - a_iid <= 0.05;
    ok &= pass;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "seed %llu: iid %.3f shards %.3f (gap %.1f pts), centralized %.3f over %d "
                  "epochs%s; ",
                  static_cast<unsigned long long>(seed), a_iid, a_shard,
                  100 * (a_iid - a_shard), a_central, epochs, pass ? "" : " FAIL");
    detail += buf;
  }
  const double dt = seconds_since(t0);
  ok &= dt < 120.0;
  return {ok, detail + fmt("%.1f", dt) + " s"};
}

Outcome decomposition_identity() {
  std::size_t rounds = 0;
  double worst = 0.0;
  bool nonneg = true;
  for (const auto& run : g_runs)
    for (const auto& r : run.rounds) {
      double span = 0.0;
      for (const auto& t : r.timings) {
        span = std::max(span, t.span_s());
        nonneg &= t.s2c_s >= 0 && t.compute_s >= 0 && t.c2s_s >= 0;
      }
      worst = std::max(worst, std::abs(span - r.round_duration_s));
      ++rounds;
    }
  std::size_t compared = 0, mismatched = 0;
  for (const auto& triple : g_congestion_runs)
    for (std::size_t k = 1; k < triple.size(); ++k)
      for (std::size_t i = 0; i < triple[0].rounds.size(); ++i) {
        ++compared;
        const auto& a = triple[0].rounds[i];
        const auto& b = triple[k].rounds[i];
        // bitwise, not approximate
        if (std::memcmp(&a.global_loss, &b.global_loss, sizeof(double)) != 0 ||
            std::memcmp(&a.global_accuracy, &b.global_accuracy, sizeof(double)) != 0)
          ++mismatched;
      }
  const bool ok = rounds > 0 && worst <= 1e-9 && nonneg && compared > 0 && mismatched == 0;
  return {ok, std::to_string(g_runs.size()) + " runs / " + std::to_string(rounds) +
                  " rounds, max |duration - max span| " + fmt("%.2g", worst) + " s; " +
                  std::to_string(compared) + " traffic-on/off round pairs, " +
                  std::to_string(mismatched) + " learning mismatches"};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + FLOWFED_CLI + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kCsvs[] = {kRoundsCsv, kSysCsv, kNetCsv, kTrafficCsv};

Outcome cli_determinism() {
  const auto a = scratch_dir("accept_det_a");
  const auto b = scratch_dir("accept_det_b");
  const auto cfg = (kConfigs / "congestion" / "poisson").string();
  const int ra = run_cli("run '" + cfg + "' --out '" + a.string() + "'");
  const int rb = run_cli("run '" + cfg + "' --out '" + b.string() + "'");
  if (ra != 0 || rb != 0)
    return {false, "cli exit codes " + std::to_string(ra) + ", " + std::to_string(rb)};
  std::size_t bytes = 0;
  for (const char* f : kCsvs) {
    const auto x = oracle::read_file((a / f).string());
    if (x != oracle::read_file((b / f).string())) return {false, std::string(f) + " differs"};
    bytes += x.size();
  }
  return {true, "4 CSVs byte-identical across two CLI runs (" + std::to_string(bytes) + " bytes)"};
}

Outcome stream_protocol() {
  // Dense sampling so the stream carries far more than the socket buffers
  // can hold for a subscriber that never reads.
  auto cfg = load_config(kConfigs / "congestion" / "poisson");
  cfg.fl.rounds = 10;
  cfg.general.metric_sample_period_s = 0.005;
  cfg.general.logfile.reset();

  const auto plain_dir = scratch_dir("accept_stream_plain");
  RunOptions plain;
  plain.out_dir = plain_dir;
  record(run_experiment(cfg, plain));

  auto streamed = cfg;
  streamed.general.stream = StreamSink{"127.0.0.1:0", 256};
  const auto stream_dir = scratch_dir("accept_stream_live");
  std::unique_ptr<TestSubscriber> live, stalled;
  std::thread reader;
  RunOptions opts;
  opts.out_dir = stream_dir;
  opts.wait_for_subscribers = 2;
  opts.on_stream_bound = [&](int port) {
    live = std::make_unique<TestSubscriber>(port);
    stalled = std::make_unique<TestSubscriber>(port, 1024);
    reader = std::thread([&] { live->read_all(); });
  };
  const auto& res = record(run_experiment(streamed, opts));
  if (reader.joinable()) reader.join();
  stalled.reset();
  if (!live) return {false, "stream never bound"};

  std::size_t rounds_msgs = 0, drop_reports = 0, expected_rows = 0;
  for (const auto& m : live->messages()) {
    rounds_msgs += m.topic == "fl.round";
    drop_reports += m.topic == "log" && m.body["payload"].value("event", "") == "stream_drops";
  }
  for (const auto& r : res.rounds) expected_rows += r.selected.size();

  bool same = true;
  for (const char* f : kCsvs)
    same &= oracle::read_file((plain_dir / f).string()) ==
            oracle::read_file((stream_dir / f).string());

  const bool ok = live->lines() > 0 && live->bad() == 0 && rounds_msgs == expected_rows &&
                  drop_reports > 0 && same;
  return {ok, std::to_string(live->messages().size()) + "/" + std::to_string(live->lines()) +
                  " lines parsed, " + std::to_string(rounds_msgs) + "/" +
                  std::to_string(expected_rows) + " fl.round messages, " +
                  std::to_string(drop_reports) + " drop reports from the stalled subscriber, " +
                  "CSVs " + (same ? "identical" : "DIFFERENT") + " to a stream-less run"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "max-min oracle equivalence", maxmin_oracle},
      {2, "transfer arithmetic", transfer_arithmetic},
      {3, "partitioner suite", partitioner_suite},
      {4, "aggregator algebra", aggregator_algebra},
      {5, "gradient checks", gradient_checks},
      {6, "traffic statistics", traffic_statistics},
      {7, "congestion raises and spreads S2C latency", congestion_shape},
      {8, "IID beats label shards; IID near centralized", noniid_direction},
      {9, "round decomposition and learning/network decoupling", decomposition_identity},
      {10, "end-to-end determinism", cli_determinism},
      {11, "stream protocol", stream_protocol},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] criterion %2d: %s -- %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
