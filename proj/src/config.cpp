#include "flowfed/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace flowfed {

namespace fs = std::filesystem;

ExperimentConfig default_config() { return ExperimentConfig{}; }

namespace {

std::string line_of(const toml::node& node) {
  const auto& src = node.source();
  return src.begin ? std::to_string(src.begin.line) : std::string("?");
}

// Reads one TOML table, remembering which keys were consumed so the rest can
// be reported as unknown.
class TableReader {
 public:
  TableReader(const toml::table* table, std::string file, std::string prefix,
              std::vector<Violation>& out)
      : table_(table), file_(std::move(file)), prefix_(std::move(prefix)), out_(out) {}

  bool present() const { return table_ != nullptr; }
  bool has(std::string_view key) const { return table_ && table_->contains(key); }

  void get(std::string_view key, double& dst) {
    const auto* node = take(key);
    if (!node) return;
    if (auto v = node->value<double>(); v && (node->is_floating_point() || node->is_integer()))
      dst = *v;
    else
      type_error(key, *node, "a number");
  }

  void get(std::string_view key, bool& dst) {
    const auto* node = take(key);
    if (!node) return;
    if (auto v = node->value_exact<bool>())
      dst = *v;
    else
      type_error(key, *node, "a boolean");
  }

  void get(std::string_view key, std::string& dst) {
    const auto* node = take(key);
    if (!node) return;
    if (auto v = node->value_exact<std::string>())
      dst = *v;
    else
      type_error(key, *node, "a string");
  }

  template <class Int>
    requires std::is_integral_v<Int>
  void get(std::string_view key, Int& dst) {
    const auto* node = take(key);
    if (!node) return;
    auto v = node->value_exact<std::int64_t>();
    if (!v) {
      type_error(key, *node, "an integer");
      return;
    }
    if (*v < static_cast<std::int64_t>(std::numeric_limits<Int>::min()) ||
        static_cast<std::uint64_t>(*v) > static_cast<std::uint64_t>(std::numeric_limits<Int>::max()) ||
        (std::is_unsigned_v<Int> && *v < 0)) {
      out_.push_back({path(key), "out of range (" + file_ + ":" + line_of(*node) + ")"});
      return;
    }
    dst = static_cast<Int>(*v);
  }

  TableReader sub(std::string_view key) {
    const auto* node = take(key);
    if (!node) return TableReader(nullptr, file_, path(key), out_);
    if (!node->is_table()) {
      type_error(key, *node, "a table");
      return TableReader(nullptr, file_, path(key), out_);
    }
    return TableReader(node->as_table(), file_, path(key), out_);
  }

  /// Keys of a table whose entries are themselves tables (e.g. [traffic.x]).
  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    if (table_)
      for (const auto& [k, _] : *table_) out.emplace_back(k.str());
    return out;
  }

  void finish() {
    if (!table_) return;
    for (const auto& [k, node] : *table_)
      if (!seen_.count(std::string(k.str())))
        out_.push_back({path(k.str()), "unknown key (" + file_ + ":" + line_of(node) + ")"});
  }

  void error(std::string_view key, const std::string& msg) {
    out_.push_back({path(key), msg});
  }

 private:
  const toml::node* take(std::string_view key) {
    if (!table_) return nullptr;
    seen_.insert(std::string(key));
    return table_->get(key);
  }

  void type_error(std::string_view key, const toml::node& node, const char* expected) {
    out_.push_back({path(key), std::string("expected ") + expected + " (" + file_ + ":" +
                                   line_of(node) + ")"});
  }

  std::string path(std::string_view key) const {
    return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
  }

  const toml::table* table_;
  std::string file_;
  std::string prefix_;
  std::vector<Violation>& out_;
  std::set<std::string> seen_;
};

toml::table parse_toml(const std::string& text, const std::string& file) {
  try {
    return toml::parse(text, file);
  } catch (const toml::parse_error& e) {
    const auto& src = e.source();
    throw ParseError(file, src.begin ? static_cast<std::int64_t>(src.begin.line) : 0, "",
                     std::string(e.description()));
  }
}

std::string resolve_path(const std::string& p, const fs::path& base) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal().string();
}

void read_fl(TableReader r, FlConfig& fl) {
  r.get("n_clients", fl.n_clients);
  r.get("rounds", fl.rounds);
  r.get("clients_per_round_fraction", fl.clients_per_round_fraction);
  r.get("seed", fl.seed);

  if (auto s = r.sub("selection"); s.present()) {
    std::string strategy = "random";
    s.get("strategy", strategy);
    if (strategy == "random") {
      fl.selection = fl::RandomSelection{};
    } else if (strategy == "resource_aware") {
      fl::ResourceAwareSelection ra;
      s.get("top_k_by_cpu", ra.top_k_by_cpu);
      fl.selection = ra;
    } else {
      s.error("strategy", "unknown strategy '" + strategy + "' (random, resource_aware)");
    }
    s.finish();
  }

  if (auto a = r.sub("aggregator"); a.present()) {
    std::string kind = "fedavg";
    a.get("kind", kind);
    if (kind == "fedavg") {
      fl.aggregator = fl::FedAvgSpec{};
    } else if (kind == "fedavgm") {
      fl::FedAvgMSpec m;
      a.get("server_lr", m.server_lr);
      a.get("beta", m.beta);
      fl.aggregator = m;
    } else if (kind == "fedyogi") {
      fl::FedYogiSpec y;
      a.get("eta", y.eta);
      a.get("beta1", y.beta1);
      a.get("beta2", y.beta2);
      a.get("tau", y.tau);
      fl.aggregator = y;
    } else {
      a.error("kind", "unknown aggregator '" + kind + "' (fedavg, fedavgm, fedyogi)");
    }
    a.finish();
  }

  if (auto t = r.sub("train"); t.present()) {
    t.get("local_epochs", fl.train.local_epochs);
    t.get("batch_size", fl.train.batch_size);
    t.get("lr", fl.train.lr);
    t.get("mu", fl.train.mu);
    t.finish();
  }

  if (auto m = r.sub("model"); m.present()) {
    std::string kind = "logistic";
    m.get("kind", kind);
    if (kind == "logistic") {
      fl.model.kind = fl::ModelKind::Logistic;
    } else if (kind == "mlp") {
      fl.model.kind = fl::ModelKind::Mlp;
      m.get("hidden", fl.model.hidden);
    } else {
      m.error("kind", "unknown model '" + kind + "' (logistic, mlp)");
    }
    m.finish();
  }

  if (auto d = r.sub("dataset"); d.present()) {
    d.get("n_train", fl.dataset.n_train);
    d.get("n_test", fl.dataset.n_test);
    d.get("n_classes", fl.dataset.n_classes);
    d.get("dim", fl.dataset.dim);
    d.get("class_sep", fl.dataset.class_sep);
    d.get("seed", fl.dataset.seed);
    d.finish();
  }

  if (auto p = r.sub("partition"); p.present()) {
    std::string kind = "iid";
    p.get("kind", kind);
    if (kind == "iid") {
      fl.partition = fl::IidPartition{};
    } else if (kind == "shards") {
      fl::ShardPartition s;
      p.get("classes_per_client", s.classes_per_client);
      fl.partition = s;
    } else if (kind == "dirichlet") {
      fl::DirichletPartition d;
      p.get("alpha", d.alpha);
      fl.partition = d;
    } else {
      p.error("kind", "unknown partition '" + kind + "' (iid, shards, dirichlet)");
    }
    p.finish();
  }

  if (auto c = r.sub("compute"); c.present()) {
    c.get("work_per_sample_s", fl.compute.work_per_sample_s);
    c.finish();
  }
  r.finish();
}

void read_pattern(TableReader& t, const std::string& kind, TrafficFlowSpec& spec) {
  if (kind == "poisson") {
    PoissonPattern p;
    t.get("lambda_events_per_s", p.lambda_events_per_s);
    t.get("event_bytes", p.event_bytes);
    spec.pattern = p;
  } else if (kind == "bursty") {
    BurstyPattern p;
    t.get("burst_rate_mbps", p.burst_rate_mbps);
    t.get("burst_s", p.burst_s);
    t.get("idle_s", p.idle_s);
    spec.pattern = p;
  } else if (kind == "uniform") {
    UniformPattern p;
    t.get("rate_mbps", p.rate_mbps);
    spec.pattern = p;
  } else if (kind == "normal") {
    NormalPattern p;
    t.get("mean_mbps", p.mean_mbps);
    t.get("std_mbps", p.std_mbps);
    t.get("step_s", p.step_s);
    spec.pattern = p;
  } else if (kind == "sinewave") {
    SineWavePattern p;
    t.get("base_mbps", p.base_mbps);
    t.get("amplitude_mbps", p.amplitude_mbps);
    t.get("period_s", p.period_s);
    spec.pattern = p;
  } else if (kind == "trace") {
    TraceReplayPattern p;
    t.get("trace", p.trace_path);
    t.get("time_scale", p.time_scale);
    spec.pattern = p;
  } else {
    t.error("pattern",
            "unknown pattern '" + kind + "' (poisson, bursty, uniform, normal, sinewave, trace)");
  }
}

void read_net(TableReader r, NetConfig& net, const fs::path& base) {
  r.get("server_node", net.server_node);
  if (auto t = r.sub("topology"); t.present()) {
    std::string source = "generated";
    t.get("source", source);
    if (source == "generated") {
      GeneratedSource g;
      std::string shape = to_string(g.shape);
      t.get("shape", shape);
      if (auto s = parse_topology_shape(shape))
        g.shape = *s;
      else
        t.error("shape", "unknown shape '" + shape + "' (star, full_mesh, line)");
      t.get("n_hosts", g.n_hosts);
      net.topology = g;
    } else if (source == "topohub_json" || source == "graphml") {
      std::string path;
      t.get("path", path);
      if (path.empty()) t.error("path", "required for source '" + source + "'");
      path = resolve_path(path, base);
      if (source == "graphml")
        net.topology = GraphMLSource{path};
      else
        net.topology = TopohubJsonSource{path};
    } else {
      t.error("source", "unknown source '" + source + "' (generated, topohub_json, graphml)");
    }
    t.finish();
  }
  if (auto l = r.sub("default_link"); l.present()) {
    l.get("bandwidth_mbps", net.default_link.bandwidth_mbps);
    l.get("delay_ms", net.default_link.delay_ms);
    l.get("loss_frac", net.default_link.loss_frac);
    l.finish();
  }
  if (auto tr = r.sub("traffic"); tr.present()) {
    for (const auto& name : tr.keys()) {
      auto t = tr.sub(name);
      if (!t.present()) continue;
      TrafficFlowSpec spec;
      spec.name = name;
      t.get("src", spec.src);
      t.get("dst", spec.dst);
      t.get("cap_mbps", spec.cap_mbps);
      t.get("start_s", spec.start_s);
      t.get("stop_s", spec.stop_s);
      t.get("seed", spec.seed);
      std::string kind = "uniform";
      t.get("pattern", kind);
      read_pattern(t, kind, spec);
      if (auto* tp = std::get_if<TraceReplayPattern>(&spec.pattern))
        tp->trace_path = resolve_path(tp->trace_path, base);
      t.finish();
      net.traffic.push_back(std::move(spec));
    }
    tr.finish();
  }
  r.finish();
}

void read_general(TableReader r, GeneralConfig& g) {
  r.get("metric_sample_period_s", g.metric_sample_period_s);
  r.get("report", g.report);
  if (auto s = r.sub("sinks"); s.present()) {
    // An explicit [sinks] table lists exactly the enabled sinks.
    g.csv.reset();
    g.logfile.reset();
    g.stream.reset();
    if (auto c = s.sub("csv"); c.present()) {
      CsvSink sink;
      c.get("dir", sink.dir);
      c.finish();
      g.csv = sink;
    }
    if (auto l = s.sub("logfile"); l.present()) {
      LogfileSink sink;
      l.get("path", sink.path);
      l.finish();
      g.logfile = sink;
    }
    if (auto st = s.sub("stream"); st.present()) {
      StreamSink sink;
      st.get("bind", sink.bind);
      st.get("buffer_messages", sink.buffer_messages);
      st.finish();
      g.stream = sink;
    }
    s.finish();
  }
  r.finish();
}

bool escapes(const std::string& p) {
  fs::path path(p);
  if (path.is_absolute()) return true;
  for (const auto& part : path.lexically_normal()) {
    if (part == "..") return true;
  }
  return false;
}

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

ExperimentConfig parse_config(const std::optional<std::string>& fl_toml,
                              const std::optional<std::string>& net_toml,
                              const std::optional<std::string>& general_toml,
                              const fs::path& base_dir) {
  ExperimentConfig cfg = default_config();
  std::vector<Violation> violations;
  // Parse all three before reading so syntax errors surface first.
  std::optional<toml::table> fl_tbl, net_tbl, gen_tbl;
  if (fl_toml) fl_tbl = parse_toml(*fl_toml, kFlFile);
  if (net_toml) net_tbl = parse_toml(*net_toml, kNetFile);
  if (general_toml) gen_tbl = parse_toml(*general_toml, kGeneralFile);

  if (fl_tbl) read_fl(TableReader(&*fl_tbl, kFlFile, "fl", violations), cfg.fl);
  if (net_tbl) read_net(TableReader(&*net_tbl, kNetFile, "net", violations), cfg.net, base_dir);
  if (gen_tbl)
    read_general(TableReader(&*gen_tbl, kGeneralFile, "general", violations), cfg.general);

  if (!violations.empty()) {
    auto more = validate_fields(cfg);
    violations.insert(violations.end(), more.begin(), more.end());
    throw ValidationError(std::move(violations));
  }

  violations = validate_fields(cfg);
  // A bad default link or host count would only resurface as a topology
  // error; report the root cause once.
  const bool topo_inputs_ok = std::none_of(violations.begin(), violations.end(), [](const auto& v) {
    return v.path.starts_with("net.default_link") || v.path.starts_with("net.topology");
  });
  if (topo_inputs_ok) {
    try {
      violations = validate(cfg, resolve_topology(cfg.net));
    } catch (const Error& e) {
      violations.push_back({"net.topology", e.what()});
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return cfg;
}

ExperimentConfig load_config(const fs::path& dir, bool allow_defaults) {
  auto load = [&](const char* name) -> std::optional<std::string> {
    auto text = read_file(dir / name);
    if (!text && !allow_defaults) throw MissingFileError(name);
    return text;
  };
  auto fl = load(kFlFile);
  auto net = load(kNetFile);
  auto general = load(kGeneralFile);
  fs::path base = dir;
  if (base.is_relative()) base = fs::absolute(base);
  return parse_config(fl, net, general, base.lexically_normal());
}

Topology resolve_topology(const NetConfig& net) {
  auto read = [](const std::string& path) {
    auto text = read_file(path);
    if (!text) throw Error(ErrorCode::Io, "cannot read topology file " + path);
    return *text;
  };
  if (const auto* g = std::get_if<GeneratedSource>(&net.topology)) {
    auto topo = generate(g->shape, g->n_hosts, net.default_link);
    if (topo.contains(net.server_node) &&
        topo.node(net.server_node).kind == NodeKind::Host)
      topo = topo.with_role(net.server_node, NodeRole::Server);
    return topo;
  }
  if (const auto* j = std::get_if<TopohubJsonSource>(&net.topology))
    return parse_topohub_json(read(j->path), net.default_link);
  return parse_graphml(read(std::get<GraphMLSource>(net.topology).path), net.default_link);
}

std::vector<Violation> validate_fields(const ExperimentConfig& cfg) {
  std::vector<Violation> out;
  auto need = [&](bool ok, std::string path, std::string msg) {
    if (!ok) out.push_back({std::move(path), std::move(msg)});
  };
  auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  auto unit = [](double v) { return v >= 0.0 && v < 1.0; };

  const auto& fl = cfg.fl;
  need(fl.n_clients >= 1, "fl.n_clients", "must be >= 1");
  need(fl.rounds >= 1, "fl.rounds", "must be >= 1");
  need(fl.clients_per_round_fraction > 0.0 && fl.clients_per_round_fraction <= 1.0,
       "fl.clients_per_round_fraction",
       "must be in (0, 1], got " + std::to_string(fl.clients_per_round_fraction));
  need(fl.seed <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()),
       "fl.seed", "must fit in a signed 64-bit TOML integer");

  need(fl.train.local_epochs >= 1, "fl.train.local_epochs", "must be >= 1");
  need(fl.train.batch_size >= 1, "fl.train.batch_size", "must be >= 1");
  need(pos(fl.train.lr), "fl.train.lr", "must be > 0");
  need(nonneg(fl.train.mu), "fl.train.mu", "must be >= 0");
  need(fl.model.kind == fl::ModelKind::Logistic || fl.model.hidden >= 1, "fl.model.hidden",
       "must be >= 1");

  if (const auto* m = std::get_if<fl::FedAvgMSpec>(&fl.aggregator)) {
    need(pos(m->server_lr), "fl.aggregator.server_lr", "must be > 0");
    need(unit(m->beta), "fl.aggregator.beta", "must be in [0, 1)");
  } else if (const auto* y = std::get_if<fl::FedYogiSpec>(&fl.aggregator)) {
    need(pos(y->eta), "fl.aggregator.eta", "must be > 0");
    need(unit(y->beta1), "fl.aggregator.beta1", "must be in [0, 1)");
    need(unit(y->beta2), "fl.aggregator.beta2", "must be in [0, 1)");
    need(pos(y->tau), "fl.aggregator.tau", "must be > 0");
  }

  const auto& ds = fl.dataset;
  need(ds.n_classes >= 1, "fl.dataset.n_classes", "must be >= 1");
  need(ds.dim >= 2, "fl.dataset.dim", "must be >= 2");
  need(nonneg(ds.class_sep), "fl.dataset.class_sep", "must be >= 0");
  need(ds.n_test >= 1, "fl.dataset.n_test", "must be >= 1");
  need(ds.n_train >= static_cast<std::size_t>(std::max(ds.n_classes, 1)), "fl.dataset.n_train",
       "must be >= n_classes");
  need(ds.n_train >= static_cast<std::size_t>(std::max(fl.n_clients, 1)), "fl.dataset.n_train",
       "must be >= n_clients (every client needs a sample)");
  need(ds.seed <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()),
       "fl.dataset.seed", "must fit in a signed 64-bit TOML integer");

  if (const auto* s = std::get_if<fl::ShardPartition>(&fl.partition)) {
    if (s->classes_per_client < 1 || s->classes_per_client > ds.n_classes) {
      need(false, "fl.partition.classes_per_client", "must be in [1, n_classes]");
    } else if (ds.n_classes >= 1 && fl.n_clients >= 1) {
      const long total = static_cast<long>(fl.n_clients) * s->classes_per_client;
      const long per_class = total / ds.n_classes;
      need(total % ds.n_classes == 0, "fl.partition.classes_per_client",
           "n_clients * classes_per_client must be a multiple of n_classes");
      need(total % ds.n_classes != 0 ||
               static_cast<long>(ds.n_train / static_cast<std::size_t>(ds.n_classes)) >= per_class,
           "fl.partition.classes_per_client", "too few samples per class for the shard count");
    }
  } else if (const auto* d = std::get_if<fl::DirichletPartition>(&fl.partition)) {
    need(pos(d->alpha), "fl.partition.alpha", "must be > 0");
  }
  need(pos(fl.compute.work_per_sample_s), "fl.compute.work_per_sample_s", "must be > 0");

  const auto& net = cfg.net;
  if (const auto* g = std::get_if<GeneratedSource>(&net.topology))
    need(g->n_hosts >= 2, "net.topology.n_hosts", "must be >= 2");
  need(pos(net.default_link.bandwidth_mbps), "net.default_link.bandwidth_mbps", "must be > 0");
  need(nonneg(net.default_link.delay_ms), "net.default_link.delay_ms", "must be >= 0");
  need(unit(net.default_link.loss_frac), "net.default_link.loss_frac", "must be in [0, 1)");
  for (const auto& t : net.traffic) {
    auto v = validate_traffic(t, "net.traffic." + t.name);
    out.insert(out.end(), v.begin(), v.end());
    need(t.seed <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()),
         "net.traffic." + t.name + ".seed", "must fit in a signed 64-bit TOML integer");
  }

  const auto& g = cfg.general;
  need(g.csv || g.logfile || g.stream, "general.sinks", "at least one sink must be enabled");
  need(pos(g.metric_sample_period_s), "general.metric_sample_period_s", "must be > 0");
  if (g.csv) need(!escapes(g.csv->dir), "general.sinks.csv.dir",
                  "must be a relative path inside the output directory");
  if (g.logfile) need(!escapes(g.logfile->path) && !g.logfile->path.empty(),
                      "general.sinks.logfile.path",
                      "must be a relative path inside the output directory");
  if (g.stream) {
    const auto colon = g.stream->bind.rfind(':');
    need(colon != std::string::npos && colon > 0 && colon + 1 < g.stream->bind.size(),
         "general.sinks.stream.bind", "expected host:port");
    need(g.stream->buffer_messages >= 1, "general.sinks.stream.buffer_messages", "must be >= 1");
  }
  return out;
}

std::vector<Violation> validate(const ExperimentConfig& cfg, const Topology& topo) {
  auto out = validate_fields(cfg);
  const auto clients = topo.hosts_with_role(NodeRole::Client);
  if (static_cast<std::size_t>(cfg.fl.n_clients) != clients.size())
    out.push_back({"fl.n_clients vs topology client hosts",
                   "fl.n_clients = " + std::to_string(cfg.fl.n_clients) + " but topology has " +
                       std::to_string(clients.size()) + " client hosts"});
  const auto& server = cfg.net.server_node;
  if (!topo.contains(server)) {
    out.push_back({"net.server_node", "node '" + server + "' is not in the topology"});
  } else if (topo.node(server).kind != NodeKind::Host ||
             topo.node(server).role != NodeRole::Server) {
    out.push_back({"net.server_node", "node '" + server + "' is not a server host"});
  }
  for (const auto& t : cfg.net.traffic) {
    const std::string path = "net.traffic." + t.name;
    if (!topo.contains(t.src))
      out.push_back({path + ".src", "node '" + t.src + "' is not in the topology"});
    if (!topo.contains(t.dst))
      out.push_back({path + ".dst", "node '" + t.dst + "' is not in the topology"});
    if (topo.contains(t.src) && t.src == t.dst)
      out.push_back({path + ".dst", "must differ from src"});
  }
  return out;
}

namespace {

toml::table fl_table(const FlConfig& fl) {
  toml::table t;
  t.insert("n_clients", fl.n_clients);
  t.insert("rounds", fl.rounds);
  t.insert("clients_per_round_fraction", fl.clients_per_round_fraction);
  t.insert("seed", static_cast<std::int64_t>(fl.seed));

  toml::table sel;
  if (const auto* ra = std::get_if<fl::ResourceAwareSelection>(&fl.selection)) {
    sel.insert("strategy", "resource_aware");
    sel.insert("top_k_by_cpu", ra->top_k_by_cpu);
  } else {
    sel.insert("strategy", "random");
  }
  t.insert("selection", std::move(sel));

  toml::table agg;
  agg.insert("kind", fl::aggregator_name(fl.aggregator));
  if (const auto* m = std::get_if<fl::FedAvgMSpec>(&fl.aggregator)) {
    agg.insert("server_lr", m->server_lr);
    agg.insert("beta", m->beta);
  } else if (const auto* y = std::get_if<fl::FedYogiSpec>(&fl.aggregator)) {
    agg.insert("eta", y->eta);
    agg.insert("beta1", y->beta1);
    agg.insert("beta2", y->beta2);
    agg.insert("tau", y->tau);
  }
  t.insert("aggregator", std::move(agg));

  t.insert("train", toml::table{{"local_epochs", fl.train.local_epochs},
                                {"batch_size", static_cast<std::int64_t>(fl.train.batch_size)},
                                {"lr", fl.train.lr},
                                {"mu", fl.train.mu}});
  toml::table model;
  if (fl.model.kind == fl::ModelKind::Mlp) {
    model.insert("kind", "mlp");
    model.insert("hidden", static_cast<std::int64_t>(fl.model.hidden));
  } else {
    model.insert("kind", "logistic");
  }
  t.insert("model", std::move(model));
  t.insert("dataset", toml::table{{"n_train", static_cast<std::int64_t>(fl.dataset.n_train)},
                                  {"n_test", static_cast<std::int64_t>(fl.dataset.n_test)},
                                  {"n_classes", fl.dataset.n_classes},
                                  {"dim", static_cast<std::int64_t>(fl.dataset.dim)},
                                  {"class_sep", fl.dataset.class_sep},
                                  {"seed", static_cast<std::int64_t>(fl.dataset.seed)}});
  toml::table part;
  part.insert("kind", fl::partition_name(fl.partition));
  if (const auto* s = std::get_if<fl::ShardPartition>(&fl.partition))
    part.insert("classes_per_client", s->classes_per_client);
  if (const auto* d = std::get_if<fl::DirichletPartition>(&fl.partition))
    part.insert("alpha", d->alpha);
  t.insert("partition", std::move(part));
  t.insert("compute", toml::table{{"work_per_sample_s", fl.compute.work_per_sample_s}});
  return t;
}

toml::table net_table(const NetConfig& net) {
  toml::table t;
  t.insert("server_node", net.server_node);
  toml::table topo;
  if (const auto* g = std::get_if<GeneratedSource>(&net.topology)) {
    topo.insert("source", "generated");
    topo.insert("shape", to_string(g->shape));
    topo.insert("n_hosts", g->n_hosts);
  } else if (const auto* j = std::get_if<TopohubJsonSource>(&net.topology)) {
    topo.insert("source", "topohub_json");
    topo.insert("path", j->path);
  } else {
    topo.insert("source", "graphml");
    topo.insert("path", std::get<GraphMLSource>(net.topology).path);
  }
  t.insert("topology", std::move(topo));
  t.insert("default_link", toml::table{{"bandwidth_mbps", net.default_link.bandwidth_mbps},
                                       {"delay_ms", net.default_link.delay_ms},
                                       {"loss_frac", net.default_link.loss_frac}});
  if (!net.traffic.empty()) {
    toml::table traffic;
    for (const auto& f : net.traffic) {
      toml::table e{{"src", f.src},
                    {"dst", f.dst},
                    {"pattern", pattern_name(f.pattern)},
                    {"cap_mbps", f.cap_mbps},
                    {"start_s", f.start_s},
                    {"stop_s", f.stop_s},
                    {"seed", static_cast<std::int64_t>(f.seed)}};
      std::visit(
          [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PoissonPattern>) {
              e.insert("lambda_events_per_s", p.lambda_events_per_s);
              e.insert("event_bytes", p.event_bytes);
            } else if constexpr (std::is_same_v<T, BurstyPattern>) {
              e.insert("burst_rate_mbps", p.burst_rate_mbps);
              e.insert("burst_s", p.burst_s);
              e.insert("idle_s", p.idle_s);
            } else if constexpr (std::is_same_v<T, UniformPattern>) {
              e.insert("rate_mbps", p.rate_mbps);
            } else if constexpr (std::is_same_v<T, NormalPattern>) {
              e.insert("mean_mbps", p.mean_mbps);
              e.insert("std_mbps", p.std_mbps);
              e.insert("step_s", p.step_s);
            } else if constexpr (std::is_same_v<T, SineWavePattern>) {
              e.insert("base_mbps", p.base_mbps);
              e.insert("amplitude_mbps", p.amplitude_mbps);
              e.insert("period_s", p.period_s);
            } else {
              e.insert("trace", p.trace_path);
              e.insert("time_scale", p.time_scale);
            }
          },
          f.pattern);
      traffic.insert(f.name, std::move(e));
    }
    t.insert("traffic", std::move(traffic));
  }
  return t;
}

toml::table general_table(const GeneralConfig& g) {
  toml::table t;
  t.insert("metric_sample_period_s", g.metric_sample_period_s);
  t.insert("report", g.report);
  toml::table sinks;
  if (g.csv) sinks.insert("csv", toml::table{{"dir", g.csv->dir}});
  if (g.logfile) sinks.insert("logfile", toml::table{{"path", g.logfile->path}});
  if (g.stream)
    sinks.insert("stream",
                 toml::table{{"bind", g.stream->bind},
                             {"buffer_messages", static_cast<std::int64_t>(g.stream->buffer_messages)}});
  t.insert("sinks", std::move(sinks));
  return t;
}

std::string render(const toml::table& t) {
  std::ostringstream out;
  out << t << '\n';
  return out.str();
}

}  // namespace

ConfigText to_toml(const ExperimentConfig& cfg) {
  return ConfigText{render(fl_table(cfg.fl)), render(net_table(cfg.net)),
                    render(general_table(cfg.general))};
}

void write_config(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto text = to_toml(cfg);
  std::error_code ec;
  fs::create_directories(dir, ec);
  auto put = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / name).string());
    out << body;
  };
  put(kFlFile, text.fl);
  put(kNetFile, text.net);
  put(kGeneralFile, text.general);
}

}  // namespace flowfed
