#include "flowfed/flowfed.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "flowfed/config.hpp"
#include "flowfed/orchestrator.hpp"
#include "flowfed/report.hpp"

struct flowfed_config {
  flowfed::ExperimentConfig cfg;
};

struct flowfed_result {
  flowfed::ExperimentResult result;
};

namespace {

thread_local std::string g_last_error;

flowfed_status status_of(flowfed::ErrorCode code) {
  using flowfed::ErrorCode;
  switch (code) {
    case ErrorCode::MissingFile: return FLOWFED_ERR_MISSING_FILE;
    case ErrorCode::Parse: return FLOWFED_ERR_PARSE;
    case ErrorCode::Validation: return FLOWFED_ERR_VALIDATION;
    case ErrorCode::Schema: return FLOWFED_ERR_SCHEMA;
    case ErrorCode::DisconnectedGraph:
    case ErrorCode::DuplicateLink:
    case ErrorCode::InvalidCount:
    case ErrorCode::NoPath: return FLOWFED_ERR_TOPOLOGY;
    case ErrorCode::StalledSimulation:
    case ErrorCode::TraceFormat:
    case ErrorCode::NonMonotonicTime: return FLOWFED_ERR_SIMULATION;
    case ErrorCode::NumericalDivergence:
    case ErrorCode::ShapeMismatch: return FLOWFED_ERR_NUMERIC;
    case ErrorCode::InvalidArgs: return FLOWFED_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return FLOWFED_ERR_IO;
    case ErrorCode::Bind: return FLOWFED_ERR_BIND;
  }
  return FLOWFED_ERR_INTERNAL;
}

template <class F>
flowfed_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return FLOWFED_OK;
  } catch (const flowfed::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return FLOWFED_ERR_INTERNAL;
}

flowfed_status invalid(const char* what) {
  g_last_error = what;
  return FLOWFED_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::string describe(const flowfed::ExperimentConfig& cfg) {
  using namespace flowfed;
  const Topology topo = resolve_topology(cfg.net);
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "nodes: %zu  links: %zu\n", topo.nodes().size(),
                topo.links().size());
  out += buf;
  out += "\nnodes\n";
  for (const auto& [id, n] : topo.nodes()) {
    if (n.kind == NodeKind::Switch) {
      std::snprintf(buf, sizeof buf, "  %-12s switch\n", id.c_str());
    } else {
      std::snprintf(buf, sizeof buf, "  %-12s host  %-8s cpu=%g mem_mb=%g\n", id.c_str(),
                    to_string(n.role), n.resources->cpu_units, n.resources->mem_mb);
    }
    out += buf;
  }
  out += "\nlinks\n";
  for (const auto& l : topo.links()) {
    std::snprintf(buf, sizeof buf, "  %-12s %-12s bw=%gMbps delay=%gms loss=%g\n", l.a.c_str(),
                  l.b.c_str(), l.attrs.bandwidth_mbps, l.attrs.delay_ms, l.attrs.loss_frac);
    out += buf;
  }
  const auto& server = cfg.net.server_node;
  out += "\npaths from " + server + "\n";
  std::snprintf(buf, sizeof buf, "  %-12s %5s %12s  %s\n", "client", "hops", "delay_ms", "route");
  out += buf;
  for (const auto& c : topo.hosts_with_role(NodeRole::Client)) {
    if (!topo.contains(server)) break;
    const Route r = shortest_route(topo, server, c);
    std::string hops;
    for (const auto& n : r.nodes) hops += (hops.empty() ? "" : " > ") + n;
    std::snprintf(buf, sizeof buf, "  %-12s %5zu %12g  %s\n", c.c_str(), r.hops(),
                  path_delay_s(topo, r) * 1e3, hops.c_str());
    out += buf;
  }
  return out;
}

}  // namespace

extern "C" {

const char* flowfed_version(void) { return "0.1.0"; }

const char* flowfed_last_error(void) { return g_last_error.c_str(); }

flowfed_status flowfed_config_default(flowfed_config** out) {
  if (!out) return invalid("out is NULL");
  return guarded([&] { *out = new flowfed_config{flowfed::default_config()}; });
}

flowfed_status flowfed_config_load(const char* dir, int allow_defaults, flowfed_config** out) {
  if (!dir || !out) return invalid("dir and out must be non-NULL");
  return guarded(
      [&] { *out = new flowfed_config{flowfed::load_config(dir, allow_defaults != 0)}; });
}

void flowfed_config_free(flowfed_config* cfg) { delete cfg; }

flowfed_status flowfed_config_set_seed(flowfed_config* cfg, uint64_t seed) {
  if (!cfg) return invalid("cfg is NULL");
  if (seed > static_cast<uint64_t>(INT64_MAX)) return invalid("seed must be < 2^63");
  cfg->cfg.fl.seed = seed;
  return FLOWFED_OK;
}

uint64_t flowfed_config_seed(const flowfed_config* cfg) { return cfg ? cfg->cfg.fl.seed : 0; }

flowfed_status flowfed_config_write(const flowfed_config* cfg, const char* dir) {
  if (!cfg || !dir) return invalid("cfg and dir must be non-NULL");
  return guarded([&] { flowfed::write_config(cfg->cfg, dir); });
}

flowfed_status flowfed_topology_describe(const flowfed_config* cfg, char** out_text) {
  if (!cfg || !out_text) return invalid("cfg and out_text must be non-NULL");
  return guarded([&] { *out_text = dup_string(describe(cfg->cfg)); });
}

flowfed_status flowfed_run(const flowfed_config* cfg, const char* out_dir,
                           flowfed_round_callback callback, void* user, flowfed_result** out) {
  if (!cfg || !out) return invalid("cfg and out must be non-NULL");
  return guarded([&] {
    flowfed::RunOptions opts;
    if (out_dir) opts.out_dir = out_dir;
    if (callback) {
      opts.on_round = [&](const flowfed::RoundRecord& r) {
        flowfed_round_info info{};
        info.round = r.round;
        info.n_selected = r.selected.size();
        info.start_s = r.start_s;
        info.duration_s = r.round_duration_s;
        for (const auto& t : r.timings) info.max_s2c_s = std::max(info.max_s2c_s, t.s2c_s);
        info.global_loss = r.global_loss;
        info.global_accuracy = r.global_accuracy;
        callback(&info, user);
      };
    }
    *out = new flowfed_result{flowfed::run_experiment(cfg->cfg, opts)};
  });
}

size_t flowfed_result_round_count(const flowfed_result* res) {
  return res ? res->result.rounds.size() : 0;
}

flowfed_status flowfed_result_round(const flowfed_result* res, size_t index,
                                    flowfed_round_info* out) {
  if (!res || !out) return invalid("res and out must be non-NULL");
  if (index >= res->result.rounds.size()) return invalid("round index out of range");
  const auto& r = res->result.rounds[index];
  *out = flowfed_round_info{};
  out->round = r.round;
  out->n_selected = r.selected.size();
  out->start_s = r.start_s;
  out->duration_s = r.round_duration_s;
  for (const auto& t : r.timings) out->max_s2c_s = std::max(out->max_s2c_s, t.s2c_s);
  out->global_loss = r.global_loss;
  out->global_accuracy = r.global_accuracy;
  return FLOWFED_OK;
}

double flowfed_result_end_time(const flowfed_result* res) {
  return res ? res->result.end_time_s : 0.0;
}

void flowfed_result_free(flowfed_result* res) { delete res; }

flowfed_status flowfed_report(const char* csv_dir, char** out_text) {
  if (!csv_dir || !out_text) return invalid("csv_dir and out_text must be non-NULL");
  return guarded([&] {
    const std::filesystem::path dir(csv_dir);
    const auto summary = flowfed::summarize(dir);
    std::ofstream json(dir / "report.json", std::ios::binary | std::ios::trunc);
    if (!json) throw flowfed::Error(flowfed::ErrorCode::Io, "cannot write report.json");
    json << flowfed::report_json(summary);
    *out_text = dup_string(flowfed::report_text(summary));
  });
}

void flowfed_string_free(char* s) { std::free(s); }

}  // extern "C"
