// flowfed command-line front end. Links only the C API.
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flowfed/flowfed.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

bool is_config_error(flowfed_status s) {
  switch (s) {
    case FLOWFED_ERR_MISSING_FILE:
    case FLOWFED_ERR_PARSE:
    case FLOWFED_ERR_VALIDATION:
    case FLOWFED_ERR_SCHEMA:
    case FLOWFED_ERR_TOPOLOGY:
      return true;
    default:
      return false;
  }
}

int fail(const char* stage, flowfed_status s, bool config_stage) {
  std::fprintf(stderr, "flowfed: %s failed:\n%s\n", stage, flowfed_last_error());
  return config_stage && is_config_error(s) ? kExitConfig : kExitRuntime;
}

struct Loaded {
  flowfed_config* cfg = nullptr;
  ~Loaded() { flowfed_config_free(cfg); }
};

int load(const std::string& dir, bool defaults, Loaded& out) {
  const auto s = flowfed_config_load(dir.c_str(), defaults ? 1 : 0, &out.cfg);
  if (s == FLOWFED_OK) return kExitOk;
  return fail("loading config", s, true);
}

void print_round(const flowfed_round_info* r, void*) {
  std::printf("round %3d  clients %zu  duration %.6g s  max_s2c %.6g s  loss %.6g  acc %.4f\n",
              r->round, r->n_selected, r->duration_s, r->max_s2c_s, r->global_loss,
              r->global_accuracy);
  std::fflush(stdout);
}

int cmd_run(const std::string& dir, bool defaults, const std::optional<uint64_t>& seed,
            const std::string& out_dir) {
  Loaded cfg;
  if (int rc = load(dir, defaults, cfg)) return rc;
  if (seed) {
    if (auto s = flowfed_config_set_seed(cfg.cfg, *seed); s != FLOWFED_OK) {
      fail("setting seed", s, false);
      return kExitConfig;  // out-of-range seed is a usage error
    }
  }
  flowfed_result* res = nullptr;
  const auto s = flowfed_run(cfg.cfg, out_dir.c_str(), print_round, nullptr, &res);
  if (s != FLOWFED_OK) return fail("run", s, false);
  std::printf("finished %zu rounds at t=%.6g s; outputs in %s\n", flowfed_result_round_count(res),
              flowfed_result_end_time(res), out_dir.c_str());
  flowfed_result_free(res);
  return kExitOk;
}

int cmd_validate(const std::string& dir, bool defaults) {
  Loaded cfg;
  if (int rc = load(dir, defaults, cfg)) return rc;
  std::printf("config OK\n");
  return kExitOk;
}

int cmd_topo(const std::string& dir, bool defaults) {
  Loaded cfg;
  if (int rc = load(dir, defaults, cfg)) return rc;
  char* text = nullptr;
  const auto s = flowfed_topology_describe(cfg.cfg, &text);
  if (s != FLOWFED_OK) return fail("topology", s, true);
  std::fputs(text, stdout);
  flowfed_string_free(text);
  return kExitOk;
}

int cmd_report(const std::string& dir) {
  char* text = nullptr;
  const auto s = flowfed_report(dir.c_str(), &text);
  if (s != FLOWFED_OK) return fail("report", s, false);
  std::fputs(text, stdout);
  flowfed_string_free(text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowfed: federated learning over a simulated network"};
  app.require_subcommand(1, 1);

  std::string config_dir = ".";
  bool defaults = false;
  std::optional<uint64_t> seed;
  std::string out_dir = "out";
  std::string csv_dir = ".";

  auto* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("config_dir", config_dir, "Directory holding fl.toml, net.toml, general.toml");
  run->add_flag("--defaults", defaults, "Fall back to built-in defaults for missing files");
  run->add_option("--seed", seed, "Override fl.seed");
  run->add_option("--out", out_dir, "Output directory for all sinks");

  auto* validate = app.add_subcommand("validate", "Load and cross-validate a config");
  validate->add_option("config_dir", config_dir);
  validate->add_flag("--defaults", defaults);

  auto* topo = app.add_subcommand("topo", "Describe the configured topology");
  topo->add_option("config_dir", config_dir);
  topo->add_flag("--defaults", defaults);

  auto* report = app.add_subcommand("report", "Summarize a CSV archive");
  report->add_option("csv_dir", csv_dir, "Directory containing rounds.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (*run) return cmd_run(config_dir, defaults, seed, out_dir);
  if (*validate) return cmd_validate(config_dir, defaults);
  if (*topo) return cmd_topo(config_dir, defaults);
  return cmd_report(csv_dir);
}
