#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flowfed/config.hpp"
#include "flowfed/fl/model.hpp"

namespace flowfed {

struct ClientRoundTiming {
  NodeId client_id;
  double s2c_s = 0.0;
  double compute_s = 0.0;
  double c2s_s = 0.0;
  double span_s() const noexcept { return s2c_s + compute_s + c2s_s; }
};

struct RoundRecord {
  int round = 0;
  double start_s = 0.0;
  std::vector<NodeId> selected;             // ascending
  std::vector<ClientRoundTiming> timings;   // same order as selected
  double round_duration_s = 0.0;
  double global_loss = 0.0;
  double global_accuracy = 0.0;
};

struct ExperimentResult {
  std::vector<RoundRecord> rounds;
  fl::ModelParams final_params;
  double end_time_s = 0.0;
};

struct RunOptions {
  /// Root for CSV / logfile sinks. Empty disables file sinks entirely.
  std::filesystem::path out_dir;
  /// Called once the stream publisher is listening, with its port.
  std::function<void(int port)> on_stream_bound;
  /// Block (up to 5 s) for this many stream subscribers before simulating.
  std::size_t wait_for_subscribers = 0;
  std::function<void(const RoundRecord&)> on_round;
};

/// local_epochs × n_samples × work_per_sample_s / cpu_units.
double compute_time_s(const ComputeModel& model, int local_epochs, std::size_t n_samples,
                      double cpu_units);

struct ComputeWindow {
  double start_s = 0.0;
  double end_s = 0.0;
  double mem_mb = 0.0;  // resident estimate while computing
};

struct SystemSample {
  double cpu_pct = 0.0;
  double mem_mb = 0.0;
};

inline constexpr double kIdleCpuPct = 2.0;
inline constexpr double kBusyCpuPct = 100.0;
inline constexpr double kIdleMemMb = 64.0;

/// cpu 100 inside [start, end) of any window, 2 otherwise; memory is the
/// idle baseline plus the window's estimate while computing.
SystemSample synthesize_system_metrics(const std::vector<ComputeWindow>& windows, double t);

/// Resolves the topology, partitions the data, injects background traffic
/// and runs every round. Deterministic in cfg. Errors carry round/client
/// context in their message and keep their ErrorCode.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

}  // namespace flowfed
