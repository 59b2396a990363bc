#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowfed/error.hpp"
#include "flowfed/seed.hpp"
#include "flowfed/topology.hpp"

namespace flowfed {

// Background traffic rate processes. Stepped patterns are piecewise-constant;
// Poisson and trace replay are byte bursts drained at the flow's cap.

struct PoissonPattern {
  double lambda_events_per_s = 1.0;
  double event_bytes = 125000.0;
  bool operator==(const PoissonPattern&) const = default;
};

struct BurstyPattern {
  double burst_rate_mbps = 40.0;
  double burst_s = 1.0;
  double idle_s = 1.0;
  bool operator==(const BurstyPattern&) const = default;
};

struct UniformPattern {
  double rate_mbps = 10.0;
  bool operator==(const UniformPattern&) const = default;
};

struct NormalPattern {
  double mean_mbps = 20.0;
  double std_mbps = 5.0;
  double step_s = 0.1;
  bool operator==(const NormalPattern&) const = default;
};

struct SineWavePattern {
  double base_mbps = 25.0;
  double amplitude_mbps = 25.0;
  double period_s = 60.0;
  bool operator==(const SineWavePattern&) const = default;
};

struct TraceReplayPattern {
  std::string trace_path;
  double time_scale = 1.0;
  bool operator==(const TraceReplayPattern&) const = default;
};

using TrafficPatternSpec =
    std::variant<PoissonPattern, BurstyPattern, UniformPattern, NormalPattern,
                 SineWavePattern, TraceReplayPattern>;

const char* pattern_name(const TrafficPatternSpec& pattern) noexcept;

struct TrafficFlowSpec {
  std::string name;
  NodeId src;
  NodeId dst;
  TrafficPatternSpec pattern = UniformPattern{};
  double cap_mbps = 50.0;
  double start_s = 0.0;
  double stop_s = 1000.0;
  std::uint64_t seed = 1;
  bool operator==(const TrafficFlowSpec&) const = default;
};

/// Range checks on one flow spec; `path` prefixes each violation.
std::vector<Violation> validate_traffic(const TrafficFlowSpec& spec,
                                        const std::string& path);

/// Sine steps per period when the continuous wave is realized as demand
/// changes.
inline constexpr int kSineStepsPerPeriod = 32;

struct TraceEvent {
  double time_offset_s = 0.0;
  double bytes = 0.0;
  bool operator==(const TraceEvent&) const = default;
};

/// Parses "time_s,bytes" CSV; offsets are multiplied by `time_scale`.
/// Throws TraceFormatError (line number) or NonMonotonicTime.
std::vector<TraceEvent> load_trace(std::string_view csv, double time_scale = 1.0);
std::vector<TraceEvent> load_trace_file(const std::string& path, double time_scale);

/// One schedule entry: the flow's demand from `time_s` on. `burst_bytes` is
/// non-zero for Poisson / trace arrivals.
struct TrafficEvent {
  double time_s = 0.0;
  double demand_mbps = 0.0;
  double burst_bytes = 0.0;
  bool operator==(const TrafficEvent&) const = default;
};

/// Incremental schedule generator; one independent seeded stream per flow.
class TrafficSource {
 public:
  /// Trace patterns read their file here unless `trace` is supplied.
  explicit TrafficSource(TrafficFlowSpec spec);
  TrafficSource(TrafficFlowSpec spec, std::vector<TraceEvent> trace);

  /// All entries with time < horizon that were not returned before, plus the
  /// terminal (stop_s, 0) entry once horizon >= stop_s.
  std::vector<TrafficEvent> events_until(double horizon);
  bool finished() const noexcept { return finished_; }
  const TrafficFlowSpec& spec() const noexcept { return spec_; }

 private:
  double clamp(double mbps) const;
  void emit_stepped(double horizon, std::vector<TrafficEvent>& out);
  void emit_bursts(double horizon, std::vector<TrafficEvent>& out);
  bool next_arrival();

  TrafficFlowSpec spec_;
  std::vector<TraceEvent> trace_;
  Rng rng_;
  std::int64_t step_index_ = 0;
  bool finished_ = false;

  // Burst state.
  std::size_t trace_pos_ = 0;
  bool have_arrival_ = false;
  double arrival_s_ = 0.0;
  double arrival_bytes_ = 0.0;
  bool busy_ = false;
  double busy_until_s_ = 0.0;
};

std::vector<TrafficEvent> schedule_events(const TrafficFlowSpec& spec, double horizon);
std::vector<TrafficEvent> schedule_events(const TrafficFlowSpec& spec, double horizon,
                                          std::vector<TraceEvent> trace);

/// Demand in Mbps at time t, clamped to [0, cap]; 0 outside [start, stop).
/// SineWave is evaluated continuously; the schedule samples it at step
/// boundaries.
double demand_at(const TrafficFlowSpec& spec, double t);

/// Time-average of the piecewise-constant schedule over [from, to).
double mean_demand_mbps(const std::vector<TrafficEvent>& events, double from, double to);

}  // namespace flowfed
