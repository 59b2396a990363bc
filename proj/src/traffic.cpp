#include "flowfed/traffic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace flowfed {

namespace {

constexpr double kBitsPerByte = 8.0;
constexpr double kMega = 1e6;

// Per-step value streams are derived from (seed, step) so demand_at stays a
// pure function of t.
double normal_step_value(const TrafficFlowSpec& spec, const NormalPattern& p,
                         std::int64_t step) {
  if (p.std_mbps == 0.0) return p.mean_mbps;
  auto rng = make_rng({spec.seed, stream::kTraffic, static_cast<std::uint64_t>(step)});
  std::normal_distribution<double> dist(p.mean_mbps, p.std_mbps);
  return dist(rng);
}

double sine_value(const SineWavePattern& p, double dt) {
  return p.base_mbps +
         p.amplitude_mbps * std::sin(2.0 * std::numbers::pi * dt / p.period_s);
}

double parse_double(std::string_view field, std::size_t line, const char* what) {
  auto first = field.find_first_not_of(" \t");
  auto last = field.find_last_not_of(" \t\r");
  if (first == std::string_view::npos)
    throw TraceFormatError(ErrorCode::TraceFormat, line, std::string("empty ") + what);
  field = field.substr(first, last - first + 1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    throw TraceFormatError(ErrorCode::TraceFormat, line,
                           std::string("bad ") + what + " '" + std::string(field) + "'");
  return v;
}

}  // namespace

const char* pattern_name(const TrafficPatternSpec& pattern) noexcept {
  struct Visitor {
    const char* operator()(const PoissonPattern&) const { return "poisson"; }
    const char* operator()(const BurstyPattern&) const { return "bursty"; }
    const char* operator()(const UniformPattern&) const { return "uniform"; }
    const char* operator()(const NormalPattern&) const { return "normal"; }
    const char* operator()(const SineWavePattern&) const { return "sinewave"; }
    const char* operator()(const TraceReplayPattern&) const { return "trace"; }
  };
  return std::visit(Visitor{}, pattern);
}

std::vector<Violation> validate_traffic(const TrafficFlowSpec& spec,
                                        const std::string& path) {
  std::vector<Violation> out;
  auto need = [&](bool ok, const std::string& key, const std::string& msg) {
    if (!ok) out.push_back({path + "." + key, msg});
  };
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };

  need(finite_pos(spec.cap_mbps), "cap_mbps", "must be > 0");
  need(finite_nonneg(spec.start_s), "start_s", "must be >= 0");
  need(std::isfinite(spec.stop_s) && spec.start_s < spec.stop_s, "stop_s",
       "must be > start_s (empty interval)");
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PoissonPattern>) {
          need(finite_nonneg(p.lambda_events_per_s), "lambda_events_per_s", "must be >= 0");
          need(finite_nonneg(p.event_bytes), "event_bytes", "must be >= 0");
        } else if constexpr (std::is_same_v<T, BurstyPattern>) {
          need(finite_nonneg(p.burst_rate_mbps), "burst_rate_mbps", "must be >= 0");
          need(finite_pos(p.burst_s), "burst_s", "must be > 0");
          need(finite_nonneg(p.idle_s), "idle_s", "must be >= 0");
        } else if constexpr (std::is_same_v<T, UniformPattern>) {
          need(finite_nonneg(p.rate_mbps), "rate_mbps", "must be >= 0");
        } else if constexpr (std::is_same_v<T, NormalPattern>) {
          need(finite_nonneg(p.mean_mbps), "mean_mbps", "must be >= 0");
          need(finite_nonneg(p.std_mbps), "std_mbps", "must be >= 0");
          need(finite_pos(p.step_s), "step_s", "must be > 0");
        } else if constexpr (std::is_same_v<T, SineWavePattern>) {
          need(finite_nonneg(p.base_mbps), "base_mbps", "must be >= 0");
          need(finite_nonneg(p.amplitude_mbps), "amplitude_mbps", "must be >= 0");
          need(finite_pos(p.period_s), "period_s", "must be > 0");
        } else {
          need(!p.trace_path.empty(), "trace", "trace path is required");
          need(finite_pos(p.time_scale), "time_scale", "must be > 0");
        }
      },
      spec.pattern);
  return out;
}

std::vector<TraceEvent> load_trace(std::string_view csv, double time_scale) {
  std::vector<TraceEvent> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  double last_t = -std::numeric_limits<double>::infinity();
  while (!csv.empty()) {
    auto nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != "time_s,bytes")
        throw TraceFormatError(ErrorCode::TraceFormat, line_no,
                               "expected header 'time_s,bytes'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
      throw TraceFormatError(ErrorCode::TraceFormat, line_no, "expected two fields");
    const double t = parse_double(line.substr(0, comma), line_no, "time_s");
    const double bytes = parse_double(line.substr(comma + 1), line_no, "bytes");
    if (t < 0.0 || bytes < 0.0)
      throw TraceFormatError(ErrorCode::TraceFormat, line_no, "negative value");
    if (t < last_t)
      throw TraceFormatError(ErrorCode::NonMonotonicTime, line_no,
                             "time offsets must be non-decreasing");
    last_t = t;
    out.push_back({t * time_scale, bytes});
  }
  if (!header_seen)
    throw TraceFormatError(ErrorCode::TraceFormat, 1, "expected header 'time_s,bytes'");
  return out;
}

std::vector<TraceEvent> load_trace_file(const std::string& path, double time_scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read trace file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_trace(buf.str(), time_scale);
}

TrafficSource::TrafficSource(TrafficFlowSpec spec)
    : spec_(std::move(spec)), rng_(make_rng({spec_.seed, stream::kTraffic})) {
  if (const auto* tr = std::get_if<TraceReplayPattern>(&spec_.pattern))
    trace_ = load_trace_file(tr->trace_path, tr->time_scale);
}

TrafficSource::TrafficSource(TrafficFlowSpec spec, std::vector<TraceEvent> trace)
    : spec_(std::move(spec)),
      trace_(std::move(trace)),
      rng_(make_rng({spec_.seed, stream::kTraffic})) {}

double TrafficSource::clamp(double mbps) const {
  return std::clamp(mbps, 0.0, spec_.cap_mbps);
}

std::vector<TrafficEvent> TrafficSource::events_until(double horizon) {
  std::vector<TrafficEvent> out;
  if (finished_) return out;
  if (std::holds_alternative<PoissonPattern>(spec_.pattern) ||
      std::holds_alternative<TraceReplayPattern>(spec_.pattern)) {
    emit_bursts(horizon, out);
  } else {
    emit_stepped(horizon, out);
  }
  if (horizon >= spec_.stop_s) {
    out.push_back({spec_.stop_s, 0.0, 0.0});
    finished_ = true;
  }
  return out;
}

void TrafficSource::emit_stepped(double horizon, std::vector<TrafficEvent>& out) {
  const double start = spec_.start_s;
  const double end = std::min(horizon, spec_.stop_s);
  auto emit = [&](double t, double v) { out.push_back({t, clamp(v), 0.0}); };

  if (const auto* p = std::get_if<UniformPattern>(&spec_.pattern)) {
    if (step_index_ == 0 && start < end) {
      emit(start, p->rate_mbps);
      step_index_ = 1;
    }
  } else if (const auto* p = std::get_if<BurstyPattern>(&spec_.pattern)) {
    if (p->idle_s == 0.0) {
      if (step_index_ == 0 && start < end) {
        emit(start, p->burst_rate_mbps);
        step_index_ = 1;
      }
      return;
    }
    // Even steps open a burst, odd steps open an idle period.
    const double cycle = p->burst_s + p->idle_s;
    for (;;) {
      const std::int64_t k = step_index_ / 2;
      const bool burst = step_index_ % 2 == 0;
      const double t = start + static_cast<double>(k) * cycle + (burst ? 0.0 : p->burst_s);
      if (!(t < end)) break;
      emit(t, burst ? p->burst_rate_mbps : 0.0);
      ++step_index_;
    }
  } else if (const auto* p = std::get_if<NormalPattern>(&spec_.pattern)) {
    for (;;) {
      const double t = start + static_cast<double>(step_index_) * p->step_s;
      if (!(t < end)) break;
      emit(t, normal_step_value(spec_, *p, step_index_));
      ++step_index_;
    }
  } else if (const auto* p = std::get_if<SineWavePattern>(&spec_.pattern)) {
    const double step = p->period_s / kSineStepsPerPeriod;
    for (;;) {
      const double dt = static_cast<double>(step_index_) * step;
      const double t = start + dt;
      if (!(t < end)) break;
      emit(t, sine_value(*p, dt));
      ++step_index_;
    }
  }
}

bool TrafficSource::next_arrival() {
  if (const auto* p = std::get_if<PoissonPattern>(&spec_.pattern)) {
    if (!(p->lambda_events_per_s > 0.0)) return false;
    std::exponential_distribution<double> gap(p->lambda_events_per_s);
    arrival_s_ = (have_arrival_ ? arrival_s_ : spec_.start_s) + gap(rng_);
    arrival_bytes_ = p->event_bytes;
    return true;
  }
  if (trace_pos_ >= trace_.size()) return false;
  arrival_s_ = spec_.start_s + trace_[trace_pos_].time_offset_s;
  arrival_bytes_ = trace_[trace_pos_].bytes;
  ++trace_pos_;
  return true;
}

void TrafficSource::emit_bursts(double horizon, std::vector<TrafficEvent>& out) {
  const double end = std::min(horizon, spec_.stop_s);
  if (step_index_ == 0) {
    have_arrival_ = next_arrival();
    step_index_ = 1;
  }
  // Arrivals join a backlog drained at cap_mbps; demand is cap while backlogged.
  for (;;) {
    const bool arrival_next = have_arrival_ && (!busy_ || arrival_s_ < busy_until_s_);
    if (arrival_next) {
      if (!(arrival_s_ < end)) break;
      const double drain_s = arrival_bytes_ * kBitsPerByte / (spec_.cap_mbps * kMega);
      busy_until_s_ = (busy_ ? busy_until_s_ : arrival_s_) + drain_s;
      busy_ = true;
      out.push_back({arrival_s_, spec_.cap_mbps, arrival_bytes_});
      have_arrival_ = next_arrival();
    } else if (busy_) {
      if (!(busy_until_s_ < end)) break;
      out.push_back({busy_until_s_, 0.0, 0.0});
      busy_ = false;
    } else {
      break;
    }
  }
}

std::vector<TrafficEvent> schedule_events(const TrafficFlowSpec& spec, double horizon) {
  return TrafficSource(spec).events_until(horizon);
}

std::vector<TrafficEvent> schedule_events(const TrafficFlowSpec& spec, double horizon,
                                          std::vector<TraceEvent> trace) {
  return TrafficSource(spec, std::move(trace)).events_until(horizon);
}

double demand_at(const TrafficFlowSpec& spec, double t) {
  if (t < spec.start_s || t >= spec.stop_s) return 0.0;
  const double dt = t - spec.start_s;
  auto clamp = [&](double v) { return std::clamp(v, 0.0, spec.cap_mbps); };
  if (const auto* p = std::get_if<UniformPattern>(&spec.pattern)) return clamp(p->rate_mbps);
  if (const auto* p = std::get_if<SineWavePattern>(&spec.pattern)) return clamp(sine_value(*p, dt));
  if (const auto* p = std::get_if<NormalPattern>(&spec.pattern)) {
    const auto step = static_cast<std::int64_t>(std::floor(dt / p->step_s));
    return clamp(normal_step_value(spec, *p, step));
  }
  if (const auto* p = std::get_if<BurstyPattern>(&spec.pattern)) {
    const double phase = std::fmod(dt, p->burst_s + p->idle_s);
    return phase < p->burst_s ? clamp(p->burst_rate_mbps) : 0.0;
  }
  // Burst processes: replay the schedule up to t.
  TrafficSource source(spec);
  double demand = 0.0;
  for (const auto& e : source.events_until(std::nextafter(t, INFINITY)))
    if (e.time_s <= t) demand = e.demand_mbps;
  return demand;
}

double mean_demand_mbps(const std::vector<TrafficEvent>& events, double from, double to) {
  if (!(to > from)) return 0.0;
  double area = 0.0;
  double current = 0.0;
  double last = from;
  for (const auto& e : events) {
    const double t = std::clamp(e.time_s, from, to);
    area += current * (t - last);
    last = t;
    current = e.demand_mbps;
  }
  area += current * (to - last);
  return area / (to - from);
}

}  // namespace flowfed
