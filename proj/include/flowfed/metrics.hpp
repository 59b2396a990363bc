#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

namespace flowfed {

enum class Topic { FlRound, SysSample, NetSample, TrafficEvent, Log };
const char* to_string(Topic topic) noexcept;
std::optional<Topic> parse_topic(std::string_view s) noexcept;

using MetricValue = std::variant<std::string, std::int64_t, double>;
using Payload = std::vector<std::pair<std::string, MetricValue>>;

struct MetricEnvelope {
  double t_sim_s = 0.0;
  std::string source;  // node id, "server" or "experiment"
  Topic topic = Topic::Log;
  Payload payload;

  const MetricValue* find(std::string_view key) const;
};

/// Six significant digits, the fixed rendering for every real in the CSVs.
std::string format_real(double v);

/// "<topic> <json>\n" with json = {"t_sim_s", "source", "payload"}.
std::string encode_stream_message(const MetricEnvelope& env);

class MetricSink {
 public:
  virtual ~MetricSink() = default;
  virtual void write(const MetricEnvelope& env) = 0;
  virtual void flush() {}
};

inline constexpr const char* kRoundsCsv = "rounds.csv";
inline constexpr const char* kSysCsv = "sys_metrics.csv";
inline constexpr const char* kNetCsv = "net_metrics.csv";
inline constexpr const char* kTrafficCsv = "traffic.csv";

inline constexpr const char* kRoundsHeader =
    "round,client_id,s2c_s,compute_s,c2s_s,round_duration_s,global_loss,global_accuracy";
inline constexpr const char* kSysHeader = "t_s,node,cpu_pct,mem_mb";
inline constexpr const char* kNetHeader = "t_s,node,tx_bytes,rx_bytes,tx_bps,rx_bps";
inline constexpr const char* kTrafficHeader = "t_s,flow_id,demand_mbps";

/// The four fixed-schema CSV files. Headers are written on construction so
/// an empty run still leaves valid files. Log envelopes are ignored.
class CsvWriter final : public MetricSink {
 public:
  explicit CsvWriter(const std::filesystem::path& dir);
  void write(const MetricEnvelope& env) override;
  void flush() override;

 private:
  std::ofstream rounds_;
  std::ofstream sys_;
  std::ofstream net_;
  std::ofstream traffic_;
};

/// One human-readable line per envelope.
class LogfileWriter final : public MetricSink {
 public:
  explicit LogfileWriter(const std::filesystem::path& file);
  void write(const MetricEnvelope& env) override;
  void flush() override;

 private:
  std::ofstream out_;
};

/// TCP pub-sub. Subscribers may send "SUB <prefix>\n" lines; a subscriber
/// that never sends one receives every topic. Each subscriber has its own
/// bounded queue; overflow drops the oldest message and bumps a counter that
/// is reported under topic "log". publish() never blocks on the network.
class StreamPublisher final : public MetricSink {
 public:
  /// Binds host:port (port 0 picks a free port). Throws BindError.
  StreamPublisher(const std::string& bind, std::size_t buffer_messages);
  ~StreamPublisher() override;
  StreamPublisher(const StreamPublisher&) = delete;
  StreamPublisher& operator=(const StreamPublisher&) = delete;

  int port() const noexcept { return port_; }
  void write(const MetricEnvelope& env) override;
  /// Gives connected subscribers a short grace period to drain.
  void flush() override;
  void close();

  bool wait_for_subscribers(std::size_t n, double timeout_s);
  std::uint64_t dropped() const noexcept { return dropped_.load(); }

 private:
  struct Subscriber {
    int fd = -1;
    std::vector<std::string> prefixes;
    std::string inbound;
    std::deque<std::string> queue;
    std::size_t offset = 0;  // bytes of queue.front() already sent
    bool dead = false;
  };

  void io_loop();
  void enqueue_locked(const std::string& topic, const std::string& msg);
  void report_drops_locked(double t_sim_s);
  void wake();

  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  int port_ = 0;
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<Subscriber>> subs_;
  std::atomic<std::uint64_t> dropped_{0};
  std::uint64_t reported_drops_ = 0;
  double last_t_ = 0.0;
  std::atomic<bool> stop_{false};
  bool closed_ = false;
  std::thread io_;
};

/// Order-preserving fan-out. File sinks are fed through a bounded queue
/// consumed on a writer thread; the stream publisher is fed inline since it
/// never blocks.
class MetricBus {
 public:
  explicit MetricBus(std::size_t queue_capacity = 8192);
  ~MetricBus();
  MetricBus(const MetricBus&) = delete;
  MetricBus& operator=(const MetricBus&) = delete;

  void add_file_sink(std::unique_ptr<MetricSink> sink);
  void set_stream(std::shared_ptr<StreamPublisher> stream);

  void publish(MetricEnvelope env);
  /// Drains the queue, flushes every sink and joins the writer. Rethrows the
  /// first sink error, if any.
  void close();

 private:
  void run();

  std::size_t capacity_;
  std::vector<std::unique_ptr<MetricSink>> sinks_;
  std::shared_ptr<StreamPublisher> stream_;
  std::mutex mu_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<MetricEnvelope> queue_;
  bool closing_ = false;
  bool closed_ = false;
  std::exception_ptr error_;
  std::thread writer_;
};

}  // namespace flowfed
