#include "flowfed/metrics.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>

#include <json.hpp>

#include "flowfed/error.hpp"

namespace flowfed {

using json = nlohmann::json;

const char* to_string(Topic topic) noexcept {
  switch (topic) {
    case Topic::FlRound: return "fl.round";
    case Topic::SysSample: return "sys.sample";
    case Topic::NetSample: return "net.sample";
    case Topic::TrafficEvent: return "traffic.event";
    case Topic::Log: return "log";
  }
  return "log";
}

std::optional<Topic> parse_topic(std::string_view s) noexcept {
  for (Topic t : {Topic::FlRound, Topic::SysSample, Topic::NetSample, Topic::TrafficEvent,
                  Topic::Log})
    if (s == to_string(t)) return t;
  return std::nullopt;
}

const MetricValue* MetricEnvelope::find(std::string_view key) const {
  for (const auto& [k, v] : payload)
    if (k == key) return &v;
  return nullptr;
}

std::string format_real(double v) {
  if (v == 0.0) return "0";  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace {

std::string render(const MetricValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return format_real(std::get<double>(v));
}

std::string csv_field(const MetricValue* v) {
  if (!v) return "";
  std::string s = render(*v);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

json to_json(const MetricValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::get<double>(v);
}

void open_csv(std::ofstream& out, const std::filesystem::path& p, const char* header) {
  out.open(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + p.string() + " for writing");
  out << header << '\n';
}

void row(std::ofstream& out, const MetricEnvelope& env,
         std::initializer_list<const char*> keys, bool leading_time) {
  if (leading_time) out << format_real(env.t_sim_s);
  bool first = !leading_time;
  for (const char* k : keys) {
    if (!first) out << ',';
    first = false;
    out << csv_field(env.find(k));
  }
  out << '\n';
  if (!out) throw Error(ErrorCode::Io, "CSV write failed");
}

}  // namespace

std::string encode_stream_message(const MetricEnvelope& env) {
  json payload = json::object();
  for (const auto& [k, v] : env.payload) payload[k] = to_json(v);
  json body = {{"t_sim_s", env.t_sim_s}, {"source", env.source}, {"payload", payload}};
  std::string out = to_string(env.topic);
  out += ' ';
  out += body.dump(-1, ' ', false, json::error_handler_t::replace);
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------

CsvWriter::CsvWriter(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  open_csv(rounds_, dir / kRoundsCsv, kRoundsHeader);
  open_csv(sys_, dir / kSysCsv, kSysHeader);
  open_csv(net_, dir / kNetCsv, kNetHeader);
  open_csv(traffic_, dir / kTrafficCsv, kTrafficHeader);
}

void CsvWriter::write(const MetricEnvelope& env) {
  switch (env.topic) {
    case Topic::FlRound:
      row(rounds_, env,
          {"round", "client_id", "s2c_s", "compute_s", "c2s_s", "round_duration_s",
           "global_loss", "global_accuracy"},
          false);
      break;
    case Topic::SysSample:
      row(sys_, env, {"node", "cpu_pct", "mem_mb"}, true);
      break;
    case Topic::NetSample:
      row(net_, env, {"node", "tx_bytes", "rx_bytes", "tx_bps", "rx_bps"}, true);
      break;
    case Topic::TrafficEvent:
      row(traffic_, env, {"flow_id", "demand_mbps"}, true);
      break;
    case Topic::Log:
      break;
  }
}

void CsvWriter::flush() {
  for (auto* f : {&rounds_, &sys_, &net_, &traffic_}) {
    f->flush();
    if (!*f) throw Error(ErrorCode::Io, "CSV flush failed");
  }
}

LogfileWriter::LogfileWriter(const std::filesystem::path& file) {
  std::error_code ec;
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path(), ec);
  out_.open(file, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::Io, "cannot open " + file.string() + " for writing");
}

void LogfileWriter::write(const MetricEnvelope& env) {
  char t[32];
  std::snprintf(t, sizeof t, "%.6f", env.t_sim_s);
  out_ << '[' << t << "] " << to_string(env.topic) << ' ' << env.source;
  for (const auto& [k, v] : env.payload) out_ << ' ' << k << '=' << render(v);
  out_ << '\n';
}

void LogfileWriter::flush() {
  out_.flush();
  if (!out_) throw Error(ErrorCode::Io, "logfile write failed");
}

// ---------------------------------------------------------------------------

namespace {

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

StreamPublisher::StreamPublisher(const std::string& bind, std::size_t buffer_messages)
    : capacity_(std::max<std::size_t>(buffer_messages, 1)) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::Bind, "bad bind address: " + bind);
  std::string host = bind.substr(0, colon);
  const std::string port = bind.substr(colon + 1);
  if (host == "*" || host.empty()) host = "0.0.0.0";

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
    throw Error(ErrorCode::Bind, "cannot resolve bind address " + bind);

  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  int one = 1;
  if (listen_fd_ >= 0) ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (listen_fd_ < 0 || ::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::freeaddrinfo(res);
    if (listen_fd_ >= 0) ::close(listen_fd_);
    throw Error(ErrorCode::Bind, "cannot bind " + bind + ": " + why);
  }
  ::freeaddrinfo(res);
  set_nonblocking(listen_fd_);

  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);

  if (::pipe(wake_pipe_) != 0) {
    ::close(listen_fd_);
    throw Error(ErrorCode::Bind, "pipe failed");
  }
  set_nonblocking(wake_pipe_[0]);
  set_nonblocking(wake_pipe_[1]);
  io_ = std::thread([this] { io_loop(); });
}

StreamPublisher::~StreamPublisher() { close(); }

void StreamPublisher::wake() {
  const char c = 1;
  [[maybe_unused]] auto n = ::write(wake_pipe_[1], &c, 1);
}

void StreamPublisher::enqueue_locked(const std::string& topic, const std::string& msg) {
  for (auto& sub : subs_) {
    if (sub->dead) continue;
    if (!sub->prefixes.empty()) {
      bool match = false;
      for (const auto& p : sub->prefixes)
        if (topic.compare(0, p.size(), p) == 0) match = true;
      if (!match) continue;
    }
    // Never evict a partially sent message; that would corrupt framing.
    if (sub->queue.size() >= capacity_) {
      if (sub->offset == 0 || sub->queue.size() > 1) {
        auto victim = sub->offset == 0 ? sub->queue.begin() : sub->queue.begin() + 1;
        sub->queue.erase(victim);
        dropped_.fetch_add(1);
      }
    }
    sub->queue.push_back(msg);
  }
}

void StreamPublisher::report_drops_locked(double t_sim_s) {
  const auto d = dropped_.load();
  if (d == reported_drops_) return;
  reported_drops_ = d;
  MetricEnvelope env{t_sim_s, "experiment", Topic::Log,
                     {{"event", std::string("stream_drops")},
                      {"dropped_total", static_cast<std::int64_t>(d)}}};
  enqueue_locked("log", encode_stream_message(env));
}

void StreamPublisher::write(const MetricEnvelope& env) {
  const std::string msg = encode_stream_message(env);
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    last_t_ = env.t_sim_s;
    report_drops_locked(env.t_sim_s);
    enqueue_locked(to_string(env.topic), msg);
  }
  wake();
}

bool StreamPublisher::wait_for_subscribers(std::size_t n, double timeout_s) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, std::chrono::duration<double>(timeout_s), [&] {
    std::size_t live = 0;
    for (const auto& s : subs_) live += s->dead ? 0 : 1;
    return live >= n;
  });
}

void StreamPublisher::flush() {
  {
    std::lock_guard lock(mu_);
    report_drops_locked(last_t_);
  }
  wake();
  // Wait until queues are empty or no subscriber makes progress for 200 ms.
  std::size_t last_pending = SIZE_MAX;
  auto last_progress = std::chrono::steady_clock::now();
  for (;;) {
    std::size_t pending = 0;
    {
      std::lock_guard lock(mu_);
      for (const auto& s : subs_)
        if (!s->dead) pending += s->queue.size();
    }
    if (pending == 0) return;
    const auto now = std::chrono::steady_clock::now();
    if (pending < last_pending) {
      last_pending = pending;
      last_progress = now;
    } else if (now - last_progress > std::chrono::milliseconds(200)) {
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
}

void StreamPublisher::close() {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
  }
  flush();
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  stop_ = true;
  wake();
  if (io_.joinable()) io_.join();
  for (auto& s : subs_)
    if (s->fd >= 0) ::close(s->fd);
  subs_.clear();
  ::close(listen_fd_);
  ::close(wake_pipe_[0]);
  ::close(wake_pipe_[1]);
}

void StreamPublisher::io_loop() {
  std::vector<pollfd> fds;
  while (!stop_) {
    fds.clear();
    fds.push_back({listen_fd_, POLLIN, 0});
    fds.push_back({wake_pipe_[0], POLLIN, 0});
    std::vector<Subscriber*> order;
    {
      std::lock_guard lock(mu_);
      for (auto& s : subs_) {
        if (s->dead) continue;
        short ev = POLLIN;
        if (!s->queue.empty()) ev |= POLLOUT;
        fds.push_back({s->fd, ev, 0});
        order.push_back(s.get());
      }
    }
    if (::poll(fds.data(), fds.size(), 100) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (fds[1].revents & POLLIN) {
      char buf[256];
      while (::read(wake_pipe_[0], buf, sizeof buf) > 0) {
      }
    }
    if (fds[0].revents & POLLIN) {
      for (;;) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;
        set_nonblocking(fd);
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        auto sub = std::make_unique<Subscriber>();
        sub->fd = fd;
        std::lock_guard lock(mu_);
        subs_.push_back(std::move(sub));
        cv_.notify_all();
      }
    }
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < order.size(); ++i) {
      Subscriber& s = *order[i];
      const short rev = fds[i + 2].revents;
      if (rev & POLLIN) {
        char buf[512];
        const ssize_t n = ::recv(s.fd, buf, sizeof buf, 0);
        if (n <= 0) {
          if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK)) s.dead = true;
        } else {
          s.inbound.append(buf, static_cast<std::size_t>(n));
          std::size_t nl;
          while ((nl = s.inbound.find('\n')) != std::string::npos) {
            std::string line = s.inbound.substr(0, nl);
            s.inbound.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.rfind("SUB ", 0) == 0) s.prefixes.push_back(line.substr(4));
          }
        }
      }
      if (rev & (POLLERR | POLLHUP)) s.dead = true;
      while (!s.dead && !s.queue.empty()) {
        const std::string& msg = s.queue.front();
        const ssize_t n =
            ::send(s.fd, msg.data() + s.offset, msg.size() - s.offset, MSG_NOSIGNAL);
        if (n < 0) {
          if (errno != EAGAIN && errno != EWOULDBLOCK) s.dead = true;
          break;
        }
        s.offset += static_cast<std::size_t>(n);
        if (s.offset < msg.size()) break;
        s.offset = 0;
        s.queue.pop_front();
      }
      if (s.dead) {
        dropped_.fetch_add(s.queue.size());
        s.queue.clear();
      }
    }
  }
}

// ---------------------------------------------------------------------------

MetricBus::MetricBus(std::size_t queue_capacity)
    : capacity_(std::max<std::size_t>(queue_capacity, 1)) {
  writer_ = std::thread([this] { run(); });
}

MetricBus::~MetricBus() {
  try {
    close();
  } catch (...) {
  }
}

void MetricBus::add_file_sink(std::unique_ptr<MetricSink> sink) {
  std::lock_guard lock(mu_);
  sinks_.push_back(std::move(sink));
}

void MetricBus::set_stream(std::shared_ptr<StreamPublisher> stream) {
  stream_ = std::move(stream);
}

void MetricBus::publish(MetricEnvelope env) {
  if (stream_) stream_->write(env);
  std::unique_lock lock(mu_);
  not_full_.wait(lock, [&] { return queue_.size() < capacity_ || error_; });
  if (error_) return;  // surfaced by close()
  queue_.push_back(std::move(env));
  not_empty_.notify_one();
}

void MetricBus::run() {
  for (;;) {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !queue_.empty() || closing_; });
    if (queue_.empty()) return;
    MetricEnvelope env = std::move(queue_.front());
    queue_.pop_front();
    not_full_.notify_one();
    if (error_) continue;
    lock.unlock();
    try {
      for (auto& s : sinks_) s->write(env);
    } catch (...) {
      std::lock_guard relock(mu_);
      error_ = std::current_exception();
      not_full_.notify_all();
    }
  }
}

void MetricBus::close() {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    closed_ = true;
    closing_ = true;
  }
  not_empty_.notify_all();
  if (writer_.joinable()) writer_.join();
  if (!error_) {
    try {
      for (auto& s : sinks_) s->flush();
    } catch (...) {
      error_ = std::current_exception();
    }
  }
  sinks_.clear();
  if (stream_) {
    stream_->flush();
    stream_->close();
  }
  if (error_) std::rethrow_exception(error_);
}

}  // namespace flowfed
