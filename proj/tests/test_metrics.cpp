#include <doctest.h>

#include <random>
#include <thread>

#include "flowfed/error.hpp"
#include "flowfed/metrics.hpp"
#include "flowfed/report.hpp"
#include "oracles.hpp"
#include "scratch.hpp"
#include "subscriber.hpp"

using namespace flowfed;

namespace {

MetricEnvelope round_row(int round, const std::string& client, double s2c, double dur) {
  return MetricEnvelope{dur, client, Topic::FlRound,
                        {{"round", std::int64_t{round}},
                         {"client_id", client},
                         {"s2c_s", s2c},
                         {"compute_s", 0.1},
                         {"c2s_s", 0.05},
                         {"round_duration_s", dur},
                         {"global_loss", 1.25},
                         {"global_accuracy", 0.5}}};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("empty run leaves header-only files") {
  const auto dir = scratch_dir("metrics_empty");
  {
    CsvWriter w(dir);
    w.flush();
  }
  CHECK(oracle::read_file((dir / kRoundsCsv).string()) == std::string(kRoundsHeader) + "\n");
  CHECK(oracle::read_file((dir / kSysCsv).string()) == std::string(kSysHeader) + "\n");
  CHECK(oracle::read_file((dir / kNetCsv).string()) == std::string(kNetHeader) + "\n");
  CHECK(oracle::read_file((dir / kTrafficCsv).string()) == std::string(kTrafficHeader) + "\n");
}

TEST_CASE("one round, two clients, two rows") {
  const auto dir = scratch_dir("metrics_rows");
  MetricBus bus;
  bus.add_file_sink(std::make_unique<CsvWriter>(dir));
  bus.publish(round_row(1, "c1", 0.2, 1.0));
  bus.publish(round_row(1, "c2", 0.3, 1.0));
  bus.publish({0.5, "c1", Topic::Log, {{"event", std::string("ignored")}}});
  bus.close();
  const auto text = oracle::read_file((dir / kRoundsCsv).string());
  CHECK(count_lines(text) == 3);
  CHECK(first_line(text) == kRoundsHeader);
  CHECK(text.find("1,c1,0.2,0.1,0.05,1,1.25,0.5\n") != std::string::npos);
}

TEST_CASE("real formatting") {
  CHECK(format_real(0.0) == "0");
  CHECK(format_real(0.16) == "0.16");
  CHECK(format_real(1.0) == "1");
}

TEST_CASE("stream framing") {
  const auto msg = encode_stream_message(round_row(3, "c7", 0.1, 0.9));
  CHECK(msg.rfind("fl.round {", 0) == 0);
  CHECK(msg.back() == '\n');
  CHECK(std::count(msg.begin(), msg.end(), '\n') == 1);
}

TEST_CASE("random envelopes decode after splitting on the first space") {
  std::mt19937_64 rng(11);
  const Topic topics[] = {Topic::FlRound, Topic::SysSample, Topic::NetSample,
                          Topic::TrafficEvent, Topic::Log};
  for (int i = 0; i < 500; ++i) {
    MetricEnvelope env;
    env.t_sim_s = std::uniform_real_distribution<double>(0, 1e4)(rng);
    env.topic = topics[rng() % 5];
    std::string src;
    for (int c = 0; c < 6; ++c) src += static_cast<char>(32 + rng() % 95);
    env.source = src;
    env.payload.emplace_back("s", src + " \"quoted\"\n\ttab");
    env.payload.emplace_back("i", static_cast<std::int64_t>(rng() >> 1));
    env.payload.emplace_back("d", std::uniform_real_distribution<double>(-1e9, 1e9)(rng));
    const auto line = encode_stream_message(env);
    REQUIRE(line.back() == '\n');
    REQUIRE(std::count(line.begin(), line.end(), '\n') == 1);
    const auto sp = line.find(' ');
    CHECK(line.substr(0, sp) == to_string(env.topic));
    const auto j = nlohmann::json::parse(line.substr(sp + 1, line.size() - sp - 2));
    CHECK(j["source"] == env.source);
    CHECK(j["t_sim_s"].get<double>() == env.t_sim_s);
    CHECK(j["payload"]["s"] == std::get<std::string>(env.payload[0].second));
    CHECK(j["payload"]["i"].get<std::int64_t>() == std::get<std::int64_t>(env.payload[1].second));
    CHECK(j["payload"]["d"].get<double>() == std::get<double>(env.payload[2].second));
  }
}

TEST_CASE("subscribers receive and filter by prefix") {
  StreamPublisher pub("127.0.0.1:0", 1024);
  REQUIRE(pub.port() > 0);
  TestSubscriber all(pub.port());
  TestSubscriber rounds(pub.port());
  rounds.subscribe("fl.");
  REQUIRE(pub.wait_for_subscribers(2, 5.0));
  std::this_thread::sleep_for(std::chrono::milliseconds(50));  // let SUB arrive
  pub.write(round_row(1, "c1", 0.1, 0.5));
  pub.write({0.6, "h1", Topic::NetSample, {{"node", std::string("h1")}}});
  pub.close();
  all.read_all();
  rounds.read_all();
  CHECK(all.bad() == 0);
  CHECK(all.messages().size() == 2);
  REQUIRE(rounds.messages().size() == 1);
  CHECK(rounds.messages()[0].topic == "fl.round");
  CHECK(pub.dropped() == 0);
}

TEST_CASE("overflow drops the oldest messages") {
  StreamPublisher pub("127.0.0.1:0", 8);
  TestSubscriber slow(pub.port(), 4096);
  REQUIRE(pub.wait_for_subscribers(1, 5.0));
  const std::string pad(2000, 'x');
  const int n = 20000;
  for (int i = 0; i < n; ++i)
    pub.write({static_cast<double>(i), "src", Topic::SysSample,
               {{"seq", std::int64_t{i}}, {"pad", pad}}});
  CHECK(pub.dropped() > 0);
  std::thread reader([&] { slow.read_all(); });
  pub.close();
  reader.join();
  CHECK(slow.bad() == 0);
  std::int64_t last = -1;
  bool saw_drop_report = false;
  for (const auto& m : slow.messages()) {
    if (m.topic == "log") {
      saw_drop_report = m.body["payload"]["event"] == "stream_drops";
      continue;
    }
    const auto seq = m.body["payload"]["seq"].get<std::int64_t>();
    CHECK(seq > last);
    last = seq;
  }
  CHECK(last == n - 1);
  CHECK(saw_drop_report);
}

TEST_CASE("bind failure") {
  StreamPublisher first("127.0.0.1:0", 4);
  try {
    StreamPublisher second("127.0.0.1:" + std::to_string(first.port()), 4);
    FAIL("expected BindError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Bind);
  }
}

TEST_CASE("summary of hand-written archive") {
  const std::string csv = std::string(kRoundsHeader) +
                          "\n1,c1,0.2,0.1,0.1,0.6,2.0,0.3\n"
                          "1,c2,0.5,0.05,0.05,0.6,2.0,0.3\n"
                          "1,c3,0.3,0.1,0.1,0.6,2.0,0.3\n"
                          "2,c1,0.1,0.1,0.1,0.3,1.5,0.4\n"
                          "3,c2,0.4,0.1,0.1,1.0,1.0,0.6\n";
  const auto s = summarize_rounds_csv(csv);
  REQUIRE(s.rounds.size() == 3);
  CHECK(s.rounds[0].max_s2c_s == 0.5);
  CHECK(s.rounds[0].n_clients == 3);
  REQUIRE(s.durations);
  // Hand computation over {0.3, 0.6, 1.0}.
  CHECK(s.durations->min == 0.3);
  CHECK(s.durations->p50 == 0.6);
  CHECK(s.durations->p90 == doctest::Approx(0.92).epsilon(1e-12));
  CHECK(s.durations->max == 1.0);
  CHECK(s.clients.at("c1").rounds == 2);
  CHECK(s.clients.at("c1").s2c_s == doctest::Approx(0.15));

  const auto o = oracle::rounds_csv_stats(csv);
  CHECK(o.max_s2c == std::vector<double>{0.5, 0.1, 0.4});
  CHECK(s.durations->p50 == doctest::Approx(o.p50).epsilon(1e-12));
  CHECK(s.durations->p90 == doctest::Approx(o.p90).epsilon(1e-12));
}

TEST_CASE("identical durations collapse the distribution") {
  std::string csv = std::string(kRoundsHeader) + "\n";
  for (int r = 1; r <= 5; ++r) csv += std::to_string(r) + ",c1,0.1,0.1,0.1,0.75,1,0.5\n";
  const auto s = summarize_rounds_csv(csv);
  CHECK(s.durations->p50 == 0.75);
  CHECK(s.durations->p90 == 0.75);
}

TEST_CASE("report edge cases") {
  const auto empty = summarize_rounds_csv(std::string(kRoundsHeader) + "\n");
  CHECK(empty.rounds.empty());
  CHECK(!empty.durations);
  CHECK(report_text(empty).find("empty run") != std::string::npos);
  try {
    summarize_rounds_csv("round,client\n1,c1\n");
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Schema);
  }
  const auto dir = scratch_dir("report_missing");
  CHECK_THROWS_AS(summarize(dir), MissingFileError);
  const std::string csv = std::string(kRoundsHeader) + "\n1,c1,0.2,0.1,0.1,0.6,2.0,0.3\n";
  CHECK(report_json(summarize_rounds_csv(csv)) == report_json(summarize_rounds_csv(csv)));
}

TEST_CASE("percentile interpolates") {
  CHECK(percentile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(percentile({5}, 0.9) == 5);
  CHECK(percentile({10, 0}, 0.25) == 2.5);
}

}  // TEST_SUITE
