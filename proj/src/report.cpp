#include "flowfed/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flowfed/error.hpp"
#include "flowfed/metrics.hpp"

namespace flowfed {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgs, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (...) {
  }
  throw Error(ErrorCode::Schema,
              "rounds.csv line " + std::to_string(line) + ": bad number '" + s + "'");
}

}  // namespace

ReportSummary summarize_rounds_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Schema, "rounds.csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRoundsHeader)
    throw Error(ErrorCode::Schema, "rounds.csv header mismatch: '" + line + "'");

  ReportSummary out;
  std::map<int, RoundSummary> rounds;
  std::map<std::string, PhaseMeans> sums;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_row(line);
    if (f.size() != 8)
      throw Error(ErrorCode::Schema, "rounds.csv line " + std::to_string(lineno) +
                                         ": expected 8 fields, got " +
                                         std::to_string(f.size()));
    const int round = static_cast<int>(number(f[0], lineno));
    const double s2c = number(f[2], lineno);
    const double compute = number(f[3], lineno);
    const double c2s = number(f[4], lineno);
    auto [it, fresh] = rounds.try_emplace(round);
    RoundSummary& r = it->second;
    r.round = round;
    r.max_s2c_s = fresh ? s2c : std::max(r.max_s2c_s, s2c);
    r.round_duration_s = number(f[5], lineno);
    r.global_loss = number(f[6], lineno);
    r.global_accuracy = number(f[7], lineno);
    ++r.n_clients;

    PhaseMeans& p = sums[f[1]];
    ++p.rounds;
    p.s2c_s += s2c;
    p.compute_s += compute;
    p.c2s_s += c2s;
  }

  std::vector<double> durations;
  for (auto& [_, r] : rounds) {
    durations.push_back(r.round_duration_s);
    out.rounds.push_back(r);
  }
  if (!durations.empty()) {
    out.durations = DurationStats{*std::min_element(durations.begin(), durations.end()),
                                  percentile(durations, 0.5), percentile(durations, 0.9),
                                  *std::max_element(durations.begin(), durations.end())};
  }
  for (auto& [id, p] : sums) {
    const double n = p.rounds;
    p.s2c_s /= n;
    p.compute_s /= n;
    p.c2s_s /= n;
    out.clients[id] = p;
  }
  return out;
}

ReportSummary summarize(const std::filesystem::path& csv_dir) {
  const auto path = csv_dir / kRoundsCsv;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError(path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return summarize_rounds_csv(buf.str());
}

std::string report_json(const ReportSummary& s) {
  using nlohmann::json;
  json rounds = json::array();
  for (const auto& r : s.rounds)
    rounds.push_back({{"round", r.round},
                      {"n_clients", r.n_clients},
                      {"max_s2c_s", r.max_s2c_s},
                      {"round_duration_s", r.round_duration_s},
                      {"global_loss", r.global_loss},
                      {"global_accuracy", r.global_accuracy}});
  json durations = nullptr;
  if (s.durations)
    durations = {{"min", s.durations->min},
                 {"p50", s.durations->p50},
                 {"p90", s.durations->p90},
                 {"max", s.durations->max}};
  json clients = json::object();
  for (const auto& [id, p] : s.clients)
    clients[id] = {{"rounds", p.rounds},
                   {"mean_s2c_s", p.s2c_s},
                   {"mean_compute_s", p.compute_s},
                   {"mean_c2s_s", p.c2s_s}};
  json out = {{"rounds", rounds}, {"round_duration_s", durations}, {"clients", clients}};
  return out.dump(2) + "\n";
}

std::string report_text(const ReportSummary& s) {
  std::string out;
  char buf[256];
  if (s.rounds.empty()) return "empty run: no rounds recorded\n";
  std::snprintf(buf, sizeof buf, "%6s %8s %12s %14s %10s %9s\n", "round", "clients",
                "max_s2c_s", "duration_s", "loss", "accuracy");
  out += buf;
  for (const auto& r : s.rounds) {
    std::snprintf(buf, sizeof buf, "%6d %8d %12.6g %14.6g %10.6g %9.4f\n", r.round,
                  r.n_clients, r.max_s2c_s, r.round_duration_s, r.global_loss,
                  r.global_accuracy);
    out += buf;
  }
  const auto& d = *s.durations;
  std::snprintf(buf, sizeof buf, "\nround duration: min %.6g  p50 %.6g  p90 %.6g  max %.6g\n",
                d.min, d.p50, d.p90, d.max);
  out += buf;
  std::snprintf(buf, sizeof buf, "\n%-12s %6s %12s %12s %12s\n", "client", "rounds",
                "mean_s2c_s", "mean_comp_s", "mean_c2s_s");
  out += buf;
  for (const auto& [id, p] : s.clients) {
    std::snprintf(buf, sizeof buf, "%-12s %6d %12.6g %12.6g %12.6g\n", id.c_str(), p.rounds,
                  p.s2c_s, p.compute_s, p.c2s_s);
    out += buf;
  }
  return out;
}

}  // namespace flowfed
