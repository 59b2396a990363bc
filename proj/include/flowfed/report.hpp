#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowfed {

struct RoundSummary {
  int round = 0;
  int n_clients = 0;
  double max_s2c_s = 0.0;
  double round_duration_s = 0.0;
  double global_loss = 0.0;
  double global_accuracy = 0.0;
};

struct DurationStats {
  double min = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double max = 0.0;
};

struct PhaseMeans {
  int rounds = 0;  // rounds this client took part in
  double s2c_s = 0.0;
  double compute_s = 0.0;
  double c2s_s = 0.0;
};

struct ReportSummary {
  std::vector<RoundSummary> rounds;        // ascending round
  std::optional<DurationStats> durations;  // absent for an empty run
  std::map<std::string, PhaseMeans> clients;
};

/// Linear-interpolation percentile of an unsorted sample, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// Pure function of rounds.csv bytes. Throws Error(Schema) on a header or
/// row mismatch.
ReportSummary summarize_rounds_csv(std::string_view csv);

/// Reads <dir>/rounds.csv. Throws MissingFileError if absent.
ReportSummary summarize(const std::filesystem::path& csv_dir);

std::string report_json(const ReportSummary& summary);
std::string report_text(const ReportSummary& summary);

}  // namespace flowfed
