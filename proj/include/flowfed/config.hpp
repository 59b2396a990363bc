#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "flowfed/error.hpp"
#include "flowfed/fl/aggregation.hpp"
#include "flowfed/fl/dataset.hpp"
#include "flowfed/fl/model.hpp"
#include "flowfed/fl/partition.hpp"
#include "flowfed/fl/selection.hpp"
#include "flowfed/topology.hpp"
#include "flowfed/traffic.hpp"

namespace flowfed {

/// Reference-core seconds of work per sample per local epoch.
struct ComputeModel {
  double work_per_sample_s = 0.001;
  bool operator==(const ComputeModel&) const = default;
};

struct FlConfig {
  int n_clients = 4;
  int rounds = 5;
  double clients_per_round_fraction = 1.0;
  fl::SelectionStrategy selection = fl::RandomSelection{};
  fl::AggregatorSpec aggregator = fl::FedAvgSpec{};
  fl::TrainConfig train;
  fl::ModelSpec model;
  fl::DatasetSpec dataset;
  fl::PartitionSpec partition = fl::IidPartition{};
  ComputeModel compute;
  std::uint64_t seed = 42;
  bool operator==(const FlConfig&) const = default;
};

struct TopohubJsonSource {
  std::string path;
  bool operator==(const TopohubJsonSource&) const = default;
};
struct GraphMLSource {
  std::string path;
  bool operator==(const GraphMLSource&) const = default;
};
struct GeneratedSource {
  TopologyShape shape = TopologyShape::Star;
  int n_hosts = 5;
  bool operator==(const GeneratedSource&) const = default;
};
using TopologySource = std::variant<TopohubJsonSource, GraphMLSource, GeneratedSource>;

struct NetConfig {
  TopologySource topology = GeneratedSource{};
  LinkAttrs default_link;
  std::vector<TrafficFlowSpec> traffic;  // sorted by name
  NodeId server_node = "h1";
  bool operator==(const NetConfig&) const = default;
};

struct CsvSink {
  std::string dir = ".";
  bool operator==(const CsvSink&) const = default;
};
struct LogfileSink {
  std::string path = "experiment.log";
  bool operator==(const LogfileSink&) const = default;
};
struct StreamSink {
  std::string bind = "127.0.0.1:5556";
  std::size_t buffer_messages = 4096;  // per subscriber, drop-oldest beyond
  bool operator==(const StreamSink&) const = default;
};

struct GeneralConfig {
  std::optional<CsvSink> csv = CsvSink{};
  std::optional<LogfileSink> logfile = LogfileSink{};
  std::optional<StreamSink> stream;
  double metric_sample_period_s = 0.5;
  bool report = true;
  bool operator==(const GeneralConfig&) const = default;
};

struct ExperimentConfig {
  FlConfig fl;
  NetConfig net;
  GeneralConfig general;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Star of 5 hosts (server h1, clients h2..h5), 4 clients, FedAvg, IID,
/// no background traffic, CSV + logfile sinks.
ExperimentConfig default_config();

inline constexpr const char* kFlFile = "fl.toml";
inline constexpr const char* kNetFile = "net.toml";
inline constexpr const char* kGeneralFile = "general.toml";

/// Loads fl.toml, net.toml and general.toml from `dir`. Missing files are an
/// error unless `allow_defaults`, in which case that file's section keeps its
/// built-in defaults. Relative topology/trace paths resolve against `dir`.
/// Throws MissingFileError, ParseError or ValidationError (all violations).
ExperimentConfig load_config(const std::filesystem::path& dir, bool allow_defaults = false);

/// In-memory variant of load_config; a nullopt text means "use defaults".
ExperimentConfig parse_config(const std::optional<std::string>& fl_toml,
                              const std::optional<std::string>& net_toml,
                              const std::optional<std::string>& general_toml,
                              const std::filesystem::path& base_dir);

struct ConfigText {
  std::string fl;
  std::string net;
  std::string general;
};
ConfigText to_toml(const ExperimentConfig& cfg);
void write_config(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Builds the topology named by the config; a generated topology gets
/// server_node's role set to Server.
Topology resolve_topology(const NetConfig& net);

/// Every field-level invariant plus the cross-file constraints against
/// `topo`. Empty iff the configuration is runnable.
std::vector<Violation> validate(const ExperimentConfig& cfg, const Topology& topo);

/// Field-level invariants only (no topology needed).
std::vector<Violation> validate_fields(const ExperimentConfig& cfg);

}  // namespace flowfed
