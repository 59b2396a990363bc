#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "flowfed/fl/dataset.hpp"

namespace flowfed::fl {

struct IidPartition {
  bool operator==(const IidPartition&) const = default;
};

/// Pathological non-IID: each client receives `classes_per_client` label
/// shards.
struct ShardPartition {
  int classes_per_client = 2;
  bool operator==(const ShardPartition&) const = default;
};

struct DirichletPartition {
  double alpha = 0.5;
  bool operator==(const DirichletPartition&) const = default;
};

using PartitionSpec = std::variant<IidPartition, ShardPartition, DirichletPartition>;

const char* partition_name(const PartitionSpec& spec) noexcept;

/// assignments[k] lists the dataset indices owned by the k-th client (clients
/// in ascending id order). Assignments are disjoint and cover every index.
struct Partition {
  std::vector<std::vector<std::size_t>> assignments;
  bool operator==(const Partition&) const = default;
};

/// Throws ValidationError when the spec cannot be realized (shard
/// divisibility, more clients than samples).
Partition partition(const Dataset& data, const PartitionSpec& spec, int n_clients,
                    std::uint64_t seed);

}  // namespace flowfed::fl
