#pragma once

#include <map>
#include <variant>
#include <vector>

#include "flowfed/seed.hpp"
#include "flowfed/topology.hpp"

namespace flowfed::fl {

struct RandomSelection {
  bool operator==(const RandomSelection&) const = default;
};

/// top_k_by_cpu: the k clients with the most cpu_units (ties by id).
/// Otherwise a weighted draw without replacement, weight = cpu_units.
struct ResourceAwareSelection {
  bool top_k_by_cpu = true;
  bool operator==(const ResourceAwareSelection&) const = default;
};

using SelectionStrategy = std::variant<RandomSelection, ResourceAwareSelection>;

struct ClientState {
  NodeResources resources;
  bool available = true;
};

/// ceil(fraction * n) with a guard against float noise such as 0.3*10.
std::size_t selection_size(double fraction, std::size_t n_clients);

/// Returns the selected ids in ascending order. Only available clients are
/// eligible; k is computed over all clients and capped by availability.
std::vector<NodeId> select_clients(const SelectionStrategy& strategy,
                                   const std::map<NodeId, ClientState>& clients,
                                   double fraction, Rng& rng);

}  // namespace flowfed::fl
