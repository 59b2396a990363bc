#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowfed {

using NodeId = std::string;

enum class NodeKind { Host, Switch };
enum class NodeRole { Server, Client, TrafficEndpoint, Transit };

const char* to_string(NodeKind kind) noexcept;
const char* to_string(NodeRole role) noexcept;
std::optional<NodeKind> parse_node_kind(std::string_view s) noexcept;
std::optional<NodeRole> parse_node_role(std::string_view s) noexcept;

/// Compute capacity of a host; 1.0 cpu unit is one reference core.
struct NodeResources {
  double cpu_units = 1.0;
  double mem_mb = 1024.0;
  bool operator==(const NodeResources&) const = default;
};

struct NodeSpec {
  NodeId id;
  NodeKind kind = NodeKind::Host;
  NodeRole role = NodeRole::Transit;
  std::optional<NodeResources> resources;  // hosts only
  bool operator==(const NodeSpec&) const = default;
};

struct LinkAttrs {
  double bandwidth_mbps = 100.0;
  double delay_ms = 1.0;  // one-way propagation
  double loss_frac = 0.0;
  bool operator==(const LinkAttrs&) const = default;
};

/// Undirected link. Endpoints are stored with a < b.
struct LinkSpec {
  NodeId a;
  NodeId b;
  LinkAttrs attrs;
  bool operator==(const LinkSpec&) const = default;
};

using LinkIndex = std::size_t;

/// Validated, immutable network graph. Links are kept in canonical order
/// (sorted by endpoint pair) so that equal inputs compare equal regardless
/// of their order in a source file.
class Topology {
 public:
  Topology() = default;

  /// Canonicalizes and validates. Throws SchemaError, DuplicateLink or
  /// DisconnectedGraph.
  static Topology build(std::vector<NodeSpec> nodes, std::vector<LinkSpec> links);

  /// Canonicalizes without validating; for tests that need broken graphs.
  static Topology build_unchecked(std::vector<NodeSpec> nodes,
                                  std::vector<LinkSpec> links);

  const std::map<NodeId, NodeSpec>& nodes() const noexcept { return nodes_; }
  const std::vector<LinkSpec>& links() const noexcept { return links_; }
  const std::map<NodeId, std::vector<NodeId>>& adjacency() const noexcept {
    return adjacency_;
  }

  bool contains(const NodeId& id) const { return nodes_.count(id) != 0; }
  const NodeSpec& node(const NodeId& id) const;
  std::optional<LinkIndex> link_between(const NodeId& u, const NodeId& v) const;

  std::vector<NodeId> hosts_with_role(NodeRole role) const;
  std::vector<NodeId> hosts() const;

  /// Returns a copy with `id`'s role replaced.
  Topology with_role(const NodeId& id, NodeRole role) const;

  bool operator==(const Topology& other) const {
    return nodes_ == other.nodes_ && links_ == other.links_;
  }

 private:
  std::map<NodeId, NodeSpec> nodes_;
  std::vector<LinkSpec> links_;
  std::map<NodeId, std::vector<NodeId>> adjacency_;
  std::map<std::pair<NodeId, NodeId>, LinkIndex> link_index_;
};

/// Topology invariant check; throws on the first structural failure.
void validate_topology(const Topology& topo);

Topology parse_topohub_json(std::string_view bytes, const LinkAttrs& default_link);
Topology parse_graphml(std::string_view bytes, const LinkAttrs& default_link);

enum class TopologyShape { Star, FullMesh, Line };
const char* to_string(TopologyShape shape) noexcept;
std::optional<TopologyShape> parse_topology_shape(std::string_view s) noexcept;

/// Hosts "h1".."hN" with role Client (the caller assigns the server);
/// Star adds switch "s1".
Topology generate(TopologyShape shape, int n_hosts, const LinkAttrs& default_link);

/// A route between two nodes: the visited node sequence and the link indices
/// traversed, in travel order.
struct Route {
  std::vector<NodeId> nodes;
  std::vector<LinkIndex> links;
  std::size_t hops() const noexcept { return links.size(); }
};

/// Minimum hop count, then minimum total delay, then lexicographically
/// smallest node sequence. The route is computed from the lexicographically
/// smaller endpoint and reversed when needed, so a->b and b->a share links.
Route shortest_route(const Topology& topo, const NodeId& src, const NodeId& dst);
std::vector<LinkSpec> shortest_path(const Topology& topo, const NodeId& src,
                                    const NodeId& dst);

double path_delay_s(const Topology& topo, const Route& route);
/// 1 - prod(1 - loss_i).
double path_loss(const Topology& topo, const Route& route);

}  // namespace flowfed
