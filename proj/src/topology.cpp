#include "flowfed/topology.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "flowfed/error.hpp"

namespace flowfed {

namespace {

Error schema_error(const std::string& path, const std::string& what) {
  return Error(ErrorCode::Schema, "schema error at " + path + ": " + what);
}

void check_link_attrs(const LinkAttrs& attrs, const std::string& where) {
  if (!(attrs.bandwidth_mbps > 0.0) || !std::isfinite(attrs.bandwidth_mbps))
    throw schema_error(where + ".bw", "bandwidth must be > 0");
  if (!(attrs.delay_ms >= 0.0) || !std::isfinite(attrs.delay_ms))
    throw schema_error(where + ".delay", "delay must be >= 0");
  if (!(attrs.loss_frac >= 0.0 && attrs.loss_frac < 1.0))
    throw schema_error(where + ".loss", "loss must be in [0, 1)");
}

}  // namespace

const char* to_string(NodeKind kind) noexcept {
  return kind == NodeKind::Host ? "host" : "switch";
}

const char* to_string(NodeRole role) noexcept {
  switch (role) {
    case NodeRole::Server: return "server";
    case NodeRole::Client: return "client";
    case NodeRole::TrafficEndpoint: return "traffic";
    case NodeRole::Transit: return "transit";
  }
  return "transit";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) noexcept {
  if (s == "host") return NodeKind::Host;
  if (s == "switch") return NodeKind::Switch;
  return std::nullopt;
}

std::optional<NodeRole> parse_node_role(std::string_view s) noexcept {
  if (s == "server") return NodeRole::Server;
  if (s == "client") return NodeRole::Client;
  if (s == "traffic") return NodeRole::TrafficEndpoint;
  if (s == "transit") return NodeRole::Transit;
  return std::nullopt;
}

const char* to_string(TopologyShape shape) noexcept {
  switch (shape) {
    case TopologyShape::Star: return "star";
    case TopologyShape::FullMesh: return "full_mesh";
    case TopologyShape::Line: return "line";
  }
  return "star";
}

std::optional<TopologyShape> parse_topology_shape(std::string_view s) noexcept {
  if (s == "star") return TopologyShape::Star;
  if (s == "full_mesh") return TopologyShape::FullMesh;
  if (s == "line") return TopologyShape::Line;
  return std::nullopt;
}

Topology Topology::build_unchecked(std::vector<NodeSpec> nodes,
                                   std::vector<LinkSpec> links) {
  Topology t;
  for (auto& n : nodes) {
    if (n.kind == NodeKind::Host && !n.resources) n.resources = NodeResources{};
    auto id = n.id;
    if (!t.nodes_.emplace(id, std::move(n)).second)
      throw schema_error("nodes[" + id + "]", "duplicate node id");
  }
  for (auto& l : links) {
    if (l.b < l.a) std::swap(l.a, l.b);
  }
  std::stable_sort(links.begin(), links.end(),
                   [](const LinkSpec& x, const LinkSpec& y) {
                     return std::tie(x.a, x.b) < std::tie(y.a, y.b);
                   });
  t.links_ = std::move(links);
  for (const auto& [id, _] : t.nodes_) t.adjacency_[id];
  for (LinkIndex i = 0; i < t.links_.size(); ++i) {
    const auto& l = t.links_[i];
    if (!t.link_index_.emplace(std::make_pair(l.a, l.b), i).second)
      throw Error(ErrorCode::DuplicateLink,
                  "duplicate link between " + l.a + " and " + l.b);
    t.adjacency_[l.a].push_back(l.b);
    t.adjacency_[l.b].push_back(l.a);
  }
  for (auto& [_, nbrs] : t.adjacency_) std::sort(nbrs.begin(), nbrs.end());
  return t;
}

Topology Topology::build(std::vector<NodeSpec> nodes, std::vector<LinkSpec> links) {
  Topology t = build_unchecked(std::move(nodes), std::move(links));
  validate_topology(t);
  return t;
}

const NodeSpec& Topology::node(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end())
    throw Error(ErrorCode::InvalidArgs, "unknown node: " + id);
  return it->second;
}

std::optional<LinkIndex> Topology::link_between(const NodeId& u,
                                                const NodeId& v) const {
  auto key = u < v ? std::make_pair(u, v) : std::make_pair(v, u);
  auto it = link_index_.find(key);
  if (it == link_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> Topology::hosts_with_role(NodeRole role) const {
  std::vector<NodeId> out;
  for (const auto& [id, n] : nodes_)
    if (n.kind == NodeKind::Host && n.role == role) out.push_back(id);
  return out;
}

std::vector<NodeId> Topology::hosts() const {
  std::vector<NodeId> out;
  for (const auto& [id, n] : nodes_)
    if (n.kind == NodeKind::Host) out.push_back(id);
  return out;
}

Topology Topology::with_role(const NodeId& id, NodeRole role) const {
  Topology copy = *this;
  auto it = copy.nodes_.find(id);
  if (it == copy.nodes_.end())
    throw Error(ErrorCode::InvalidArgs, "unknown node: " + id);
  it->second.role = role;
  return copy;
}

void validate_topology(const Topology& topo) {
  const auto& nodes = topo.nodes();
  if (nodes.empty()) throw schema_error("nodes", "topology has no nodes");
  bool any_host = false;
  for (const auto& [id, n] : nodes) {
    if (id.empty()) throw schema_error("nodes", "empty node id");
    if (n.kind == NodeKind::Switch) {
      if (n.resources) throw schema_error("nodes[" + id + "].resources",
                                          "switches carry no resources");
      if (n.role != NodeRole::Transit)
        throw schema_error("nodes[" + id + "].role", "switches carry no role");
    } else {
      any_host = true;
      const auto& r = *n.resources;
      if (!(r.cpu_units > 0.0) || !(r.mem_mb > 0.0))
        throw schema_error("nodes[" + id + "].resources",
                           "cpu_units and mem_mb must be > 0");
    }
  }
  if (!any_host) throw schema_error("nodes", "no host node");

  for (std::size_t i = 0; i < topo.links().size(); ++i) {
    const auto& l = topo.links()[i];
    const std::string where = "links[" + l.a + "-" + l.b + "]";
    if (l.a == l.b) throw schema_error(where, "self-loop");
    if (!topo.contains(l.a) || !topo.contains(l.b))
      throw schema_error(where, "endpoint is not a node");
    check_link_attrs(l.attrs, where);
  }

  // Keep the largest component (ties: the one holding the smallest id) and
  // report everything else as unreachable.
  std::set<NodeId> seen;
  std::set<NodeId> best;
  for (const auto& [root, _] : nodes) {
    if (seen.count(root)) continue;
    std::set<NodeId> comp{root};
    std::deque<NodeId> queue{root};
    while (!queue.empty()) {
      auto u = queue.front();
      queue.pop_front();
      for (const auto& v : topo.adjacency().at(u))
        if (comp.insert(v).second) queue.push_back(v);
    }
    seen.insert(comp.begin(), comp.end());
    if (comp.size() > best.size()) best = std::move(comp);
  }
  if (best.size() != nodes.size()) {
    std::vector<NodeId> unreachable;
    for (const auto& [id, _] : nodes)
      if (!best.count(id)) unreachable.push_back(id);
    throw DisconnectedGraphError(std::move(unreachable));
  }
}

Topology parse_topohub_json(std::string_view bytes, const LinkAttrs& default_link) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw schema_error("$", e.what());
  }
  if (!doc.is_object()) throw schema_error("$", "expected an object");
  if (!doc.contains("nodes") || !doc["nodes"].is_array())
    throw schema_error("$.nodes", "expected an array");
  if (doc.contains("links") && !doc["links"].is_array())
    throw schema_error("$.links", "expected an array");

  auto number = [](const json& obj, const char* key, const std::string& path,
                   double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw schema_error(path + "." + key, "expected a number");
    return v.get<double>();
  };
  auto string = [](const json& obj, const char* key, const std::string& path)
      -> std::optional<std::string> {
    if (!obj.contains(key)) return std::nullopt;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw schema_error(path + "." + key, "expected a string");
    return v.get<std::string>();
  };

  std::vector<NodeSpec> nodes;
  const auto& jnodes = doc["nodes"];
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const auto& jn = jnodes[i];
    const std::string path = "$.nodes[" + std::to_string(i) + "]";
    if (!jn.is_object()) throw schema_error(path, "expected an object");
    NodeSpec n;
    auto id = string(jn, "id", path);
    if (!id) throw schema_error(path + ".id", "missing");
    n.id = *id;
    if (auto k = string(jn, "kind", path)) {
      auto kind = parse_node_kind(*k);
      if (!kind) throw schema_error(path + ".kind", "unknown kind '" + *k + "'");
      n.kind = *kind;
    }
    if (auto r = string(jn, "role", path)) {
      auto role = parse_node_role(*r);
      if (!role) throw schema_error(path + ".role", "unknown role '" + *r + "'");
      n.role = *role;
    }
    if (jn.contains("resources")) {
      const auto& jr = jn["resources"];
      if (!jr.is_object()) throw schema_error(path + ".resources", "expected an object");
      NodeResources res;
      res.cpu_units = number(jr, "cpu_units", path + ".resources", res.cpu_units);
      res.mem_mb = number(jr, "mem_mb", path + ".resources", res.mem_mb);
      n.resources = res;
    }
    nodes.push_back(std::move(n));
  }

  std::vector<LinkSpec> links;
  if (doc.contains("links")) {
    const auto& jlinks = doc["links"];
    for (std::size_t i = 0; i < jlinks.size(); ++i) {
      const auto& jl = jlinks[i];
      const std::string path = "$.links[" + std::to_string(i) + "]";
      if (!jl.is_object()) throw schema_error(path, "expected an object");
      LinkSpec l;
      auto a = string(jl, "a", path);
      auto b = string(jl, "b", path);
      if (!a) throw schema_error(path + ".a", "missing");
      if (!b) throw schema_error(path + ".b", "missing");
      l.a = *a;
      l.b = *b;
      l.attrs.bandwidth_mbps = number(jl, "bw", path, default_link.bandwidth_mbps);
      l.attrs.delay_ms = number(jl, "delay", path, default_link.delay_ms);
      l.attrs.loss_frac = number(jl, "loss", path, default_link.loss_frac);
      links.push_back(std::move(l));
    }
  }
  return Topology::build(std::move(nodes), std::move(links));
}

namespace {

double parse_graphml_number(const std::string& text, const std::string& path) {
  std::string s = text;
  auto first = s.find_first_not_of(" \t\r\n");
  auto last = s.find_last_not_of(" \t\r\n");
  if (first == std::string::npos) throw schema_error(path, "empty numeric value");
  s = s.substr(first, last - first + 1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw schema_error(path, "not a number: '" + s + "'");
  return v;
}

}  // namespace

Topology parse_graphml(std::string_view bytes, const LinkAttrs& default_link) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    std::istringstream in{std::string(bytes)};
    pt::read_xml(in, doc, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw schema_error("graphml", e.what());
  }
  auto root = doc.get_child_optional("graphml");
  if (!root) throw schema_error("graphml", "missing <graphml> root element");
  auto graph = root->get_child_optional("graph");
  if (!graph) throw schema_error("graphml.graph", "missing <graph> element");

  // key id -> attr.name; data elements may also reference a name directly.
  std::map<std::string, std::string> key_names;
  for (const auto& [tag, child] : *root) {
    if (tag != "key") continue;
    auto id = child.get_optional<std::string>("<xmlattr>.id");
    if (!id) continue;
    // "attr.name" contains the default path separator.
    key_names[*id] = child.get<std::string>(pt::ptree::path_type("<xmlattr>|attr.name", '|'), *id);
  }
  auto data_of = [&](const pt::ptree& elem) {
    std::map<std::string, std::string> out;
    for (const auto& [tag, child] : elem) {
      if (tag != "data") continue;
      auto key = child.get_optional<std::string>("<xmlattr>.key");
      if (!key) continue;
      auto it = key_names.find(*key);
      out[it == key_names.end() ? *key : it->second] = child.data();
    }
    return out;
  };

  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::size_t edge_no = 0;
  for (const auto& [tag, child] : *graph) {
    if (tag == "node") {
      auto id = child.get_optional<std::string>("<xmlattr>.id");
      if (!id) throw schema_error("graphml.node", "node without id");
      NodeSpec n;
      n.id = *id;
      n.kind = NodeKind::Host;
      n.role = NodeRole::Transit;
      auto data = data_of(child);
      if (auto it = data.find("role"); it != data.end()) {
        auto role = parse_node_role(it->second);
        if (!role)
          throw schema_error("graphml.node[" + *id + "].role",
                             "unknown role '" + it->second + "'");
        n.role = *role;
      }
      nodes.push_back(std::move(n));
    } else if (tag == "edge") {
      const std::string path = "graphml.edge[" + std::to_string(edge_no++) + "]";
      auto src = child.get_optional<std::string>("<xmlattr>.source");
      auto dst = child.get_optional<std::string>("<xmlattr>.target");
      if (!src || !dst) throw schema_error(path, "edge without source/target");
      LinkSpec l{*src, *dst, default_link};
      auto data = data_of(child);
      if (auto it = data.find("bandwidth"); it != data.end())
        l.attrs.bandwidth_mbps = parse_graphml_number(it->second, path + ".bandwidth");
      if (auto it = data.find("delay"); it != data.end())
        l.attrs.delay_ms = parse_graphml_number(it->second, path + ".delay");
      if (auto it = data.find("loss"); it != data.end())
        l.attrs.loss_frac = parse_graphml_number(it->second, path + ".loss");
      links.push_back(std::move(l));
    }
  }
  return Topology::build(std::move(nodes), std::move(links));
}

Topology generate(TopologyShape shape, int n_hosts, const LinkAttrs& default_link) {
  if (n_hosts < 2)
    throw Error(ErrorCode::InvalidCount,
                "generated topology needs at least 2 hosts, got " +
                    std::to_string(n_hosts));
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  auto host = [](int i) { return "h" + std::to_string(i); };
  for (int i = 1; i <= n_hosts; ++i)
    nodes.push_back(NodeSpec{host(i), NodeKind::Host, NodeRole::Client, NodeResources{}});
  switch (shape) {
    case TopologyShape::Star:
      nodes.push_back(NodeSpec{"s1", NodeKind::Switch, NodeRole::Transit, std::nullopt});
      for (int i = 1; i <= n_hosts; ++i) links.push_back({host(i), "s1", default_link});
      break;
    case TopologyShape::FullMesh:
      for (int i = 1; i <= n_hosts; ++i)
        for (int j = i + 1; j <= n_hosts; ++j)
          links.push_back({host(i), host(j), default_link});
      break;
    case TopologyShape::Line:
      for (int i = 1; i < n_hosts; ++i) links.push_back({host(i), host(i + 1), default_link});
      break;
  }
  return Topology::build(std::move(nodes), std::move(links));
}

Route shortest_route(const Topology& topo, const NodeId& src, const NodeId& dst) {
  if (!topo.contains(src) || !topo.contains(dst))
    throw Error(ErrorCode::InvalidArgs, "route endpoint not in topology");
  if (src == dst) throw Error(ErrorCode::InvalidArgs, "route needs src != dst");
  const bool reversed = dst < src;
  const NodeId& from = reversed ? dst : src;
  const NodeId& to = reversed ? src : dst;

  // Layered label setting: hop count dominates, so labels are only compared
  // among paths of equal length, where (delay, node sequence) order is
  // preserved by extension.
  struct Label {
    double delay;
    std::vector<NodeId> seq;
  };
  std::map<NodeId, Label> labels;
  labels[from] = Label{0.0, {from}};
  std::vector<NodeId> frontier{from};
  std::set<NodeId> visited{from};
  while (!frontier.empty() && !labels.count(to)) {
    std::map<NodeId, Label> next;
    for (const auto& u : frontier) {
      const Label& lu = labels.at(u);
      for (const auto& v : topo.adjacency().at(u)) {
        if (visited.count(v)) continue;
        const auto& link = topo.links()[*topo.link_between(u, v)];
        Label cand{lu.delay + link.attrs.delay_ms, lu.seq};
        cand.seq.push_back(v);
        auto it = next.find(v);
        if (it == next.end()) {
          next.emplace(v, std::move(cand));
        } else if (cand.delay < it->second.delay ||
                   (cand.delay == it->second.delay && cand.seq < it->second.seq)) {
          it->second = std::move(cand);
        }
      }
    }
    frontier.clear();
    for (auto& [v, label] : next) {
      visited.insert(v);
      frontier.push_back(v);
      labels.emplace(v, std::move(label));
    }
  }
  auto it = labels.find(to);
  if (it == labels.end())
    throw Error(ErrorCode::NoPath, "no path between " + src + " and " + dst);

  Route route;
  route.nodes = it->second.seq;
  if (reversed) std::reverse(route.nodes.begin(), route.nodes.end());
  for (std::size_t i = 0; i + 1 < route.nodes.size(); ++i)
    route.links.push_back(*topo.link_between(route.nodes[i], route.nodes[i + 1]));
  return route;
}

std::vector<LinkSpec> shortest_path(const Topology& topo, const NodeId& src,
                                    const NodeId& dst) {
  std::vector<LinkSpec> out;
  for (auto idx : shortest_route(topo, src, dst).links) out.push_back(topo.links()[idx]);
  return out;
}

double path_delay_s(const Topology& topo, const Route& route) {
  double ms = 0.0;
  for (auto idx : route.links) ms += topo.links()[idx].attrs.delay_ms;
  return ms / 1000.0;
}

double path_loss(const Topology& topo, const Route& route) {
  double keep = 1.0;
  for (auto idx : route.links) keep *= 1.0 - topo.links()[idx].attrs.loss_frac;
  return 1.0 - keep;
}

}  // namespace flowfed
