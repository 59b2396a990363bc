#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "flowfed/error.hpp"
#include "flowfed/topology.hpp"

using namespace flowfed;

namespace {

const LinkAttrs kDefaults{100.0, 1.0, 0.0};

const char* kTwoHosts = R"({
  "nodes": [{"id": "a", "kind": "host", "role": "server"},
            {"id": "b", "kind": "host", "role": "client"}],
  "links": [{"a": "a", "b": "b", "bw": 100, "delay": 5, "loss": 0}]
})";

const char* kTwoHostsReversed = R"({
  "nodes": [{"id": "b", "kind": "host", "role": "client"},
            {"id": "a", "kind": "host", "role": "server"}],
  "links": [{"a": "b", "b": "a", "bw": 100, "delay": 5, "loss": 0}]
})";

NodeSpec host(const std::string& id, NodeRole role = NodeRole::Client) {
  return NodeSpec{id, NodeKind::Host, role, NodeResources{}};
}

LinkSpec link(const std::string& a, const std::string& b, double delay_ms,
              double bw = 100.0, double loss = 0.0) {
  return LinkSpec{a, b, LinkAttrs{bw, delay_ms, loss}};
}

std::set<LinkIndex> link_set(const Route& r) { return {r.links.begin(), r.links.end()}; }

}  // namespace

TEST_SUITE("topology") {

TEST_CASE("minimal json graph") {
  const auto t = parse_topohub_json(kTwoHosts, kDefaults);
  CHECK(t.nodes().size() == 2);
  REQUIRE(t.links().size() == 1);
  CHECK(t.links()[0].attrs == LinkAttrs{100, 5, 0});
  CHECK(t.adjacency().at("a") == std::vector<NodeId>{"b"});
  CHECK(t.adjacency().at("b") == std::vector<NodeId>{"a"});
}

TEST_CASE("node and link order do not matter") {
  CHECK(parse_topohub_json(kTwoHosts, kDefaults) ==
        parse_topohub_json(kTwoHostsReversed, kDefaults));
}

TEST_CASE("isolated node is reported") {
  const char* json = R"({
    "nodes": [{"id": "a", "kind": "host"}, {"id": "b", "kind": "host"},
              {"id": "lonely", "kind": "host"}],
    "links": [{"a": "a", "b": "b"}]
  })";
  try {
    parse_topohub_json(json, kDefaults);
    FAIL("expected DisconnectedGraph");
  } catch (const DisconnectedGraphError& e) {
    CHECK(e.code() == ErrorCode::DisconnectedGraph);
    CHECK(e.unreachable() == std::vector<std::string>{"lonely"});
  }
}

TEST_CASE("json schema errors") {
  CHECK_THROWS_AS(parse_topohub_json("{", kDefaults), Error);
  try {
    parse_topohub_json(R"({"nodes": [{"kind": "host"}]})", kDefaults);
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Schema);
  }
  try {
    parse_topohub_json(R"({"nodes": [{"id": "a"}, {"id": "b"}],
      "links": [{"a": "a", "b": "b"}, {"a": "b", "b": "a"}]})", kDefaults);
    FAIL("expected duplicate link");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateLink);
  }
  try {
    parse_topohub_json(R"({"nodes": [{"id": "a"}, {"id": "b"}],
      "links": [{"a": "a", "b": "b", "bw": -3}]})", kDefaults);
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Schema);
  }
}

TEST_CASE("graphml without data keys takes defaults") {
  const char* xml = R"(<?xml version="1.0"?>
<graphml><graph edgedefault="undirected">
  <node id="x"/><node id="y"/>
  <edge source="x" target="y"/>
</graph></graphml>)";
  const auto t = parse_graphml(xml, kDefaults);
  REQUIRE(t.links().size() == 1);
  CHECK(t.links()[0].attrs == kDefaults);
  CHECK(t.node("x").kind == NodeKind::Host);
  CHECK(t.node("x").role == NodeRole::Transit);
}

TEST_CASE("graphml bandwidth key maps to Mbps") {
  const char* xml = R"(<?xml version="1.0"?>
<graphml>
  <key id="k0" for="edge" attr.name="bandwidth" attr.type="double"/>
  <key id="k9" for="edge" attr.name="colour" attr.type="string"/>
  <graph edgedefault="undirected">
    <node id="x"/><node id="y"/>
    <edge source="x" target="y"><data key="k0">50</data><data key="k9">red</data></edge>
  </graph>
</graphml>)";
  const auto t = parse_graphml(xml, kDefaults);
  CHECK(t.links()[0].attrs.bandwidth_mbps == 50.0);
  CHECK(t.links()[0].attrs.delay_ms == 1.0);
}

TEST_CASE("malformed graphml") {
  try {
    parse_graphml("<graphml><graph><node id=", kDefaults);
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Schema);
  }
}

TEST_CASE("generated shapes") {
  auto star = generate(TopologyShape::Star, 4, kDefaults);
  CHECK(star.nodes().size() == 5);
  CHECK(star.links().size() == 4);
  CHECK(star.contains("s1"));
  CHECK(star.node("s1").kind == NodeKind::Switch);
  CHECK(star.hosts() == std::vector<NodeId>{"h1", "h2", "h3", "h4"});
  CHECK(generate(TopologyShape::FullMesh, 4, kDefaults).links().size() == 6);
  CHECK(generate(TopologyShape::Line, 2, kDefaults).links().size() == 1);
  for (int n : {0, 1, -5}) {
    try {
      generate(TopologyShape::Line, n, kDefaults);
      FAIL("expected InvalidCount");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidCount);
    }
  }
}

TEST_CASE("star route goes through the switch") {
  auto star = generate(TopologyShape::Star, 4, kDefaults);
  const auto path = shortest_path(star, "h1", "h2");
  REQUIRE(path.size() == 2);
  CHECK(shortest_route(star, "h1", "h2").nodes == std::vector<NodeId>{"h1", "s1", "h2"});
}

TEST_CASE("fewer hops beat lower delay") {
  auto t = Topology::build({host("h1"), host("h2"), host("h3")},
                           {link("h1", "h3", 10), link("h1", "h2", 2), link("h2", "h3", 2)});
  const auto r = shortest_route(t, "h1", "h3");
  CHECK(r.nodes == std::vector<NodeId>{"h1", "h3"});
}

TEST_CASE("equal hops prefer lower delay") {
  auto t = Topology::build({host("a"), host("m"), host("n"), host("z")},
                           {link("a", "m", 5), link("m", "z", 5), link("a", "n", 1),
                            link("n", "z", 1)});
  CHECK(shortest_route(t, "a", "z").nodes == std::vector<NodeId>{"a", "n", "z"});
}

TEST_CASE("square tie goes to the smaller middle node") {
  auto t = Topology::build({host("a"), host("m2"), host("m1"), host("z")},
                           {link("a", "m2", 1), link("m2", "z", 1), link("a", "m1", 1),
                            link("m1", "z", 1)});
  CHECK(shortest_route(t, "a", "z").nodes == std::vector<NodeId>{"a", "m1", "z"});
  CHECK(shortest_route(t, "z", "a").nodes == std::vector<NodeId>{"z", "m1", "a"});
}

TEST_CASE("routes are symmetric on random graphs") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 4 + trial % 5;
    std::vector<NodeSpec> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back(host("n" + std::to_string(i)));
    std::vector<LinkSpec> links;
    std::set<std::pair<int, int>> used;
    for (int i = 1; i < n; ++i) {
      const int j = std::uniform_int_distribution<int>(0, i - 1)(rng);
      used.insert({j, i});
    }
    for (int extra = 0; extra < n; ++extra) {
      int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
      int b = std::uniform_int_distribution<int>(0, n - 1)(rng);
      if (a == b) continue;
      used.insert({std::min(a, b), std::max(a, b)});
    }
    for (auto [a, b] : used)
      links.push_back(link("n" + std::to_string(a), "n" + std::to_string(b),
                           std::uniform_int_distribution<int>(1, 3)(rng)));
    const auto t = Topology::build(nodes, links);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        const auto ab = shortest_route(t, "n" + std::to_string(a), "n" + std::to_string(b));
        const auto ba = shortest_route(t, "n" + std::to_string(b), "n" + std::to_string(a));
        CHECK(link_set(ab) == link_set(ba));
        auto rev = ba.nodes;
        std::reverse(rev.begin(), rev.end());
        CHECK(ab.nodes == rev);
      }
    for (const auto& [id, nbrs] : t.adjacency())
      for (const auto& m : nbrs) {
        const auto& back = t.adjacency().at(m);
        CHECK(std::find(back.begin(), back.end(), id) != back.end());
      }
  }
}

TEST_CASE("path loss compounds") {
  auto t = Topology::build({host("a"), host("b"), host("c")},
                           {link("a", "b", 1, 100, 0.01), link("b", "c", 1, 100, 0.02)});
  const auto r = shortest_route(t, "a", "c");
  CHECK(path_loss(t, r) == doctest::Approx(0.0298).epsilon(1e-12));
  CHECK(path_delay_s(t, r) == doctest::Approx(0.002));
}

TEST_CASE("parsing is pure") {
  CHECK(parse_topohub_json(kTwoHosts, kDefaults) == parse_topohub_json(kTwoHosts, kDefaults));
}

}  // TEST_SUITE
