// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "switchagg/controller.hpp"
#include "switchagg/dataplane.hpp"
#include "switchagg/errors.hpp"
#include "switchagg/rng.hpp"

using namespace switchagg;

namespace {

const ConfigureBody& body_of(const Packet& p) {
  return std::get<ConfigureBody>(p.body);
}

// Random tree-shaped fabric of switches with hosts hung off random switches.
Topology random_fabric(Rng& rng, std::size_t switches, std::size_t hosts) {
  Topology t;
  std::map<NodeId, PortId> next_port;
  for (NodeId s = 1; s <= switches; ++s) t.add_node(s, NodeKind::kSwitch);
  auto link = [&](NodeId a, NodeId b) {
    t.add_link({a, next_port[a]++, b, next_port[b]++});
  };
  for (NodeId s = 2; s <= switches; ++s) {
    link(static_cast<NodeId>(1 + rng.below(s - 1)), s);
  }
  // A few extra links make equal-cost paths.
  for (int i = 0; i < 3 && switches > 2; ++i) {
    const auto a = static_cast<NodeId>(1 + rng.below(switches));
    const auto b = static_cast<NodeId>(1 + rng.below(switches));
    bool linked = a == b;
    for (const auto& [p, peer] : t.ports(a)) linked |= peer.node == b;
    if (!linked) link(a, b);
  }
  for (std::size_t h = 0; h < hosts; ++h) {
    const auto id = static_cast<NodeId>(100 + h);
    t.add_node(id, NodeKind::kHost);
    link(static_cast<NodeId>(1 + rng.below(switches)), id);
  }
  t.complete_routes();
  return t;
}

}  // namespace

TEST_CASE("single switch with three mappers") {
  const Topology topo = star_topology(4);
  Controller ctl(topo);
  const auto& plan = ctl.begin_launch(13, LaunchBody{{13}, {10, 11, 12}});
  CHECK(plan.tree_id == 1);
  REQUIRE(plan.configures.size() == 1);
  const Packet& cfg = plan.configures[0];
  CHECK(cfg.frame.src_node == 0);
  CHECK(cfg.frame.dst_node == 1);
  REQUIRE(body_of(cfg).trees.size() == 1);
  CHECK(body_of(cfg).trees[0].tree_id == 1);
  CHECK(body_of(cfg).trees[0].child_count == 3);
  CHECK(plan.tree.root_child_count == 1);
  CHECK(plan.tree.members.at(1).parent == 13);
  audit_tree(topo, plan.tree);

  CHECK(ctl.awaiting() == std::set<NodeId>{1});
  auto ack = ctl.on_ack(1);
  REQUIRE(ack);
  CHECK(ack->frame.dst_node == 13);
  CHECK(std::get<AckBody>(ack->body).ack_type == 0);
  CHECK_FALSE(ctl.launch_open());
  CHECK(ctl.trees().size() == 1);
}

TEST_CASE("mapper on the reducer host uses no switch") {
  const Topology topo = star_topology(2);
  const AggregationTree t = build_tree(topo, 10, {10}, 1);
  CHECK(t.members.empty());
  CHECK(t.root_child_count == 1);
  audit_tree(topo, t);

  const AggregationTree mixed = build_tree(topo, 10, {10, 11, 11}, 2);
  CHECK(mixed.leaves == std::vector<NodeId>{10, 11});
  CHECK(mixed.members.at(1).child_count == 1);
  CHECK(mixed.root_child_count == 2);
  audit_tree(topo, mixed);

  Controller ctl(topo);
  auto out = ctl.run_launch(10, LaunchBody{{10}, {10}}, 5,
                            [](const Packet&) -> std::optional<std::int64_t> {
                              FAIL("no configure expected");
                              return std::nullopt;
                            });
  CHECK(out.completed_ns == 5);
  CHECK(out.tree_id == 1);
}

TEST_CASE("two-switch chain") {
  const Topology topo = line_topology(2, {{10, 1}, {11, 1}, {20, 2}});
  const AggregationTree t = build_tree(topo, 20, {10, 11}, 1);
  REQUIRE(t.members.size() == 2);
  CHECK(t.members.at(1).child_count == 2);
  CHECK(t.members.at(1).parent == 2);
  CHECK(t.members.at(1).parent_port == 1);
  CHECK(t.members.at(2).child_count == 1);
  CHECK(t.members.at(2).parent == 20);
  CHECK(t.root_child_count == 1);
  audit_tree(topo, t);
}

TEST_CASE("endpoint validation") {
  const Topology topo = star_topology(2);
  CHECK_THROWS_AS(build_tree(topo, 1, {10}), ConfigError);
  CHECK_THROWS_AS(build_tree(topo, 10, {1}), ConfigError);
  CHECK_THROWS_AS(build_tree(topo, 10, {99}), ConfigError);
  CHECK_THROWS_AS(build_tree(topo, 10, {}), ConfigError);

  Topology split = star_topology(2);
  split.add_node(50, NodeKind::kHost);
  CHECK_THROWS_AS(build_tree(split, 10, {50}), DisconnectedError);

  Controller ctl(topo);
  CHECK_THROWS_AS(ctl.begin_launch(10, LaunchBody{{}, {11}}), ConfigError);
  ctl.begin_launch(10, LaunchBody{{10}, {11}});
  CHECK_THROWS_AS(ctl.begin_launch(10, LaunchBody{{10}, {11}}), ConfigError);
}

TEST_CASE("silent switch times out") {
  const Topology topo = line_topology(2, {{10, 1}, {20, 2}});
  Controller ctl(topo, {0, 1000});
  auto transport = [](const Packet& cfg) -> std::optional<std::int64_t> {
    if (cfg.frame.dst_node == 2) return std::nullopt;
    return 100;
  };
  CHECK_THROWS_AS(ctl.run_launch(20, LaunchBody{{20}, {10}}, 0, transport),
                  ConfigTimeoutError);
  CHECK_FALSE(ctl.launch_open());
  CHECK(ctl.trees().empty());

  // A late ack is a timeout too.
  auto late = [](const Packet&) -> std::optional<std::int64_t> { return 5000; };
  CHECK_THROWS_AS(ctl.run_launch(20, LaunchBody{{20}, {10}}, 0, late),
                  ConfigTimeoutError);

  auto ok = [](const Packet& cfg) -> std::optional<std::int64_t> {
    return 10 * cfg.frame.dst_node;
  };
  auto out = ctl.run_launch(20, LaunchBody{{20}, {10}}, 0, ok);
  CHECK(out.completed_ns == 20);
  CHECK(std::get<AckBody>(out.ack.body).ack_type == 0);
}

TEST_CASE("second tree re-divides switch memory") {
  const Topology topo = star_topology(4);
  Controller ctl(topo);
  SwitchState sw = make_switch_state(1, topo, GroupScheme(8, 8),
                                     SwitchMemory{1024, 1 << 20, 8});
  auto deliver = [&](const Packet& cfg) -> std::optional<std::int64_t> {
    sw = apply_configuration(sw, body_of(cfg), 0).state;
    return 1;
  };
  ctl.run_launch(13, LaunchBody{{13}, {10, 11}}, 0, deliver);
  CHECK(sw.trees.at(1).memory_share.bpe_bytes == 1 << 20);
  const auto& plan2 = ctl.begin_launch(12, LaunchBody{{12}, {10, 11, 13}});
  REQUIRE(body_of(plan2.configures[0]).trees.size() == 2);
  CHECK(body_of(plan2.configures[0]).trees[0].tree_id == 1);
  CHECK(body_of(plan2.configures[0]).trees[1].child_count == 3);
  sw = apply_configuration(sw, body_of(plan2.configures[0]), 0).state;
  CHECK(ctl.on_ack(1).has_value());
  CHECK(sw.trees.at(1).memory_share.bpe_bytes == (1 << 19));
  CHECK(sw.trees.at(2).memory_share.bpe_bytes == (1 << 19));
  CHECK(sw.trees.at(1).child_count == 2);
  CHECK(ctl.trees().size() == 2);
}

TEST_CASE("random fabrics give well-formed trees") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t switches = 1 + rng.below(8);
    const std::size_t hosts = 2 + rng.below(8);
    const Topology topo = random_fabric(rng, switches, hosts);
    const auto reducer = static_cast<NodeId>(100 + rng.below(hosts));
    std::vector<NodeId> mappers;
    for (auto n = 1 + rng.below(hosts); n > 0; --n) {
      mappers.push_back(static_cast<NodeId>(100 + rng.below(hosts)));
    }
    const AggregationTree t = build_tree(topo, reducer, mappers, 1);
    audit_tree(topo, t);
    // Every leaf reaches the root along parent links.
    for (NodeId m : t.leaves) {
      NodeId n = m;
      for (std::size_t steps = 0; n != reducer; ++steps) {
        REQUIRE(steps <= switches + 1);
        n = t.parent.at(n);
      }
    }
    // Hosts other than the mappers never appear in the tree.
    for (const auto& [node, parent] : t.parent) {
      if (topo.kind(node) == NodeKind::kHost) {
        CHECK(std::binary_search(t.leaves.begin(), t.leaves.end(), node));
      }
      if (topo.kind(parent) == NodeKind::kHost) CHECK(parent == reducer);
    }
  }
}
