// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>

#include "switchagg/dataplane.hpp"
#include "switchagg/errors.hpp"
#include "switchagg/rng.hpp"
#include "switchagg/topology.hpp"

using namespace switchagg;

TEST_CASE("linear group scheme") {
  const GroupScheme g(8, 8);
  CHECK(g.bounds() == std::vector<std::size_t>{8, 16, 24, 32, 40, 48, 56, 64});
  CHECK(group_of(1, g) == 0);
  CHECK(group_of(4, g) == 0);
  CHECK(group_of(8, g) == 0);
  CHECK(group_of(9, g) == 1);
  CHECK(g.slot_width(1) == 16);
  CHECK(group_of(64, g) == 7);
  CHECK_THROWS_AS(group_of(65, g), KeyTooLongError);
  CHECK_THROWS_AS(group_of(0, g), InvariantError);
  CHECK_THROWS_AS(GroupScheme(8, 7), ConfigError);

  // group_of is the unique i with bounds[i-1] < L <= bounds[i].
  const GroupScheme h(16, 4);
  for (std::size_t len = 1; len <= 64; ++len) {
    const std::size_t i = group_of(len, h);
    const std::size_t lo = i == 0 ? 0 : h.bound(i - 1);
    CHECK(lo < len);
    CHECK(len <= h.bound(i));
  }
}

TEST_CASE("crossbar keeps order and partitions pairs") {
  const GroupScheme g(8, 8);
  AggregationPacket p;
  p.pairs = {{"abcd", 1},
             {std::string(20, 'x'), 2},
             {std::string(64, 'y'), 3}};
  auto d = crossbar_dispatch(p, g);
  REQUIRE(d.size() == 3);
  CHECK(d[0].group == 0);
  CHECK(d[1].group == 2);
  CHECK(d[2].group == 7);

  CHECK(crossbar_dispatch(AggregationPacket{}, g).empty());

  AggregationPacket same;
  for (int i = 0; i < 100; ++i) same.pairs.push_back({std::string(10, 'k'), i});
  auto e = crossbar_dispatch(same, g);
  REQUIRE(e.size() == 100);
  for (int i = 0; i < 100; ++i) {
    CHECK(e[i].group == 1);
    CHECK(e[i].pair.value == i);
  }

  // Partition property on random packets.
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    AggregationPacket r;
    for (auto n = rng.below(30); n > 0; --n) {
      r.pairs.push_back({std::string(1 + rng.below(64), 'a'),
                         static_cast<std::int32_t>(rng.below(100))});
    }
    auto out = crossbar_dispatch(AggregationPacket(r), g);
    std::vector<KeyValuePair> back;
    for (auto& x : out) {
      CHECK(x.group == group_of(x.pair.key.size(), g));
      back.push_back(x.pair);
    }
    CHECK(back == r.pairs);
  }
}

TEST_CASE("classification") {
  CHECK(classify(Packet{{}, AggregationPacket{}}) == PacketClass::kAggregate);
  CHECK(classify(Packet{{}, LaunchBody{}}) == PacketClass::kForward);
  CHECK(classify(Packet{{}, ConfigureBody{}}) == PacketClass::kConfigure);
  CHECK(classify(Packet{{}, AckBody{1}}) == PacketClass::kAckControl);
}

TEST_CASE("configuration divides memory evenly") {
  const Topology topo = star_topology(4);
  const SwitchMemory mem{1000, 50001, 8};
  SwitchState s = make_switch_state(1, topo, GroupScheme(8, 8), mem);

  auto one = apply_configuration(s, ConfigureBody{{{1, 3}}}, 0);
  CHECK(one.state.trees.at(1).memory_share.total_bytes == mem.total());
  CHECK(one.state.trees.at(1).child_count == 3);
  CHECK(one.ack.frame.dst_node == 0);
  CHECK(std::get<AckBody>(one.ack.body).ack_type == 1);

  auto two = apply_configuration(one.state, ConfigureBody{{{1, 3}, {2, 2}}}, 0);
  for (TreeId t : {1, 2}) {
    const auto& m = two.state.trees.at(t).memory_share;
    CHECK(m.total_bytes == mem.total() / 2);
    CHECK(m.fpe_bytes_per_group == 500);
    CHECK(m.bpe_bytes == 25000);
  }
  std::size_t sum = 0;
  for (const auto& [id, t] : two.state.trees) sum += t.memory_share.total_bytes;
  CHECK(sum <= mem.total());

  CHECK_THROWS_AS(apply_configuration(s, ConfigureBody{}, 0), ConfigError);
  CHECK_THROWS_AS(apply_configuration(one.state, ConfigureBody{{{1, 2}}}, 0),
                  DuplicateTreeError);
  CHECK_THROWS_AS(apply_configuration(s, ConfigureBody{{{4, 0}}}, 0),
                  ConfigError);
  CHECK_THROWS_AS(apply_configuration(s, ConfigureBody{{{4, 1}, {4, 1}}}, 0),
                  DuplicateTreeError);
}

TEST_CASE("forwarding uses parent port for tree traffic") {
  const Topology topo = line_topology(2, {{10, 1}, {11, 1}, {20, 2}});
  SwitchState s =
      make_switch_state(1, topo, GroupScheme(8, 8), SwitchMemory{64, 0, 8});
  s = apply_configuration(s, ConfigureBody{{{3, 2}}}, 0).state;

  Packet to_reducer{{10, 20}, LaunchBody{}};
  CHECK(forward(s, to_reducer) == 1);  // toward switch 2
  Packet to_host{{20, 11}, AckBody{0}};
  CHECK(forward(s, to_host) == 3);

  resolve_parent(s, 3, 20);
  CHECK(s.trees.at(3).parent_port == PortId{1});
  Packet out{{1, 20}, AggregationPacket{3, true, AggOp::kSum, {{"a", 1}}}};
  const auto before = s.port_counters[1].out_bytes;
  CHECK(forward(s, out) == 1);
  CHECK(s.port_counters[1].out_bytes - before == encoded_size(out));

  Packet lost{{1, 99}, AckBody{0}};
  CHECK_THROWS_AS(forward(s, lost), NoRouteError);
  CHECK_THROWS_AS(resolve_parent(s, 9, 20), UnknownTreeError);
  CHECK_THROWS_AS(resolve_parent(s, 3, 99), NoRouteError);
}

TEST_CASE("pure forwarding conserves bytes") {
  const Topology topo = star_topology(3);
  SwitchState s =
      make_switch_state(1, topo, GroupScheme(8, 8), SwitchMemory{64, 0, 8});
  Rng rng(9);
  std::uint64_t in = 0;
  for (int i = 0; i < 200; ++i) {
    const NodeId src = static_cast<NodeId>(10 + rng.below(3));
    const NodeId dst = static_cast<NodeId>(10 + rng.below(3));
    Packet p{{src, dst},
             AggregationPacket{7, false, AggOp::kSum,
                               {{std::string(1 + rng.below(64), 'q'), 1}}}};
    const auto in_port = topo.route(1, src).value();
    record_ingress(s, in_port, encoded_size(p));
    in += encoded_size(p);
    forward(s, p);
  }
  std::uint64_t in_sum = 0, out_sum = 0;
  for (const auto& [port, c] : s.port_counters) {
    in_sum += c.in_bytes;
    out_sum += c.out_bytes;
  }
  CHECK(in_sum == in);
  CHECK(out_sum == in_sum);
}

TEST_CASE("topology shortest paths and json round trip") {
  // Diamond: 1 - {2,3} - 4, reducer behind 4, mapper behind 1.
  Topology t;
  for (NodeId s : {1, 2, 3, 4}) t.add_node(s, NodeKind::kSwitch);
  t.add_node(10, NodeKind::kHost);
  t.add_node(20, NodeKind::kHost);
  t.add_link({1, 0, 3, 0});
  t.add_link({1, 1, 2, 0});
  t.add_link({2, 1, 4, 1});
  t.add_link({3, 1, 4, 0});
  t.add_link({1, 2, 10, 0});
  t.add_link({4, 2, 20, 0});
  t.complete_routes();

  const PathTree spt = shortest_path_tree(t, 20);
  CHECK(spt.depth.at(10) == 4);
  CHECK(spt.parent.at(1) == 2);  // tie between 2 and 3 goes to the lower id
  CHECK(t.route(1, 20) == PortId{1});
  CHECK(t.connected());

  const Topology back = parse_topology(topology_to_json(t));
  CHECK(back.nodes() == t.nodes());
  CHECK(back.routes() == t.routes());

  Topology bad;
  CHECK_THROWS_AS(bad.add_link({1, 0, 2, 0}), ConfigError);
  bad.add_node(1, NodeKind::kSwitch);
  bad.add_node(2, NodeKind::kHost);
  bad.add_link({1, 0, 2, 0});
  CHECK_THROWS_AS(bad.add_link({1, 0, 2, 1}), ConfigError);
  CHECK_THROWS_AS(bad.add_node(1, NodeKind::kHost), ConfigError);
  CHECK_THROWS_AS(
      parse_topology(R"({"nodes":[{"id":1,"kind":"host"},{"id":2,"kind":"host"}],"links":[]})"),
      DisconnectedError);
}

TEST_CASE("hosts carry no transit traffic") {
  // Host 10 is attached to both switches; routes between them avoid it.
  Topology t;
  t.add_node(1, NodeKind::kSwitch);
  t.add_node(2, NodeKind::kSwitch);
  t.add_node(3, NodeKind::kSwitch);
  t.add_node(10, NodeKind::kHost);
  t.add_node(20, NodeKind::kHost);
  t.add_link({1, 0, 10, 0});
  t.add_link({2, 0, 10, 1});
  t.add_link({1, 1, 3, 0});
  t.add_link({3, 1, 2, 1});
  t.add_link({2, 2, 20, 0});
  t.complete_routes();
  const PathTree spt = shortest_path_tree(t, 20);
  CHECK(spt.parent.at(1) == 3);
}
