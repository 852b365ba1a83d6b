// SPDX-License-Identifier: Apache-2.0

#include "switchagg/dataplane.hpp"

#include <set>
#include <type_traits>

#include "switchagg/errors.hpp"

namespace switchagg {

GroupScheme::GroupScheme(std::size_t base_width, std::size_t group_count)
    : base_width_(base_width), group_count_(group_count) {
  if (base_width == 0 || group_count == 0) {
    throw ConfigError("group scheme needs a positive base width and count");
  }
  if (base_width * group_count < kMaxKeyBytes) {
    throw ConfigError("group scheme must cover keys up to 64 bytes");
  }
}

std::vector<std::size_t> GroupScheme::bounds() const {
  std::vector<std::size_t> out;
  out.reserve(group_count_);
  for (std::size_t i = 0; i < group_count_; ++i) out.push_back(bound(i));
  return out;
}

std::size_t group_of(std::size_t key_len, const GroupScheme& scheme) {
  if (key_len == 0) throw InvariantError("empty key");
  if (key_len > scheme.max_key_len()) {
    throw KeyTooLongError("key length " + std::to_string(key_len) +
                          " exceeds last group bound " +
                          std::to_string(scheme.max_key_len()));
  }
  return (key_len - 1) / scheme.base_width();
}

std::vector<DispatchedPair> crossbar_dispatch(const AggregationPacket& packet,
                                              const GroupScheme& scheme) {
  std::vector<DispatchedPair> out;
  out.reserve(packet.pairs.size());
  for (const auto& p : packet.pairs) {
    out.push_back({group_of(p.key.size(), scheme), p});
  }
  return out;
}

std::vector<DispatchedPair> crossbar_dispatch(AggregationPacket&& packet,
                                              const GroupScheme& scheme) {
  std::vector<DispatchedPair> out;
  out.reserve(packet.pairs.size());
  for (auto& p : packet.pairs) {
    const std::size_t g = group_of(p.key.size(), scheme);
    out.push_back({g, std::move(p)});
  }
  packet.pairs.clear();
  return out;
}

SwitchState make_switch_state(NodeId id, const Topology& topo,
                              const GroupScheme& groups,
                              const SwitchMemory& memory) {
  SwitchState s;
  s.switch_id = id;
  s.groups = groups;
  s.memory = memory;
  s.memory.group_count = groups.group_count();
  if (auto it = topo.routes().find(id); it != topo.routes().end()) {
    s.routing_table = it->second;
  }
  for (const auto& [port, peer] : topo.ports(id)) s.port_counters[port];
  return s;
}

PacketClass classify(const Packet& packet) {
  return std::visit(
      [](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, AggregationPacket>) {
          return PacketClass::kAggregate;
        } else if constexpr (std::is_same_v<T, ConfigureBody>) {
          return PacketClass::kConfigure;
        } else if constexpr (std::is_same_v<T, AckBody>) {
          return PacketClass::kAckControl;
        } else {
          return PacketClass::kForward;
        }
      },
      packet.body);
}

ConfigureResult apply_configuration(const SwitchState& state,
                                    const ConfigureBody& cfg,
                                    NodeId controller) {
  if (cfg.trees.empty()) {
    throw ConfigError("configure packet lists no trees");
  }
  SwitchState next = state;
  std::set<TreeId> seen;
  for (const auto& entry : cfg.trees) {
    if (entry.child_count == 0) {
      throw ConfigError("tree " + std::to_string(entry.tree_id) +
                        " configured with zero children");
    }
    if (!seen.insert(entry.tree_id).second) {
      throw DuplicateTreeError("tree " + std::to_string(entry.tree_id) +
                               " listed twice");
    }
    auto it = next.trees.find(entry.tree_id);
    if (it != next.trees.end()) {
      if (it->second.child_count != entry.child_count) {
        throw DuplicateTreeError(
            "tree " + std::to_string(entry.tree_id) +
            " already configured with child_count " +
            std::to_string(it->second.child_count));
      }
      continue;
    }
    TreeConfig tree;
    tree.tree_id = entry.tree_id;
    tree.child_count = entry.child_count;
    next.trees.emplace(entry.tree_id, tree);
  }

  const std::size_t n = next.trees.size();
  TreeMemory share;
  share.total_bytes = state.memory.total() / n;
  share.fpe_bytes_per_group = state.memory.fpe_bytes_per_group / n;
  share.bpe_bytes = state.memory.bpe_bytes / n;
  for (auto& [id, tree] : next.trees) tree.memory_share = share;

  Packet ack{Frame{state.switch_id, controller}, AckBody{1}};
  return {std::move(next), std::move(ack)};
}

void resolve_parent(SwitchState& state, TreeId tree, NodeId root) {
  auto it = state.trees.find(tree);
  if (it == state.trees.end()) {
    throw UnknownTreeError("tree " + std::to_string(tree) +
                           " is not configured");
  }
  auto route = state.routing_table.find(root);
  if (route == state.routing_table.end()) {
    throw NoRouteError("switch " + std::to_string(state.switch_id) +
                       " has no route to tree root " + std::to_string(root));
  }
  it->second.root = root;
  it->second.parent_port = route->second;
}

PortId forward(SwitchState& state, const Packet& packet) {
  std::optional<PortId> port;
  if (const auto* agg = std::get_if<AggregationPacket>(&packet.body)) {
    auto it = state.trees.find(agg->tree_id);
    if (it != state.trees.end() && it->second.parent_port &&
        it->second.root == packet.frame.dst_node) {
      port = it->second.parent_port;
    }
  }
  if (!port) {
    auto route = state.routing_table.find(packet.frame.dst_node);
    if (route == state.routing_table.end()) {
      throw NoRouteError("switch " + std::to_string(state.switch_id) +
                         " has no route to node " +
                         std::to_string(packet.frame.dst_node));
    }
    port = route->second;
  }
  state.port_counters[*port].out_bytes += encoded_size(packet);
  return *port;
}

void record_ingress(SwitchState& state, PortId port, std::size_t bytes) {
  state.port_counters[port].in_bytes += bytes;
}

}  // namespace switchagg
