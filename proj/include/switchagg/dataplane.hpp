// SPDX-License-Identifier: Apache-2.0
//
// Per-switch packet handling ahead of the processing engines: header
// classification, static forwarding, tree configuration and the payload
// analyzer that sorts pairs into key-length groups.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "switchagg/topology.hpp"
#include "switchagg/wire.hpp"

namespace switchagg {

/// Linear key-length classes: group i holds keys with
/// bounds[i-1] < len <= bounds[i], where bounds[i] = (i + 1) * base_width.
class GroupScheme {
 public:
  GroupScheme() = default;
  GroupScheme(std::size_t base_width, std::size_t group_count);

  std::size_t base_width() const { return base_width_; }
  std::size_t group_count() const { return group_count_; }
  std::size_t bound(std::size_t group) const {
    return (group + 1) * base_width_;
  }
  std::size_t slot_width(std::size_t group) const { return bound(group); }
  std::size_t max_key_len() const { return bound(group_count_ - 1); }
  std::vector<std::size_t> bounds() const;

  friend bool operator==(const GroupScheme&, const GroupScheme&) = default;

 private:
  std::size_t base_width_ = 8;
  std::size_t group_count_ = 8;
};

/// Throws KeyTooLongError past the last bound, InvariantError for zero.
std::size_t group_of(std::size_t key_len, const GroupScheme& scheme);

struct DispatchedPair {
  std::size_t group = 0;
  KeyValuePair pair;
};

/// Crossbar: tags every pair with its group; packet order is kept.
std::vector<DispatchedPair> crossbar_dispatch(const AggregationPacket& packet,
                                              const GroupScheme& scheme);
std::vector<DispatchedPair> crossbar_dispatch(AggregationPacket&& packet,
                                              const GroupScheme& scheme);

/// Physical memory of one switch. Every FPE owns its own SRAM of
/// `fpe_bytes_per_group`; the single BPE owns `bpe_bytes` of DRAM.
struct SwitchMemory {
  std::size_t fpe_bytes_per_group = 0;
  std::size_t bpe_bytes = 0;
  std::size_t group_count = 8;

  std::size_t total() const {
    return fpe_bytes_per_group * group_count + bpe_bytes;
  }
};

/// Slice of switch memory owned by one tree.
struct TreeMemory {
  std::size_t total_bytes = 0;  // floor(switch total / trees)
  std::size_t fpe_bytes_per_group = 0;
  std::size_t bpe_bytes = 0;

  friend bool operator==(const TreeMemory&, const TreeMemory&) = default;
};

struct TreeConfig {
  TreeId tree_id = 0;
  std::uint16_t child_count = 0;
  std::uint16_t eot_seen = 0;
  // Learned from the destination of the tree's aggregation packets (the
  // tree root); the static route toward the root is the parent edge.
  std::optional<NodeId> root;
  std::optional<PortId> parent_port;
  TreeMemory memory_share;
  std::optional<AggOp> bound_op;

  bool all_children_done() const { return eot_seen >= child_count; }
};

struct PortCounters {
  std::uint64_t in_bytes = 0;
  std::uint64_t out_bytes = 0;
};

struct SwitchState {
  NodeId switch_id = 0;
  std::map<NodeId, PortId> routing_table;
  std::map<TreeId, TreeConfig> trees;
  GroupScheme groups;
  SwitchMemory memory;
  std::map<PortId, PortCounters> port_counters;

  std::uint64_t unconfigured_tree_packets = 0;
  std::uint64_t op_mismatch_packets = 0;
  std::uint64_t malformed_packets = 0;
};

/// Initial state with the switch's slice of the static routing table.
SwitchState make_switch_state(NodeId id, const Topology& topo,
                              const GroupScheme& groups,
                              const SwitchMemory& memory);

enum class PacketClass { kForward, kConfigure, kAggregate, kAckControl };

PacketClass classify(const Packet& packet);

struct ConfigureResult {
  SwitchState state;
  Packet ack;  // ack type 1 addressed to the controller
};

/// Installs the listed trees and re-divides memory evenly over every tree now
/// configured on the switch.
ConfigureResult apply_configuration(const SwitchState& state,
                                    const ConfigureBody& cfg,
                                    NodeId controller);

/// Binds a tree to its root and resolves the parent port from the static
/// routing table. Throws NoRouteError when no route exists.
void resolve_parent(SwitchState& state, TreeId tree, NodeId root);

/// Picks the output port and charges its out_bytes counter. Aggregation
/// packets of a tree with a resolved parent leave on the parent port; all
/// other packets follow the static route for dst_node.
PortId forward(SwitchState& state, const Packet& packet);

void record_ingress(SwitchState& state, PortId port, std::size_t bytes);

}  // namespace switchagg
