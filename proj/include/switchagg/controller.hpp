// SPDX-License-Identifier: Apache-2.0
//
// Control plane: turns a master's Launch into an aggregation tree, pushes
// Configure packets to every switch on it and answers the master once each
// switch has acknowledged.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "switchagg/topology.hpp"
#include "switchagg/wire.hpp"

namespace switchagg {

struct TreeMember {
  NodeId parent = 0;
  PortId parent_port = 0;
  std::uint16_t child_count = 0;
};

struct AggregationTree {
  TreeId tree_id = 0;
  NodeId root = 0;
  std::map<NodeId, TreeMember> members;  // switches only
  std::vector<NodeId> leaves;            // mappers, sorted, unique
  std::map<NodeId, NodeId> parent;      // every non-root participant
  std::uint16_t root_child_count = 0;    // EoTs the reducer waits for

  bool contains_switch(NodeId n) const { return members.contains(n); }
};

/// Shortest-path tree from every mapper toward the reducer, pruned to the
/// nodes those paths use. A mapper on the reducer host counts as one local
/// child of the root. Throws DisconnectedError when a mapper cannot reach
/// the reducer and ConfigError for unknown or non-host endpoints.
AggregationTree build_tree(const Topology& topo, NodeId reducer,
                           const std::vector<NodeId>& mappers,
                           TreeId tree_id = 0);

/// Checks acyclicity, rootedness and child counts; throws InvariantError.
void audit_tree(const Topology& topo, const AggregationTree& tree);

struct ControllerConfig {
  NodeId id = 0;
  std::int64_t config_timeout_ns = 1'000'000;
};

/// Serial launch state machine. A launch is open from begin_launch until
/// every member switch has acked (complete) or the deadline passes.
class Controller {
 public:
  Controller(const Topology& topo, ControllerConfig config = {});

  struct LaunchPlan {
    TreeId tree_id = 0;
    NodeId master = 0;
    AggregationTree tree;
    std::vector<Packet> configures;  // one per member switch
  };

  /// Builds the tree and the Configure packets. Every Configure lists all
  /// trees on that switch, existing ones included, so memory is re-divided.
  /// Throws ConfigError while another launch is open or for an empty Launch.
  const LaunchPlan& begin_launch(NodeId master, const LaunchBody& launch);

  /// Records an Ack type 1. Returns the Ack type 0 for the master once the
  /// last member switch has acknowledged.
  std::optional<Packet> on_ack(NodeId from);

  /// Called when the deadline passes; throws ConfigTimeoutError naming the
  /// silent switches if the launch is still open.
  void on_deadline();

  /// Drops the open launch without answering the master.
  void abort_launch() { open_.reset(); }

  bool launch_open() const { return open_.has_value(); }
  std::set<NodeId> awaiting() const;

  const std::map<TreeId, AggregationTree>& trees() const { return trees_; }
  const ControllerConfig& config() const { return config_; }

  /// Delivers one Configure and reports when its ack comes back
  /// (nullopt = never).
  using ConfigureTransport =
      std::function<std::optional<std::int64_t>(const Packet& configure)>;

  struct LaunchOutcome {
    TreeId tree_id = 0;
    Packet ack;  // Ack type 0 to the master
    std::int64_t completed_ns = 0;
  };

  /// Whole launch in one call: Configures go out at `now_ns`, the master is
  /// answered at the latest ack time. Throws ConfigTimeoutError if any ack
  /// is missing or arrives after now_ns + deadline.
  LaunchOutcome run_launch(NodeId master, const LaunchBody& launch,
                           std::int64_t now_ns,
                           const ConfigureTransport& transport);

 private:
  struct Open {
    LaunchPlan plan;
    std::set<NodeId> waiting;
  };

  const Topology& topo_;
  ControllerConfig config_;
  TreeId next_tree_ = 1;
  std::map<TreeId, AggregationTree> trees_;
  std::optional<Open> open_;
};

}  // namespace switchagg
