// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "switchagg/wire.hpp"

namespace switchagg {

using PortId = std::uint16_t;

enum class NodeKind : std::uint8_t { kHost, kSwitch };

struct LinkSpec {
  NodeId a = 0;
  PortId a_port = 0;
  NodeId b = 0;
  PortId b_port = 0;
  double gbps = 10.0;
  std::int64_t latency_ns = 500;
};

struct PortPeer {
  NodeId node = 0;
  PortId port = 0;
  std::size_t link = 0;  // index into Topology::links()
};

/// Physical network: hosts and switches joined by full-duplex links, plus the
/// static routing table every node uses for non-aggregation traffic.
class Topology {
 public:
  void add_node(NodeId id, NodeKind kind);
  void add_link(const LinkSpec& link);

  bool contains(NodeId id) const { return nodes_.contains(id); }
  NodeKind kind(NodeId id) const;
  const std::map<NodeId, NodeKind>& nodes() const { return nodes_; }
  const std::vector<LinkSpec>& links() const { return links_; }

  /// Ports of `node`, keyed by port id.
  const std::map<PortId, PortPeer>& ports(NodeId node) const;
  std::optional<PortPeer> peer(NodeId node, PortId port) const;

  void set_route(NodeId at, NodeId dst, PortId port);
  std::optional<PortId> route(NodeId at, NodeId dst) const;
  const std::map<NodeId, std::map<NodeId, PortId>>& routes() const {
    return routes_;
  }

  /// Fills every (node, destination) pair that has no explicit route with the
  /// next hop of the shortest-path tree rooted at the destination.
  void complete_routes();

  bool connected() const;

 private:
  std::map<NodeId, NodeKind> nodes_;
  std::vector<LinkSpec> links_;
  std::map<NodeId, std::map<PortId, PortPeer>> ports_;
  std::map<NodeId, std::map<NodeId, PortId>> routes_;
};

/// Shortest-path tree toward `root`. Hosts other than the root never carry
/// transit traffic. Ties between equally short parents go to the lowest node
/// id, then the lowest port.
struct PathTree {
  NodeId root = 0;
  std::map<NodeId, NodeId> parent;          // node -> next hop toward root
  std::map<NodeId, PortId> port_to_parent;  // node's port facing parent
  std::map<NodeId, int> depth;

  bool reaches(NodeId n) const { return depth.contains(n); }
};

PathTree shortest_path_tree(const Topology& topo, NodeId root);

/// Structured text form (JSON):
///   {"nodes":  [{"id": 1, "kind": "switch"}, {"id": 10, "kind": "host"}],
///    "links":  [{"node": 1, "port": 0, "peer": 10, "peer_port": 0,
///                "gbps": 10, "latency_ns": 500}],
///    "routes": [{"switch": 1, "dst": 10, "port": 0}]}
/// `routes` is optional; missing entries are completed from shortest paths.
Topology parse_topology(const std::string& text);
Topology load_topology(const std::filesystem::path& path);
std::string topology_to_json(const Topology& topo);

/// One switch with hosts on consecutive ports. Host ids start at
/// `first_host`; the switch is node 1.
Topology star_topology(std::size_t hosts, NodeId first_host = 10,
                       double gbps = 10.0, std::int64_t latency_ns = 500);

/// `switches` switches in a line (ids 1..n, port 0 toward the previous
/// switch, port 1 toward the next); hosts are attached from port 2 upward to
/// the switch named by `attach`.
Topology line_topology(std::size_t switches,
                       const std::vector<std::pair<NodeId, NodeId>>& attach,
                       double gbps = 10.0, std::int64_t latency_ns = 500);

}  // namespace switchagg
