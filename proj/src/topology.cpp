// SPDX-License-Identifier: Apache-2.0

#include "switchagg/topology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "switchagg/errors.hpp"

namespace switchagg {

using nlohmann::json;

void Topology::add_node(NodeId id, NodeKind kind) {
  if (nodes_.contains(id)) {
    throw ConfigError("duplicate node " + std::to_string(id));
  }
  nodes_.emplace(id, kind);
  ports_[id];
}

void Topology::add_link(const LinkSpec& link) {
  if (!contains(link.a) || !contains(link.b)) {
    throw ConfigError("link references unknown node");
  }
  if (link.a == link.b) throw ConfigError("self link");
  if (ports_[link.a].contains(link.a_port) ||
      ports_[link.b].contains(link.b_port)) {
    throw ConfigError("port already in use on link " + std::to_string(link.a) +
                      "<->" + std::to_string(link.b));
  }
  if (link.gbps <= 0 || link.latency_ns < 0) {
    throw ConfigError("link needs positive bandwidth and latency >= 0");
  }
  const std::size_t idx = links_.size();
  links_.push_back(link);
  ports_[link.a][link.a_port] = PortPeer{link.b, link.b_port, idx};
  ports_[link.b][link.b_port] = PortPeer{link.a, link.a_port, idx};
}

NodeKind Topology::kind(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    throw ConfigError("unknown node " + std::to_string(id));
  }
  return it->second;
}

const std::map<PortId, PortPeer>& Topology::ports(NodeId node) const {
  auto it = ports_.find(node);
  if (it == ports_.end()) {
    throw ConfigError("unknown node " + std::to_string(node));
  }
  return it->second;
}

std::optional<PortPeer> Topology::peer(NodeId node, PortId port) const {
  auto it = ports_.find(node);
  if (it == ports_.end()) return std::nullopt;
  auto p = it->second.find(port);
  if (p == it->second.end()) return std::nullopt;
  return p->second;
}

void Topology::set_route(NodeId at, NodeId dst, PortId port) {
  if (!peer(at, port)) {
    throw ConfigError("route at node " + std::to_string(at) +
                      " uses unconnected port " + std::to_string(port));
  }
  routes_[at][dst] = port;
}

std::optional<PortId> Topology::route(NodeId at, NodeId dst) const {
  auto it = routes_.find(at);
  if (it == routes_.end()) return std::nullopt;
  auto r = it->second.find(dst);
  if (r == it->second.end()) return std::nullopt;
  return r->second;
}

void Topology::complete_routes() {
  for (const auto& [dst, kind] : nodes_) {
    const PathTree tree = shortest_path_tree(*this, dst);
    for (const auto& [node, port] : tree.port_to_parent) {
      auto& table = routes_[node];
      if (!table.contains(dst)) table[dst] = port;
    }
  }
}

bool Topology::connected() const {
  if (nodes_.empty()) return true;
  std::set<NodeId> seen;
  std::vector<NodeId> stack{nodes_.begin()->first};
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    for (const auto& [port, peer] : ports_.at(n)) stack.push_back(peer.node);
  }
  return seen.size() == nodes_.size();
}

PathTree shortest_path_tree(const Topology& topo, NodeId root) {
  PathTree tree;
  tree.root = root;
  if (!topo.contains(root)) return tree;
  tree.depth[root] = 0;

  std::vector<NodeId> frontier{root};
  int depth = 0;
  while (!frontier.empty()) {
    ++depth;
    // Best (parent, port) offer per newly discovered node at this depth.
    std::map<NodeId, std::pair<NodeId, PortId>> offers;
    for (NodeId parent : frontier) {
      if (parent != root && topo.kind(parent) == NodeKind::kHost) continue;
      for (const auto& [port, peer] : topo.ports(parent)) {
        if (tree.depth.contains(peer.node)) continue;
        const std::pair<NodeId, PortId> offer{parent, peer.port};
        auto it = offers.find(peer.node);
        if (it == offers.end() || offer < it->second) offers[peer.node] = offer;
      }
    }
    frontier.clear();
    for (const auto& [node, offer] : offers) {
      tree.depth[node] = depth;
      tree.parent[node] = offer.first;
      tree.port_to_parent[node] = offer.second;
      frontier.push_back(node);
    }
  }
  return tree;
}

Topology parse_topology(const std::string& text) {
  const json doc = json::parse(text);
  Topology topo;
  for (const auto& n : doc.at("nodes")) {
    const std::string kind = n.at("kind").get<std::string>();
    if (kind != "host" && kind != "switch") {
      throw ConfigError("node kind must be host or switch, got " + kind);
    }
    topo.add_node(n.at("id").get<NodeId>(),
                  kind == "host" ? NodeKind::kHost : NodeKind::kSwitch);
  }
  for (const auto& l : doc.at("links")) {
    LinkSpec link;
    link.a = l.at("node").get<NodeId>();
    link.a_port = l.at("port").get<PortId>();
    link.b = l.at("peer").get<NodeId>();
    link.b_port = l.at("peer_port").get<PortId>();
    link.gbps = l.value("gbps", 10.0);
    link.latency_ns = l.value("latency_ns", std::int64_t{500});
    topo.add_link(link);
  }
  if (doc.contains("routes")) {
    for (const auto& r : doc.at("routes")) {
      topo.set_route(r.at("switch").get<NodeId>(), r.at("dst").get<NodeId>(),
                     r.at("port").get<PortId>());
    }
  }
  if (!topo.connected()) throw DisconnectedError("topology is not connected");
  topo.complete_routes();
  return topo;
}

Topology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open topology file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_topology(ss.str());
}

std::string topology_to_json(const Topology& topo) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& [id, kind] : topo.nodes()) {
    doc["nodes"].push_back(
        {{"id", id}, {"kind", kind == NodeKind::kHost ? "host" : "switch"}});
  }
  doc["links"] = json::array();
  for (const auto& l : topo.links()) {
    doc["links"].push_back({{"node", l.a},
                            {"port", l.a_port},
                            {"peer", l.b},
                            {"peer_port", l.b_port},
                            {"gbps", l.gbps},
                            {"latency_ns", l.latency_ns}});
  }
  doc["routes"] = json::array();
  for (const auto& [at, table] : topo.routes()) {
    if (topo.kind(at) != NodeKind::kSwitch) continue;
    for (const auto& [dst, port] : table) {
      doc["routes"].push_back({{"switch", at}, {"dst", dst}, {"port", port}});
    }
  }
  return doc.dump(2);
}

Topology star_topology(std::size_t hosts, NodeId first_host, double gbps,
                       std::int64_t latency_ns) {
  Topology topo;
  topo.add_node(1, NodeKind::kSwitch);
  for (std::size_t i = 0; i < hosts; ++i) {
    const auto id = static_cast<NodeId>(first_host + i);
    topo.add_node(id, NodeKind::kHost);
    topo.add_link({1, static_cast<PortId>(i), id, 0, gbps, latency_ns});
  }
  topo.complete_routes();
  return topo;
}

Topology line_topology(std::size_t switches,
                       const std::vector<std::pair<NodeId, NodeId>>& attach,
                       double gbps, std::int64_t latency_ns) {
  Topology topo;
  for (std::size_t s = 1; s <= switches; ++s) {
    topo.add_node(static_cast<NodeId>(s), NodeKind::kSwitch);
  }
  for (std::size_t s = 1; s < switches; ++s) {
    topo.add_link({static_cast<NodeId>(s), 1, static_cast<NodeId>(s + 1), 0,
                   gbps, latency_ns});
  }
  std::map<NodeId, PortId> next_port;
  for (const auto& [host, sw] : attach) {
    if (sw == 0 || sw > switches) throw ConfigError("attach to unknown switch");
    topo.add_node(host, NodeKind::kHost);
    PortId& port = next_port.try_emplace(sw, PortId{2}).first->second;
    topo.add_link({sw, port++, host, 0, gbps, latency_ns});
  }
  topo.complete_routes();
  return topo;
}

}  // namespace switchagg
