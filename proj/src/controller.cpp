// SPDX-License-Identifier: Apache-2.0

#include "switchagg/controller.hpp"

#include <algorithm>

#include "switchagg/errors.hpp"

namespace switchagg {

namespace {

void require_host(const Topology& topo, NodeId n, const char* role) {
  if (!topo.contains(n)) {
    throw ConfigError(std::string(role) + " " + std::to_string(n) +
                      " is not in the topology");
  }
  if (topo.kind(n) != NodeKind::kHost) {
    throw ConfigError(std::string(role) + " " + std::to_string(n) +
                      " is a switch");
  }
}

}  // namespace

AggregationTree build_tree(const Topology& topo, NodeId reducer,
                           const std::vector<NodeId>& mappers,
                           TreeId tree_id) {
  require_host(topo, reducer, "reducer");
  if (mappers.empty()) throw ConfigError("launch names no mappers");

  AggregationTree tree;
  tree.tree_id = tree_id;
  tree.root = reducer;
  tree.leaves = mappers;
  std::sort(tree.leaves.begin(), tree.leaves.end());
  tree.leaves.erase(std::unique(tree.leaves.begin(), tree.leaves.end()),
                    tree.leaves.end());

  const PathTree spt = shortest_path_tree(topo, reducer);
  std::map<NodeId, std::set<NodeId>> children;
  std::uint16_t local = 0;
  for (NodeId m : tree.leaves) {
    require_host(topo, m, "mapper");
    if (m == reducer) {
      ++local;
      continue;
    }
    if (!spt.reaches(m)) {
      throw DisconnectedError("mapper " + std::to_string(m) +
                              " cannot reach reducer " +
                              std::to_string(reducer));
    }
    for (NodeId n = m; n != reducer;) {
      const NodeId p = spt.parent.at(n);
      tree.parent[n] = p;
      children[p].insert(n);
      n = p;
    }
  }

  for (const auto& [node, parent] : tree.parent) {
    if (topo.kind(node) != NodeKind::kSwitch) continue;
    TreeMember m;
    m.parent = parent;
    m.parent_port = spt.port_to_parent.at(node);
    m.child_count = static_cast<std::uint16_t>(children[node].size());
    tree.members.emplace(node, m);
  }
  tree.root_child_count =
      static_cast<std::uint16_t>(children[reducer].size() + local);
  return tree;
}

void audit_tree(const Topology& topo, const AggregationTree& tree) {
  std::map<NodeId, std::uint16_t> counted;
  for (const auto& [node, parent] : tree.parent) {
    if (node == tree.root) throw InvariantError("root has a parent");
    bool adjacent = false;
    for (const auto& [port, peer] : topo.ports(node)) {
      if (peer.node == parent) adjacent = true;
    }
    if (!adjacent) {
      throw InvariantError("tree edge " + std::to_string(node) + "->" +
                           std::to_string(parent) + " is not a link");
    }
    ++counted[parent];
    // Walking up must reach the root without revisiting a node.
    std::set<NodeId> seen{node};
    for (NodeId n = parent; n != tree.root;) {
      if (!seen.insert(n).second) throw InvariantError("tree has a cycle");
      auto it = tree.parent.find(n);
      if (it == tree.parent.end()) {
        throw InvariantError("node " + std::to_string(n) +
                             " is cut off from the root");
      }
      n = it->second;
    }
  }
  for (const auto& [sw, member] : tree.members) {
    if (member.child_count != counted[sw]) {
      throw InvariantError("switch " + std::to_string(sw) + " child_count " +
                           std::to_string(member.child_count) + " but has " +
                           std::to_string(counted[sw]) + " children");
    }
    auto peer = topo.peer(sw, member.parent_port);
    if (!peer || peer->node != member.parent) {
      throw InvariantError("switch " + std::to_string(sw) +
                           " parent port does not face its parent");
    }
  }
  const bool local = std::binary_search(tree.leaves.begin(), tree.leaves.end(),
                                        tree.root);
  if (tree.root_child_count != counted[tree.root] + (local ? 1 : 0)) {
    throw InvariantError("root child count mismatch");
  }
}

Controller::Controller(const Topology& topo, ControllerConfig config)
    : topo_(topo), config_(config) {}

const Controller::LaunchPlan& Controller::begin_launch(
    NodeId master, const LaunchBody& launch) {
  if (open_) throw ConfigError("a launch is already in progress");
  if (launch.reducer_addrs.empty()) {
    throw ConfigError("launch names no reducer");
  }
  // Only single-root trees are built; extra reducers are ignored.
  AggregationTree tree = build_tree(topo_, launch.reducer_addrs.front(),
                                    launch.mapper_addrs, next_tree_);

  Open open;
  open.plan.tree_id = next_tree_;
  open.plan.master = master;
  for (const auto& [sw, member] : tree.members) {
    ConfigureBody body;
    for (const auto& [id, other] : trees_) {
      if (auto it = other.members.find(sw); it != other.members.end()) {
        body.trees.push_back({id, it->second.child_count});
      }
    }
    body.trees.push_back({tree.tree_id, member.child_count});
    open.plan.configures.push_back({Frame{config_.id, sw}, std::move(body)});
    open.waiting.insert(sw);
  }
  open.plan.tree = std::move(tree);
  ++next_tree_;
  open_ = std::move(open);
  return open_->plan;
}

std::optional<Packet> Controller::on_ack(NodeId from) {
  if (!open_) return std::nullopt;
  open_->waiting.erase(from);
  if (!open_->waiting.empty()) return std::nullopt;
  const TreeId id = open_->plan.tree_id;
  const NodeId master = open_->plan.master;
  trees_.emplace(id, std::move(open_->plan.tree));
  open_.reset();
  return Packet{Frame{config_.id, master}, AckBody{0}};
}

std::set<NodeId> Controller::awaiting() const {
  return open_ ? open_->waiting : std::set<NodeId>{};
}

void Controller::on_deadline() {
  if (!open_) return;
  std::string silent;
  for (NodeId n : open_->waiting) {
    silent += (silent.empty() ? "" : ", ") + std::to_string(n);
  }
  const TreeId id = open_->plan.tree_id;
  open_.reset();
  throw ConfigTimeoutError("tree " + std::to_string(id) +
                           ": no ack from switch " + silent);
}

Controller::LaunchOutcome Controller::run_launch(
    NodeId master, const LaunchBody& launch, std::int64_t now_ns,
    const ConfigureTransport& transport) {
  const LaunchPlan& plan = begin_launch(master, launch);
  const TreeId id = plan.tree_id;
  const std::int64_t deadline = now_ns + config_.config_timeout_ns;

  std::vector<std::pair<std::int64_t, NodeId>> acks;
  for (const Packet& cfg : plan.configures) {
    if (auto t = transport(cfg); t && *t <= deadline) {
      acks.emplace_back(*t, cfg.frame.dst_node);
    }
  }
  std::sort(acks.begin(), acks.end());
  std::int64_t done = now_ns;
  std::optional<Packet> answer;
  if (plan.configures.empty()) answer = on_ack(config_.id);
  for (const auto& [t, sw] : acks) {
    done = std::max(done, t);
    if (auto a = on_ack(sw)) answer = std::move(a);
  }
  if (!answer) on_deadline();
  return {id, std::move(*answer), done};
}

}  // namespace switchagg
