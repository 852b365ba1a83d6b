// SPDX-License-Identifier: Apache-2.0

#include "switchagg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <tuple>
#include <variant>

#include "switchagg/errors.hpp"

namespace switchagg {

using nlohmann::json;

namespace {

constexpr PortId kLocalPort = 0xFFFF;

struct Arrival {
  PortId port = 0;
  Packet packet;
};
struct Pump {
  TreeId tree = 0;
};
struct ConfigureAt {
  Packet packet;
};
struct AckAt {
  NodeId from = 0;
};
struct MasterAck {
  TreeId tree = 0;
};
struct Deadline {
  TreeId tree = 0;
};

using Payload =
    std::variant<Arrival, Pump, ConfigureAt, AckAt, MasterAck, Deadline>;

struct Event {
  SimTime at{0};
  NodeId node = 0;
  std::uint64_t seq = 0;
  Payload payload;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.at, a.node, a.seq) > std::tie(b.at, b.node, b.seq);
  }
};

void fold_into(std::unordered_map<std::string, std::int32_t>& map,
               const KeyValuePair& p, AggOp op) {
  auto [it, inserted] = map.try_emplace(p.key, p.value);
  if (!inserted) it->second = aggregate_values(op, it->second, p.value);
}

}  // namespace

struct Simulation::Impl {
  struct SwitchNode {
    SwitchState state;
    AggregationEngine engine;
  };

  struct Worker {
    AggOp op = AggOp::kSum;
    std::deque<KeyValuePair> pending;
    PairSource source;
    bool ended = false;
    bool eot_sent = false;
    bool pump_armed = false;
    std::optional<PacketBuilder> builder;
  };

  struct TreeState {
    AggregationTree tree;
    bool launched = false;
    TreeOutcome outcome;
  };

  SimulationConfig cfg;
  Controller controller;
  std::int64_t period_ps;
  std::vector<Event> heap;
  std::uint64_t seq = 0;
  SimTime now{0};
  std::map<std::pair<NodeId, PortId>, SimTime> busy;
  std::map<NodeId, SwitchNode> switches;
  std::map<std::pair<NodeId, TreeId>, Worker> workers;
  std::map<TreeId, TreeState> trees;
  std::optional<TreeId> pending_launch;

  explicit Impl(SimulationConfig c)
      : cfg(std::move(c)),
        controller(cfg.topology,
                   ControllerConfig{cfg.controller_id, cfg.config_timeout_ns}),
        period_ps(std::llround(cfg.switches.timing.clock_period_ns * 1000.0)) {
    if (period_ps <= 0) throw ConfigError("clock period must be positive");
    if (cfg.topology.contains(cfg.controller_id)) {
      throw ConfigError("controller id " + std::to_string(cfg.controller_id) +
                        " collides with a topology node");
    }
    const auto& sw = cfg.switches;
    for (const auto& [id, kind] : cfg.topology.nodes()) {
      if (kind != NodeKind::kSwitch) continue;
      EngineConfig ec;
      ec.groups = sw.groups;
      ec.slots_per_bucket = sw.slots_per_bucket;
      ec.fifo_depth = sw.fifo_depth;
      ec.bpe_bytes = sw.memory.bpe_bytes;
      ec.multi_level = sw.multi_level;
      ec.timing_enabled = cfg.timing;
      ec.timing = sw.timing;
      ec.mtu = cfg.mtu;
      switches.emplace(
          std::piecewise_construct, std::forward_as_tuple(id),
          std::forward_as_tuple(
              SwitchNode{make_switch_state(id, cfg.topology, sw.groups,
                                           sw.memory),
                         AggregationEngine(ec)}));
    }
  }

  // ---- event queue -------------------------------------------------------

  void schedule(SimTime at, NodeId node, Payload payload) {
    heap.push_back({at, node, seq++, std::move(payload)});
    std::push_heap(heap.begin(), heap.end(), Later{});
  }

  void step() {
    std::pop_heap(heap.begin(), heap.end(), Later{});
    Event ev = std::move(heap.back());
    heap.pop_back();
    now = ev.at;
    std::visit([&](auto& p) { handle(ev.node, p); }, ev.payload);
  }

  template <class Done>
  void run_until(Done done) {
    while (!done() && !heap.empty()) step();
  }

  std::uint64_t cycle_of(SimTime t) const {
    return static_cast<std::uint64_t>((t.count() + period_ps - 1) / period_ps);
  }
  SimTime time_of(std::uint64_t cycle) const {
    return SimTime(static_cast<std::int64_t>(cycle) * period_ps);
  }
  SimTime control_delay() const {
    return std::chrono::nanoseconds(cfg.control_latency_ns);
  }

  // ---- links -------------------------------------------------------------

  /// Serializes `packet` onto the link behind (node, port); returns the time
  /// the port becomes free again.
  SimTime transmit(NodeId node, PortId port, Packet packet, SimTime ready) {
    const std::size_t bytes = encoded_size(packet);
    if (bytes > cfg.mtu) throw OversizeError(bytes, cfg.mtu);
    auto peer = cfg.topology.peer(node, port);
    if (!peer) {
      throw NoRouteError("node " + std::to_string(node) + " port " +
                         std::to_string(port) + " is not connected");
    }
    const LinkSpec& link = cfg.topology.links()[peer->link];
    SimTime& free_at = busy[{node, port}];
    const SimTime depart = std::max({ready, free_at, now});
    const SimTime wire(std::llround(static_cast<double>(bytes) * 8000.0 /
                                    link.gbps));
    free_at = depart + wire;
    schedule(free_at + std::chrono::nanoseconds(link.latency_ns), peer->node,
             Arrival{peer->port, std::move(packet)});
    return free_at;
  }

  SimTime host_send(NodeId host, Packet packet) {
    const NodeId dst = packet.frame.dst_node;
    if (dst == host) {
      schedule(now, host, Arrival{kLocalPort, std::move(packet)});
      return now;
    }
    auto port = cfg.topology.route(host, dst);
    if (!port) {
      throw NoRouteError("host " + std::to_string(host) + " has no route to " +
                         std::to_string(dst));
    }
    return transmit(host, *port, std::move(packet), now);
  }

  // ---- workers -------------------------------------------------------------

  TreeState& launched_tree(TreeId tree, NodeId worker) {
    auto it = trees.find(tree);
    if (it == trees.end() || !it->second.launched) {
      throw NotLaunchedError("tree " + std::to_string(tree) +
                             " has not been launched");
    }
    const auto& leaves = it->second.tree.leaves;
    if (!std::binary_search(leaves.begin(), leaves.end(), worker)) {
      throw NotLaunchedError("node " + std::to_string(worker) +
                             " is not a mapper of tree " +
                             std::to_string(tree));
    }
    return it->second;
  }

  Worker& worker(NodeId host, TreeId tree, AggOp op) {
    launched_tree(tree, host);
    auto [it, fresh] = workers.try_emplace({host, tree});
    if (fresh) it->second.op = op;
    if (it->second.ended) {
      throw ConfigError("worker " + std::to_string(host) +
                        " already ended tree " + std::to_string(tree));
    }
    return it->second;
  }

  void arm_pump(NodeId host, TreeId tree, SimTime at) {
    Worker& w = workers.at({host, tree});
    if (w.pump_armed || w.eot_sent) return;
    w.pump_armed = true;
    schedule(std::max(at, now), host, Pump{tree});
  }

  void handle(NodeId host, Pump& pump) {
    Worker& w = workers.at({host, pump.tree});
    w.pump_armed = false;
    if (w.eot_sent) return;
    if (!w.builder) w.builder.emplace(pump.tree, w.op, cfg.mtu);

    std::optional<AggregationPacket> ready;
    while (!ready) {
      std::optional<KeyValuePair> next;
      if (!w.pending.empty()) {
        next = std::move(w.pending.front());
        w.pending.pop_front();
      } else if (w.source) {
        next = w.source();
        if (!next) {
          w.source = nullptr;
          w.ended = true;
        }
      }
      if (next) {
        validate_pair(*next);
        ready = w.builder->add(std::move(*next));
      } else if (w.ended) {
        ready = w.builder->finish(true);
        w.eot_sent = true;
      } else if (!w.builder->empty()) {
        ready = w.builder->finish(false);
      } else {
        return;  // idle until the next put
      }
    }

    TreeState& ts = trees.at(pump.tree);
    TreeOutcome& o = ts.outcome;
    Packet packet{Frame{host, ts.tree.root}, std::move(*ready)};
    o.mapper_out_bytes += encoded_size(packet);
    for (const auto& p : std::get<AggregationPacket>(packet.body).pairs) {
      o.mapper_out_pair_bytes += pair_wire_size(p);
      ++o.mapper_out_pairs;
    }
    const SimTime free_at = host_send(host, std::move(packet));
    if (!w.eot_sent) arm_pump(host, pump.tree, free_at);
  }

  // ---- packet arrival ------------------------------------------------------

  void handle(NodeId node, Arrival& a) {
    if (auto it = switches.find(node); it != switches.end()) {
      on_switch(it->second, a.port, std::move(a.packet));
    } else {
      on_host(node, a.packet);
    }
  }

  void on_host(NodeId host, const Packet& packet) {
    const auto* agg = std::get_if<AggregationPacket>(&packet.body);
    if (!agg || packet.frame.dst_node != host) return;
    auto it = trees.find(agg->tree_id);
    if (it == trees.end() || it->second.tree.root != host) return;
    TreeOutcome& o = it->second.outcome;
    o.reducer_in_bytes += encoded_size(packet);
    for (const auto& p : agg->pairs) {
      o.reducer_in_pair_bytes += pair_wire_size(p);
      ++o.reducer_in_pairs;
      fold_into(o.folded, p, agg->op);
    }
    if (agg->eot && ++o.eots_seen == o.eots_expected) {
      o.complete = true;
      o.final_eot = now;
      o.completion_ns = to_ns(now) + cfg.reducer_ns_per_byte *
                                         static_cast<double>(o.reducer_in_bytes);
    }
  }

  void relay(SwitchNode& s, Packet packet) {
    const PortId port = forward(s.state, packet);
    transmit(s.state.switch_id, port, std::move(packet), now);
  }

  void emit_all(SwitchNode& s, std::vector<TimedPacket>& out) {
    for (auto& tp : out) {
      const TreeConfig& tc = s.state.trees.at(tp.packet.tree_id);
      if (!tc.root) {
        throw InvariantError("switch " + std::to_string(s.state.switch_id) +
                             " holds pairs of tree " +
                             std::to_string(tc.tree_id) + " with no root");
      }
      Packet p{Frame{s.state.switch_id, *tc.root}, std::move(tp.packet)};
      const PortId port = forward(s.state, p);
      transmit(s.state.switch_id, port, std::move(p),
               std::max(now, time_of(tp.ready_cycle)));
    }
    out.clear();
  }

  void on_switch(SwitchNode& s, PortId port, Packet packet) {
    record_ingress(s.state, port, encoded_size(packet));
    auto* agg = std::get_if<AggregationPacket>(&packet.body);
    if (!agg || !cfg.aggregation) {
      relay(s, std::move(packet));
      return;
    }
    auto tit = s.state.trees.find(agg->tree_id);
    if (tit == s.state.trees.end()) {
      ++s.state.unconfigured_tree_packets;
      relay(s, std::move(packet));
      return;
    }
    TreeConfig& tc = tit->second;
    if (!tc.root) resolve_parent(s.state, tc.tree_id, packet.frame.dst_node);
    if (*tc.root != packet.frame.dst_node) {
      relay(s, std::move(packet));
      return;
    }
    if (!tc.bound_op) tc.bound_op = agg->op;

    const std::uint64_t cycle = cycle_of(now);
    const bool eot = agg->eot;
    std::vector<TimedPacket> out;
    if (agg->op != *tc.bound_op) {
      // Pairs of another op cannot be merged here; pass them on and count
      // the EoT locally so the parent still sees exactly one per child.
      ++s.state.op_mismatch_packets;
      agg->eot = false;
      relay(s, std::move(packet));
    } else {
      const std::size_t bytes = encoded_size(packet);
      const AggOp op = agg->op;
      auto pairs = crossbar_dispatch(std::move(*agg), s.state.groups);
      s.engine.ingest(tc.tree_id, op, port, bytes, pairs, cycle, out);
    }
    if (eot && ++tc.eot_seen >= tc.child_count) {
      auto flushed = s.engine.flush_tree(tc, cycle);
      out.insert(out.end(), std::make_move_iterator(flushed.begin()),
                 std::make_move_iterator(flushed.end()));
      tc.eot_seen = 0;
      tc.bound_op.reset();
    }
    emit_all(s, out);
  }

  // ---- control plane -------------------------------------------------------

  void handle(NodeId sw, ConfigureAt& c) {
    if (cfg.silent_switches.contains(sw)) return;
    SwitchNode& s = switches.at(sw);
    auto res = apply_configuration(
        s.state, std::get<ConfigureBody>(c.packet.body), cfg.controller_id);
    s.state = std::move(res.state);
    std::map<TreeId, TreeMemory> shares;
    for (const auto& [id, tree] : s.state.trees) shares[id] = tree.memory_share;
    std::vector<TimedPacket> out;
    s.engine.configure(shares, cycle_of(now), out);
    emit_all(s, out);
    schedule(now + control_delay(), cfg.controller_id, AckAt{sw});
  }

  void handle(NodeId, AckAt& a) {
    if (!pending_launch) return;
    const TreeId tree = *pending_launch;
    if (auto ack = controller.on_ack(a.from)) {
      pending_launch.reset();
      schedule(now + control_delay(), ack->frame.dst_node, MasterAck{tree});
    }
  }

  void handle(NodeId, MasterAck& m) { trees.at(m.tree).launched = true; }

  void handle(NodeId, Deadline& d) {
    if (pending_launch != d.tree) return;
    pending_launch.reset();
    controller.on_deadline();
  }

  /// Static routes must agree with the tree so that data climbs tree edges.
  void check_routes(const AggregationTree& tree) const {
    for (const auto& [node, parent] : tree.parent) {
      auto port = cfg.topology.route(node, tree.root);
      auto peer = port ? cfg.topology.peer(node, *port) : std::nullopt;
      if (!peer || peer->node != parent) {
        throw InvariantError("route from " + std::to_string(node) +
                             " toward " + std::to_string(tree.root) +
                             " leaves the aggregation tree");
      }
    }
  }

  TreeId launch(NodeId master, const LaunchBody& body) {
    const Controller::LaunchPlan& plan = controller.begin_launch(master, body);
    const TreeId id = plan.tree_id;
    try {
      audit_tree(cfg.topology, plan.tree);
      check_routes(plan.tree);
    } catch (...) {
      controller.abort_launch();
      throw;
    }
    TreeState ts;
    ts.tree = plan.tree;
    ts.outcome.eots_expected =
        cfg.aggregation ? plan.tree.root_child_count
                        : static_cast<std::uint16_t>(plan.tree.leaves.size());
    trees[id] = std::move(ts);

    pending_launch = id;
    for (const Packet& c : plan.configures) {
      schedule(now + control_delay(), c.frame.dst_node, ConfigureAt{c});
    }
    schedule(now + std::chrono::nanoseconds(cfg.config_timeout_ns),
             cfg.controller_id, Deadline{id});
    if (plan.configures.empty()) {
      controller.on_ack(cfg.controller_id);
      pending_launch.reset();
      schedule(now + control_delay(), master, MasterAck{id});
    }
    run_until([&] { return trees.at(id).launched; });
    if (!trees.at(id).launched) {
      throw ConfigTimeoutError("launch of tree " + std::to_string(id) +
                               " never completed");
    }
    return id;
  }
};

Simulation::Simulation(SimulationConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

Simulation::~Simulation() = default;

TreeId Simulation::launch(NodeId master, const LaunchBody& body) {
  return impl_->launch(master, body);
}

void Simulation::shim_put(NodeId worker, TreeId tree,
                          std::vector<KeyValuePair> pairs, AggOp op) {
  auto& w = impl_->worker(worker, tree, op);
  for (auto& p : pairs) {
    validate_pair(p);
    w.pending.push_back(std::move(p));
  }
  impl_->arm_pump(worker, tree, impl_->now);
}

void Simulation::shim_end(NodeId worker, TreeId tree, AggOp op) {
  auto& w = impl_->worker(worker, tree, op);
  w.ended = true;
  impl_->arm_pump(worker, tree, impl_->now);
}

void Simulation::attach_source(NodeId worker, TreeId tree, AggOp op,
                               PairSource source) {
  auto& w = impl_->worker(worker, tree, op);
  w.source = std::move(source);
  impl_->arm_pump(worker, tree, impl_->now);
}

void Simulation::run() {
  impl_->run_until([] { return false; });
}

SimTime Simulation::now() const { return impl_->now; }
const SimulationConfig& Simulation::config() const { return impl_->cfg; }
const Controller& Simulation::controller() const { return impl_->controller; }

const AggregationTree& Simulation::tree(TreeId tree) const {
  auto it = impl_->trees.find(tree);
  if (it == impl_->trees.end()) {
    throw UnknownTreeError("unknown tree " + std::to_string(tree));
  }
  return it->second.tree;
}

const TreeOutcome& Simulation::outcome(TreeId tree) const {
  auto it = impl_->trees.find(tree);
  if (it == impl_->trees.end()) {
    throw UnknownTreeError("unknown tree " + std::to_string(tree));
  }
  return it->second.outcome;
}

std::vector<NodeId> Simulation::switches() const {
  std::vector<NodeId> out;
  for (const auto& [id, s] : impl_->switches) out.push_back(id);
  return out;
}

const SwitchState& Simulation::switch_state(NodeId sw) const {
  return impl_->switches.at(sw).state;
}

const AggregationEngine& Simulation::engine(NodeId sw) const {
  return impl_->switches.at(sw).engine;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

ExperimentReport make_report(
    const Simulation& sim, TreeId tree,
    const std::unordered_map<std::string, std::int32_t>& reference) {
  const TreeOutcome& o = sim.outcome(tree);
  ExperimentReport r;
  r.tree_id = tree;
  r.mapper_out_pairs = o.mapper_out_pairs;
  r.mapper_out_pair_bytes = o.mapper_out_pair_bytes;
  r.reducer_in_pairs = o.reducer_in_pairs;
  r.reducer_in_pair_bytes = o.reducer_in_pair_bytes;
  r.reducer_in_bytes = o.reducer_in_bytes;
  r.distinct_keys = reference.size();
  if (o.mapper_out_pair_bytes > 0) {
    const double out = static_cast<double>(o.mapper_out_pair_bytes);
    r.reduction_ratio =
        1.0 - static_cast<double>(o.reducer_in_pair_bytes) / out;
    std::uint64_t distinct_bytes = 0;
    for (const auto& [k, v] : reference) distinct_bytes += pair_wire_size(k.size());
    r.perfect_reduction_ratio =
        1.0 - static_cast<double>(distinct_bytes) / out;
  }

  std::uint64_t writes = 0;
  std::uint64_t full = 0;
  for (NodeId sw : sim.switches()) {
    const SwitchState& st = sim.switch_state(sw);
    const AggregationEngine& eng = sim.engine(sw);
    for (const auto& [port, c] : st.port_counters) {
      r.ports.push_back({sw, port, c.in_bytes, c.out_bytes});
    }
    r.unconfigured_tree_packets += st.unconfigured_tree_packets;
    r.op_mismatch_packets += st.op_mismatch_packets;
    for (const auto& rec : eng.snapshot(sw)) {
      FpeReport f;
      f.switch_id = sw;
      f.group = rec.fpe_group;
      f.lookups = rec.lookups;
      f.hits = rec.hits;
      f.evictions = rec.evictions;
      f.fifo_writes = rec.fifo_writes;
      f.fifo_full_events = rec.fifo_full_events;
      f.fifo_full_ratio =
          rec.fifo_writes ? static_cast<double>(rec.fifo_full_events) /
                                static_cast<double>(rec.fifo_writes)
                          : 0.0;
      r.max_fifo_full_ratio = std::max(r.max_fifo_full_ratio, f.fifo_full_ratio);
      writes += rec.fifo_writes;
      full += rec.fifo_full_events;
      r.bpe_stores += rec.bpe_stores;
      r.bpe_emits += rec.bpe_emits;
      r.fpes.push_back(f);
      r.counters.push_back(rec);
    }
    for (std::size_t i = 0; i < kStageCount; ++i) {
      r.stage_cycles[i] += eng.stage_totals()[i];
    }
    r.flush_cycles += eng.flush_cycles();
  }
  r.fifo_full_ratio =
      writes ? static_cast<double>(full) / static_cast<double>(writes) : 0.0;
  r.flush_ns = sim.config().switches.timing.to_ns(r.flush_cycles);
  r.simulated_completion_ns = o.completion_ns;
  r.oracle_match = o.complete && o.folded == reference;
  return r;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.mappers.empty()) throw ConfigError("experiment needs mappers");
  {
    auto sorted = config.mappers;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConfigError("mapper listed twice");
    }
  }
  WorkloadSpec spec = config.workload;
  spec.mapper_count = config.mappers.size();
  spec.validate();

  auto run_once = [&](bool aggregation) {
    SimulationConfig sc = config.sim;
    sc.aggregation = aggregation;
    Simulation sim(std::move(sc));
    const TreeId tree =
        sim.launch(config.master.value_or(config.reducer),
                   LaunchBody{{config.reducer}, config.mappers});
    std::unordered_map<std::string, std::int32_t> reference;
    for (std::size_t i = 0; i < config.mappers.size(); ++i) {
      auto gen = std::make_shared<WorkloadGenerator>(spec, i);
      sim.attach_source(config.mappers[i], tree, spec.op,
                        [gen, &reference, op = spec.op] {
                          auto p = gen->next();
                          if (p) fold_into(reference, *p, op);
                          return p;
                        });
    }
    sim.run();
    return make_report(sim, tree, reference);
  };

  ExperimentReport report = run_once(config.sim.aggregation);
  if (config.compare_baseline) {
    const ExperimentReport base = run_once(false);
    BaselineReport b;
    b.reducer_in_pair_bytes = base.reducer_in_pair_bytes;
    b.reducer_in_bytes = base.reducer_in_bytes;
    b.simulated_completion_ns = base.simulated_completion_ns;
    if (base.reducer_in_pair_bytes > 0) {
      b.inbound_reduction =
          1.0 - static_cast<double>(report.reducer_in_pair_bytes) /
                    static_cast<double>(base.reducer_in_pair_bytes);
    }
    report.baseline = b;
    report.oracle_match = report.oracle_match && base.oracle_match;
  }
  report.name = config.name;
  report.config = to_json(config);
  return report;
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(known.begin(), known.end(),
                     [&](const char* k) { return key == k; })) {
      throw ConfigError("unknown field '" + key + "' in " + where);
    }
  }
}

TimingModel parse_timing(const json& j) {
  reject_unknown(j,
                 {"stage_cycles", "clock_period_ns", "datapath_bytes",
                  "fpe_issue_cycles", "bpe_issue_cycles", "bpe_burst"},
                 "switch.timing");
  TimingModel t;
  if (j.contains("stage_cycles")) {
    const auto v = j.at("stage_cycles").get<std::vector<std::uint64_t>>();
    if (v.size() != kStageCount) {
      throw ConfigError("stage_cycles needs " + std::to_string(kStageCount) +
                        " entries");
    }
    std::copy(v.begin(), v.end(), t.stage_cycles.begin());
  }
  t.clock_period_ns = j.value("clock_period_ns", t.clock_period_ns);
  t.datapath_bytes = j.value("datapath_bytes", t.datapath_bytes);
  t.fpe_issue_cycles = j.value("fpe_issue_cycles", t.fpe_issue_cycles);
  t.bpe_issue_cycles = j.value("bpe_issue_cycles", t.bpe_issue_cycles);
  t.bpe_burst = j.value("bpe_burst", t.bpe_burst);
  return t;
}

SwitchSettings parse_switch(const json& j) {
  reject_unknown(j,
                 {"fpe_bytes_per_group", "bpe_bytes", "slots_per_bucket",
                  "fifo_depth", "multi_level", "group_base", "group_count",
                  "timing"},
                 "switch");
  SwitchSettings s;
  s.groups = GroupScheme(j.value("group_base", s.groups.base_width()),
                         j.value("group_count", s.groups.group_count()));
  s.memory.fpe_bytes_per_group =
      j.value("fpe_bytes_per_group", s.memory.fpe_bytes_per_group);
  s.memory.bpe_bytes = j.value("bpe_bytes", s.memory.bpe_bytes);
  s.memory.group_count = s.groups.group_count();
  s.slots_per_bucket = j.value("slots_per_bucket", s.slots_per_bucket);
  s.fifo_depth = j.value("fifo_depth", s.fifo_depth);
  s.multi_level = j.value("multi_level", s.multi_level);
  if (j.contains("timing")) s.timing = parse_timing(j.at("timing"));
  return s;
}

WorkloadSpec parse_workload(const json& j, std::uint64_t seed) {
  reject_unknown(j,
                 {"total_bytes", "total_pairs", "key_variety", "distribution",
                  "zipf_s", "key_len", "values", "op"},
                 "workload");
  WorkloadSpec w;
  w.seed = seed;
  w.total_bytes = j.value("total_bytes", w.total_bytes);
  if (j.contains("total_pairs")) {
    w.total_pairs = j.at("total_pairs").get<std::uint64_t>();
  }
  w.key_variety = j.value("key_variety", w.key_variety);
  const std::string dist = j.value("distribution", std::string("uniform"));
  auto d = parse_distribution(dist);
  if (!d) throw ConfigError("unknown distribution " + dist);
  w.distribution = *d;
  w.zipf_s = j.value("zipf_s", w.zipf_s);
  if (j.contains("key_len")) {
    const auto r = j.at("key_len").get<std::vector<std::size_t>>();
    if (r.size() != 2) throw ConfigError("key_len must be [min, max]");
    w.key_len_min = r[0];
    w.key_len_max = r[1];
  }
  if (j.contains("values")) {
    const auto r = j.at("values").get<std::vector<std::int32_t>>();
    if (r.size() != 2) throw ConfigError("values must be [min, max]");
    w.value_min = r[0];
    w.value_max = r[1];
  }
  const std::string op = j.value("op", std::string("SUM"));
  auto o = parse_agg_op(op);
  if (!o) throw ConfigError("unknown op " + op);
  w.op = *o;
  return w;
}

}  // namespace

ExperimentConfig parse_experiment(const json& doc,
                                  const std::filesystem::path& base_dir) {
  reject_unknown(doc,
                 {"name", "seed", "topology", "topology_file", "star",
                  "reducer", "mappers", "master", "workload", "switch",
                  "timing", "aggregation", "mtu", "reducer_ns_per_byte",
                  "controller_id", "control_latency_ns", "config_timeout_ns",
                  "silent_switches", "compare_baseline"},
                 "experiment");
  if (!doc.contains("seed")) throw ConfigError("experiment needs a seed");
  ExperimentConfig c;
  c.name = doc.value("name", c.name);
  const auto seed = doc.at("seed").get<std::uint64_t>();

  std::vector<NodeId> hosts;
  if (doc.contains("topology")) {
    c.sim.topology = parse_topology(doc.at("topology").dump());
  } else if (doc.contains("topology_file")) {
    std::filesystem::path p = doc.at("topology_file").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    c.sim.topology = load_topology(p);
  } else if (doc.contains("star")) {
    const json& s = doc.at("star");
    reject_unknown(s, {"hosts", "gbps", "latency_ns"}, "star");
    c.sim.topology = star_topology(s.at("hosts").get<std::size_t>(), 10,
                                   s.value("gbps", 10.0),
                                   s.value("latency_ns", std::int64_t{500}));
  } else {
    throw ConfigError("experiment needs topology, topology_file or star");
  }
  for (const auto& [id, kind] : c.sim.topology.nodes()) {
    if (kind == NodeKind::kHost) hosts.push_back(id);
  }
  if (hosts.empty()) throw ConfigError("topology has no hosts");

  c.reducer = doc.value("reducer", hosts.back());
  if (doc.contains("mappers")) {
    c.mappers = doc.at("mappers").get<std::vector<NodeId>>();
  } else {
    for (NodeId h : hosts) {
      if (h != c.reducer) c.mappers.push_back(h);
    }
  }
  if (doc.contains("master")) c.master = doc.at("master").get<NodeId>();

  c.workload = parse_workload(doc.value("workload", json::object()), seed);
  c.workload.mapper_count = c.mappers.size();
  if (doc.contains("switch")) c.sim.switches = parse_switch(doc.at("switch"));
  c.sim.timing = doc.value("timing", c.sim.timing);
  c.sim.aggregation = doc.value("aggregation", c.sim.aggregation);
  c.sim.mtu = doc.value("mtu", c.sim.mtu);
  c.sim.reducer_ns_per_byte =
      doc.value("reducer_ns_per_byte", c.sim.reducer_ns_per_byte);
  c.sim.controller_id = doc.value("controller_id", c.sim.controller_id);
  c.sim.control_latency_ns =
      doc.value("control_latency_ns", c.sim.control_latency_ns);
  c.sim.config_timeout_ns =
      doc.value("config_timeout_ns", c.sim.config_timeout_ns);
  if (doc.contains("silent_switches")) {
    for (NodeId n : doc.at("silent_switches").get<std::vector<NodeId>>()) {
      c.sim.silent_switches.insert(n);
    }
  }
  c.compare_baseline = doc.value("compare_baseline", c.compare_baseline);
  return c;
}

std::vector<ExperimentConfig> load_experiments(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  const json doc = json::parse(in);
  const auto base = path.parent_path();
  std::vector<ExperimentConfig> out;
  if (doc.contains("experiments")) {
    reject_unknown(doc, {"experiments"}, "config file");
    for (const auto& e : doc.at("experiments")) {
      out.push_back(parse_experiment(e, base));
    }
  } else {
    out.push_back(parse_experiment(doc, base));
  }
  return out;
}

json to_json(const ExperimentConfig& c) {
  const auto& sw = c.sim.switches;
  const auto& w = c.workload;
  json timing = {{"stage_cycles", sw.timing.stage_cycles},
                 {"clock_period_ns", sw.timing.clock_period_ns},
                 {"datapath_bytes", sw.timing.datapath_bytes},
                 {"fpe_issue_cycles", sw.timing.fpe_issue_cycles},
                 {"bpe_issue_cycles", sw.timing.bpe_issue_cycles},
                 {"bpe_burst", sw.timing.bpe_burst}};
  json workload = {{"total_bytes", w.total_bytes},
                   {"key_variety", w.key_variety},
                   {"distribution", to_string(w.distribution)},
                   {"zipf_s", w.zipf_s},
                   {"key_len", {w.key_len_min, w.key_len_max}},
                   {"values", {w.value_min, w.value_max}},
                   {"op", std::string(to_string(w.op))}};
  if (w.total_pairs) workload["total_pairs"] = *w.total_pairs;
  json j = {{"name", c.name},
            {"seed", w.seed},
            {"topology", json::parse(topology_to_json(c.sim.topology))},
            {"reducer", c.reducer},
            {"mappers", c.mappers},
            {"workload", workload},
            {"switch",
             {{"fpe_bytes_per_group", sw.memory.fpe_bytes_per_group},
              {"bpe_bytes", sw.memory.bpe_bytes},
              {"slots_per_bucket", sw.slots_per_bucket},
              {"fifo_depth", sw.fifo_depth},
              {"multi_level", sw.multi_level},
              {"group_base", sw.groups.base_width()},
              {"group_count", sw.groups.group_count()},
              {"timing", timing}}},
            {"timing", c.sim.timing},
            {"aggregation", c.sim.aggregation},
            {"mtu", c.sim.mtu},
            {"reducer_ns_per_byte", c.sim.reducer_ns_per_byte},
            {"controller_id", c.sim.controller_id},
            {"control_latency_ns", c.sim.control_latency_ns},
            {"config_timeout_ns", c.sim.config_timeout_ns},
            {"silent_switches", c.sim.silent_switches},
            {"compare_baseline", c.compare_baseline}};
  if (c.master) j["master"] = *c.master;
  return j;
}

json counters_to_json(const std::vector<CounterRecord>& records) {
  json out = json::array();
  for (const auto& r : records) {
    out.push_back({{"switch", r.switch_id},
                   {"fpe_group", r.fpe_group},
                   {"lookups", r.lookups},
                   {"hits", r.hits},
                   {"evictions", r.evictions},
                   {"fifo_writes", r.fifo_writes},
                   {"fifo_full_events", r.fifo_full_events},
                   {"bpe_stores", r.bpe_stores},
                   {"bpe_emits", r.bpe_emits},
                   {"flush_cycles", r.flush_cycles}});
  }
  return out;
}

json to_json(const ExperimentReport& r) {
  json ports = json::array();
  for (const auto& p : r.ports) {
    ports.push_back({{"node", p.node},
                     {"port", p.port},
                     {"in_bytes", p.in_bytes},
                     {"out_bytes", p.out_bytes}});
  }
  json fpes = json::array();
  for (const auto& f : r.fpes) {
    fpes.push_back({{"switch", f.switch_id},
                    {"group", f.group},
                    {"lookups", f.lookups},
                    {"hits", f.hits},
                    {"evictions", f.evictions},
                    {"fifo_writes", f.fifo_writes},
                    {"fifo_full_events", f.fifo_full_events},
                    {"fifo_full_ratio", f.fifo_full_ratio}});
  }
  json stages = json::object();
  for (std::size_t i = 0; i < kStageCount; ++i) {
    stages[std::string(stage_name(static_cast<Stage>(i)))] = r.stage_cycles[i];
  }
  json j = {{"name", r.name},
            {"config", r.config},
            {"tree_id", r.tree_id},
            {"ports", ports},
            {"mapper_out_pairs", r.mapper_out_pairs},
            {"mapper_out_pair_bytes", r.mapper_out_pair_bytes},
            {"reducer_in_pairs", r.reducer_in_pairs},
            {"reducer_in_pair_bytes", r.reducer_in_pair_bytes},
            {"reducer_in_bytes", r.reducer_in_bytes},
            {"distinct_keys", r.distinct_keys},
            {"reduction_ratio", r.reduction_ratio},
            {"perfect_reduction_ratio", r.perfect_reduction_ratio},
            {"fpes", fpes},
            {"fifo_full_ratio", r.fifo_full_ratio},
            {"max_fifo_full_ratio", r.max_fifo_full_ratio},
            {"stage_cycles", stages},
            {"flush_cycles", r.flush_cycles},
            {"flush_ns", r.flush_ns},
            {"bpe_stores", r.bpe_stores},
            {"bpe_emits", r.bpe_emits},
            {"unconfigured_tree_packets", r.unconfigured_tree_packets},
            {"op_mismatch_packets", r.op_mismatch_packets},
            {"simulated_completion_ns", r.simulated_completion_ns},
            {"oracle_match", r.oracle_match},
            {"counters", counters_to_json(r.counters)}};
  if (r.baseline) {
    j["baseline"] = {
        {"reducer_in_pair_bytes", r.baseline->reducer_in_pair_bytes},
        {"reducer_in_bytes", r.baseline->reducer_in_bytes},
        {"simulated_completion_ns", r.baseline->simulated_completion_ns},
        {"inbound_reduction", r.baseline->inbound_reduction}};
  }
  return j;
}

std::string csv_header() {
  return "name,distribution,key_variety,zipf_s,fpe_bytes_per_group,bpe_bytes,"
         "multi_level,timing,mapper_out_pair_bytes,reducer_in_pair_bytes,"
         "reduction_ratio,perfect_reduction_ratio,fifo_full_ratio,"
         "max_fifo_full_ratio,flush_ns,simulated_completion_ns,"
         "baseline_reducer_in_pair_bytes,baseline_completion_ns,oracle_match";
}

std::string to_csv_row(const ExperimentReport& r) {
  const json& c = r.config;
  auto get = [&](const json& obj, const char* key) -> std::string {
    return obj.contains(key) ? obj.at(key).dump() : "";
  };
  const json empty = json::object();
  const json& w = c.contains("workload") ? c.at("workload") : empty;
  const json& s = c.contains("switch") ? c.at("switch") : empty;
  std::string name = r.name;
  if (name.find_first_of(",\"\n") != std::string::npos) {
    std::string quoted = "\"";
    for (char ch : name) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    name = quoted + "\"";
  }
  std::string dist = w.contains("distribution")
                         ? w.at("distribution").get<std::string>()
                         : "";
  std::ostringstream os;
  os.precision(10);
  os << name << ',' << dist << ',' << get(w, "key_variety") << ','
     << get(w, "zipf_s") << ',' << get(s, "fpe_bytes_per_group") << ','
     << get(s, "bpe_bytes") << ',' << get(s, "multi_level") << ','
     << get(c, "timing") << ',' << r.mapper_out_pair_bytes << ','
     << r.reducer_in_pair_bytes << ',' << r.reduction_ratio << ','
     << r.perfect_reduction_ratio << ',' << r.fifo_full_ratio << ','
     << r.max_fifo_full_ratio << ',' << r.flush_ns << ','
     << r.simulated_completion_ns << ',';
  if (r.baseline) {
    os << r.baseline->reducer_in_pair_bytes << ','
       << r.baseline->simulated_completion_ns;
  } else {
    os << ',';
  }
  os << ',' << (r.oracle_match ? "true" : "false");
  return os.str();
}

// ---------------------------------------------------------------------------
// Word count
// ---------------------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

WordCountResult wordcount_demo(
    const std::vector<std::vector<std::string>>& streams,
    const WordCountOptions& options) {
  const std::size_t mappers = std::max<std::size_t>(1, streams.size());
  SimulationConfig sc;
  sc.topology = star_topology(mappers + 1);
  sc.switches = options.switches;
  sc.timing = options.timing;
  sc.mtu = options.mtu;
  Simulation sim(std::move(sc));

  const auto reducer = static_cast<NodeId>(10 + mappers);
  std::vector<NodeId> ids;
  for (std::size_t i = 0; i < mappers; ++i) {
    ids.push_back(static_cast<NodeId>(10 + i));
  }
  const TreeId tree = sim.launch(reducer, LaunchBody{{reducer}, ids});

  WordCountResult result;
  std::unordered_map<std::string, std::int32_t> reference;
  for (std::size_t i = 0; i < mappers; ++i) {
    std::vector<KeyValuePair> pairs;
    if (i < streams.size()) {
      for (const auto& tok : streams[i]) {
        if (tok.empty()) continue;
        KeyValuePair p{tok, 1};
        if (p.key.size() > kMaxKeyBytes) {
          p.key.resize(kMaxKeyBytes);
          ++result.truncated_tokens;
        }
        fold_into(reference, p, AggOp::kSum);
        pairs.push_back(std::move(p));
      }
    }
    sim.shim_put(ids[i], tree, std::move(pairs));
    sim.shim_end(ids[i], tree);
  }
  sim.run();

  result.report = make_report(sim, tree, reference);
  result.report.name = "wordcount";
  for (const auto& [k, v] : sim.outcome(tree).folded) result.counts[k] = v;
  return result;
}

}  // namespace switchagg
