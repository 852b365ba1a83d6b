// SPDX-License-Identifier: Apache-2.0
//
// Discrete-event network simulation: hosts, switches and links driven by one
// event queue ordered by (time, node id, sequence). Workers reach the network
// through a put/end shim; experiments wrap a whole launch-to-fold run and
// summarize it in an ExperimentReport.

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "switchagg/controller.hpp"
#include "switchagg/dataplane.hpp"
#include "switchagg/engines.hpp"
#include "switchagg/topology.hpp"
#include "switchagg/wire.hpp"
#include "switchagg/workload.hpp"

namespace switchagg {

using SimTime = std::chrono::duration<std::int64_t, std::pico>;

inline double to_ns(SimTime t) {
  return std::chrono::duration<double, std::nano>(t).count();
}

struct SwitchSettings {
  GroupScheme groups{8, 8};
  SwitchMemory memory{16 * 1024, 4 * 1024 * 1024, 8};
  std::size_t slots_per_bucket = 4;
  std::size_t fifo_depth = 64;
  bool multi_level = true;
  TimingModel timing;
};

struct SimulationConfig {
  Topology topology;
  SwitchSettings switches;
  bool timing = true;       // engine pipeline timing; links are always timed
  bool aggregation = true;  // false: switches only forward
  std::size_t mtu = kDefaultMtu;
  double reducer_ns_per_byte = 1.0;
  NodeId controller_id = 0;
  // Control traffic uses a management channel with this one-way delay.
  std::int64_t control_latency_ns = 1000;
  std::int64_t config_timeout_ns = 1'000'000;
  std::set<NodeId> silent_switches;  // drop every Configure (fault injection)
};

/// What the reducer of one tree has seen.
struct TreeOutcome {
  bool complete = false;
  SimTime final_eot{0};
  double completion_ns = 0.0;
  std::unordered_map<std::string, std::int32_t> folded;
  std::uint64_t reducer_in_bytes = 0;
  std::uint64_t reducer_in_pair_bytes = 0;
  std::uint64_t reducer_in_pairs = 0;
  std::uint64_t mapper_out_bytes = 0;
  std::uint64_t mapper_out_pair_bytes = 0;
  std::uint64_t mapper_out_pairs = 0;
  std::uint16_t eots_expected = 0;
  std::uint16_t eots_seen = 0;
};

class Simulation {
 public:
  explicit Simulation(SimulationConfig config);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Runs the launch protocol to completion (Ack type 0 at the master) and
  /// returns the tree id. Throws ConfigTimeoutError, DisconnectedError,
  /// ConfigError.
  TreeId launch(NodeId master, const LaunchBody& body);

  /// Queues pairs for transmission on the worker's tree edge. Throws
  /// NotLaunchedError unless the tree is launched and names the worker.
  void shim_put(NodeId worker, TreeId tree, std::vector<KeyValuePair> pairs,
                AggOp op = AggOp::kSum);
  /// Marks the worker's stream finished; its last packet carries EoT.
  void shim_end(NodeId worker, TreeId tree, AggOp op = AggOp::kSum);

  /// Pulls pairs lazily while the worker's link has room; the stream ends
  /// when the source returns nullopt.
  using PairSource = std::function<std::optional<KeyValuePair>()>;
  void attach_source(NodeId worker, TreeId tree, AggOp op, PairSource source);

  /// Processes events until the queue is empty.
  void run();

  SimTime now() const;
  const SimulationConfig& config() const;
  const Controller& controller() const;
  const AggregationTree& tree(TreeId tree) const;
  const TreeOutcome& outcome(TreeId tree) const;

  std::vector<NodeId> switches() const;
  const SwitchState& switch_state(NodeId sw) const;
  const AggregationEngine& engine(NodeId sw) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ExperimentConfig {
  std::string name = "experiment";
  SimulationConfig sim;
  NodeId reducer = 0;
  std::vector<NodeId> mappers;
  std::optional<NodeId> master;  // defaults to the reducer host
  WorkloadSpec workload;         // mapper_count follows `mappers`
  bool compare_baseline = false;
};

struct PortReport {
  NodeId node = 0;
  PortId port = 0;
  std::uint64_t in_bytes = 0;
  std::uint64_t out_bytes = 0;
};

struct FpeReport {
  NodeId switch_id = 0;
  std::size_t group = 0;
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t evictions = 0;
  std::uint64_t fifo_writes = 0;
  std::uint64_t fifo_full_events = 0;
  double fifo_full_ratio = 0.0;
};

struct BaselineReport {
  std::uint64_t reducer_in_pair_bytes = 0;
  std::uint64_t reducer_in_bytes = 0;
  double simulated_completion_ns = 0.0;
  double inbound_reduction = 0.0;  // 1 - aggregated / baseline inbound pair bytes
};

struct ExperimentReport {
  std::string name;
  nlohmann::json config;
  TreeId tree_id = 0;
  std::vector<PortReport> ports;
  std::uint64_t mapper_out_pairs = 0;
  std::uint64_t mapper_out_pair_bytes = 0;
  std::uint64_t reducer_in_pairs = 0;
  std::uint64_t reducer_in_pair_bytes = 0;
  std::uint64_t reducer_in_bytes = 0;
  std::uint64_t distinct_keys = 0;
  double reduction_ratio = 0.0;
  double perfect_reduction_ratio = 0.0;  // every distinct key reaches once
  std::vector<FpeReport> fpes;
  double fifo_full_ratio = 0.0;      // all FPEs pooled
  double max_fifo_full_ratio = 0.0;  // worst single FPE
  std::array<std::uint64_t, kStageCount> stage_cycles{};
  std::uint64_t flush_cycles = 0;
  double flush_ns = 0.0;
  std::uint64_t bpe_stores = 0;
  std::uint64_t bpe_emits = 0;
  std::uint64_t unconfigured_tree_packets = 0;
  std::uint64_t op_mismatch_packets = 0;
  double simulated_completion_ns = 0.0;
  bool oracle_match = false;
  std::optional<BaselineReport> baseline;
  std::vector<CounterRecord> counters;
};

/// Summarizes one tree of a finished simulation; `reference` is the fold of
/// every pair the mappers produced.
ExperimentReport make_report(
    const Simulation& sim, TreeId tree,
    const std::unordered_map<std::string, std::int32_t>& reference);

/// Launch, transmit, flush, fold and compare against the reference fold.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Experiment file: either one experiment object or {"experiments": [...]}.
/// Relative topology paths resolve against `base_dir`.
ExperimentConfig parse_experiment(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir = {});
std::vector<ExperimentConfig> load_experiments(
    const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentReport& report);
std::string csv_header();
std::string to_csv_row(const ExperimentReport& report);

/// Counter snapshot records (one per switch FPE) as JSON.
nlohmann::json counters_to_json(const std::vector<CounterRecord>& records);

struct WordCountOptions {
  SwitchSettings switches;
  bool timing = true;
  std::size_t mtu = kDefaultMtu;
};

struct WordCountResult {
  std::map<std::string, std::int64_t> counts;
  std::uint64_t truncated_tokens = 0;  // tokens cut to 64 bytes
  ExperimentReport report;
};

std::vector<std::string> tokenize(std::string_view text);

/// One mapper per token stream plus one reducer, all on one switch. Counts
/// are aggregated in the network with SUM over value 1 per token.
WordCountResult wordcount_demo(
    const std::vector<std::vector<std::string>>& streams,
    const WordCountOptions& options = {});

}  // namespace switchagg
