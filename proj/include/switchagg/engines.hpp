// SPDX-License-Identifier: Apache-2.0
//
// Multi-level aggregation hierarchy of one switch.
//
// Pairs leave the crossbar into the front-end engine (FPE) that owns their
// key-length group. Each FPE keeps a small bucketed hash table per tree;
// a miss on a full bucket evicts the least-recently-written slot into the
// FPE's bounded output FIFO. A round-robin scheduler feeds those FIFOs into
// the single back-end engine (BPE), whose DRAM is split into one region per
// (tree, group). Pairs that overflow a BPE bucket leave the switch toward
// the tree parent. Once every child has sent EoT the tree is flushed.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <string_view>
#include <vector>

#include "switchagg/dataplane.hpp"
#include "switchagg/wire.hpp"

namespace switchagg {

/// FNV-1a (32-bit) over the unpadded key bytes; shared by every engine.
std::uint32_t hash_key(std::string_view key);

/// SUM wraps in two's complement; MAX/MIN compare signed.
std::int32_t aggregate_values(AggOp op, std::int32_t a, std::int32_t b);

enum class Outcome : std::uint8_t {
  kAggregated,
  kStored,
  kEvicted,  // the FPE pushed an occupant out; for the BPE it left the switch
};

struct ProcessResult {
  Outcome outcome = Outcome::kStored;
  std::optional<KeyValuePair> evicted;
};

/// Fixed-slot-width bucketed table. Keys shorter than the slot are held
/// zero-padded; a full bucket evicts its least-recently-written slot.
class HashTable {
 public:
  HashTable(std::size_t slot_width, std::size_t slots_per_bucket,
            std::size_t bucket_count);

  /// Bytes one slot occupies in memory (padded key plus the value).
  static std::size_t slot_bytes(std::size_t slot_width) {
    return slot_width + kValueBytes;
  }
  /// Largest bucket count whose table fits in `bytes`.
  static std::size_t buckets_for(std::size_t bytes, std::size_t slot_width,
                                 std::size_t slots_per_bucket);

  std::size_t slot_width() const { return slot_width_; }
  std::size_t slots_per_bucket() const { return slots_per_bucket_; }
  std::size_t bucket_count() const { return bucket_count_; }
  std::size_t capacity_pairs() const { return values_.size(); }
  std::size_t occupancy() const { return occupancy_; }

  std::size_t bucket_of(std::string_view key) const {
    return hash_key(key) % bucket_count_;
  }

  ProcessResult upsert(const KeyValuePair& pair, AggOp op);
  std::optional<std::int32_t> find(std::string_view key) const;

  /// Visits occupied slots in (bucket, slot) order.
  template <class F>
  void for_each(F&& visit) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (key_lens_[i] != 0) visit(key_at(i), values_[i]);
    }
  }

  /// Removes and returns every resident pair in (bucket, slot) order.
  std::vector<KeyValuePair> drain();
  void clear();

  /// Slot-level view used by invariant checks.
  struct SlotView {
    bool occupied;
    std::string_view padded_key;  // slot_width bytes
    std::size_t key_len;
  };
  SlotView slot(std::size_t index) const;

 private:
  std::string_view key_at(std::size_t i) const {
    return {keys_.data() + i * slot_width_, key_lens_[i]};
  }
  std::size_t locate(std::string_view key, std::size_t bucket) const;
  ProcessResult upsert_wide(const KeyValuePair& pair, AggOp op);

  // Lookup structures for wide buckets, where scanning every slot is too
  // slow. Same choices as the scan: lowest free slot, oldest write evicted.
  struct WideIndex {
    std::unordered_map<std::string, std::size_t> slot_of;
    std::vector<std::set<std::size_t>> free;
    std::vector<std::set<std::pair<std::uint64_t, std::size_t>>> by_write;
  };
  void reset_wide();

  std::size_t slot_width_;
  std::size_t slots_per_bucket_;
  std::size_t bucket_count_;
  std::size_t occupancy_ = 0;
  std::uint64_t write_clock_ = 0;
  std::vector<char> keys_;
  std::vector<std::uint8_t> key_lens_;  // 0 marks a free slot
  std::vector<std::int32_t> values_;
  std::vector<std::uint64_t> last_write_;
  std::optional<WideIndex> wide_;
};

struct FifoEntry {
  TreeId tree = 0;
  AggOp op = AggOp::kSum;
  KeyValuePair pair;
  std::uint64_t ready_cycle = 0;
};

struct FpeCounters {
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t evictions = 0;
  std::uint64_t fifo_writes = 0;
  std::uint64_t fifo_full_events = 0;
};

class Fpe {
 public:
  Fpe(std::size_t group, std::size_t slot_width, std::size_t slots_per_bucket,
      std::size_t fifo_depth);

  std::size_t group() const { return group_; }
  std::size_t slot_width() const { return slot_width_; }

  /// (Re)sizes the tree's table to `bytes`; pairs that no longer fit are
  /// returned. A slice too small for one bucket leaves the tree without a
  /// table, in which case every pair passes straight through as evicted.
  std::vector<KeyValuePair> allocate(TreeId tree, std::size_t bytes);
  void release(TreeId tree);

  const HashTable* table(TreeId tree) const;
  HashTable* table(TreeId tree);

  ProcessResult process(TreeId tree, const KeyValuePair& pair, AggOp op);

  std::deque<FifoEntry>& fifo() { return fifo_; }
  const std::deque<FifoEntry>& fifo() const { return fifo_; }
  std::size_t fifo_depth() const { return fifo_depth_; }
  bool fifo_full() const { return fifo_.size() >= fifo_depth_; }
  void note_fifo_full() { ++counters_.fifo_full_events; }
  /// Precondition: !fifo_full().
  void enqueue(FifoEntry entry);

  const FpeCounters& counters() const { return counters_; }

 private:
  std::size_t group_;
  std::size_t slot_width_;
  std::size_t slots_per_bucket_;
  std::size_t fifo_depth_;
  std::map<TreeId, std::optional<HashTable>> tables_;
  std::deque<FifoEntry> fifo_;
  FpeCounters counters_;
};

/// Round-robin arbitration between FPE output FIFOs.
class RoundRobinScheduler {
 public:
  explicit RoundRobinScheduler(std::size_t ports = 0) : ports_(ports) {}

  std::size_t pointer() const { return pointer_; }
  void set_pointer(std::size_t p) { pointer_ = ports_ ? p % ports_ : 0; }

  /// First eligible port at or after the pointer; the pointer moves past it.
  template <class Eligible>
  std::optional<std::size_t> pick(Eligible&& eligible) {
    for (std::size_t k = 0; k < ports_; ++k) {
      const std::size_t i = (pointer_ + k) % ports_;
      if (eligible(i)) {
        pointer_ = (i + 1) % ports_;
        return i;
      }
    }
    return std::nullopt;
  }

  /// Dequeues one pair from the next non-empty FIFO.
  std::optional<std::pair<std::size_t, FifoEntry>> schedule(
      std::span<Fpe> fpes);

 private:
  std::size_t ports_;
  std::size_t pointer_ = 0;
};

struct BpeCounters {
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t stores = 0;
  std::uint64_t emits = 0;
};

/// Back-end engine. Its memory holds, per tree, one region per key-length
/// group; a slot lives at [region base + key range base + key index].
class Bpe {
 public:
  Bpe(std::size_t capacity_bytes, const GroupScheme& groups,
      std::size_t slots_per_bucket);

  struct Region {
    std::uint64_t base = 0;  // region base + key range base
    std::size_t bytes = 0;
    std::optional<HashTable> table;
  };

  std::size_t capacity_bytes() const { return capacity_bytes_; }
  const GroupScheme& groups() const { return groups_; }

  /// Lays out every tree's regions back to back in tree-id order; each tree
  /// slice is split evenly across groups. Pairs that no longer fit after a
  /// resize are returned with their tree.
  std::vector<std::pair<TreeId, KeyValuePair>> layout(
      const std::map<TreeId, std::size_t>& tree_bytes);

  bool has_tree(TreeId tree) const { return regions_.contains(tree); }
  const Region& region(TreeId tree, std::size_t group) const;
  Region& region(TreeId tree, std::size_t group);

  /// Memory address of slot `index` of the (tree, group) region.
  std::uint64_t address(TreeId tree, std::size_t group,
                        std::size_t index) const;

  /// Same lookup/aggregate/store as an FPE; a full bucket pushes its
  /// least-recently-written occupant out of the switch (kEvicted).
  /// Throws RegionUnallocatedError for an unknown tree.
  ProcessResult process(TreeId tree, std::size_t group,
                        const KeyValuePair& pair, AggOp op);

  const std::vector<BpeCounters>& counters() const { return counters_; }

 private:
  std::size_t capacity_bytes_;
  GroupScheme groups_;
  std::size_t slots_per_bucket_;
  std::map<TreeId, std::vector<Region>> regions_;
  std::vector<BpeCounters> counters_;  // per group
};

enum class Stage : std::uint8_t {
  kHeaderAnalyzer,
  kCrossbar,
  kFpeHash,
  kFpeAggregate,
  kFpeForward,
  kBpeAggregate,
  kBpeFlush,
};
inline constexpr std::size_t kStageCount = 7;

std::string_view stage_name(Stage stage);

/// Per-stage latencies of the hardware pipeline in clock cycles plus the
/// issue intervals that bound its throughput.
struct TimingModel {
  std::array<std::uint64_t, kStageCount> stage_cycles{3, 2, 10, 18,
                                                      5, 33, 31'250'000};
  double clock_period_ns = 5.0;     // 200 MHz
  std::size_t datapath_bytes = 16;  // 128-bit internal interfaces
  std::uint64_t fpe_issue_cycles = 2;
  std::uint64_t bpe_issue_cycles = 2;
  std::size_t bpe_burst = 1;  // pairs dequeued per BPE service slot

  std::uint64_t cycles(Stage s) const {
    return stage_cycles[static_cast<std::size_t>(s)];
  }
  double to_ns(std::uint64_t cycles) const {
    return static_cast<double>(cycles) * clock_period_ns;
  }
};

/// Fixed stage cost plus ceil(payload_bytes / datapath width) transfer
/// cycles.
std::uint64_t charge_timing(const TimingModel& model, Stage stage,
                            std::size_t payload_bytes = 0);

struct EngineConfig {
  GroupScheme groups;
  std::size_t slots_per_bucket = 4;
  std::size_t fifo_depth = 64;
  std::size_t bpe_bytes = 0;
  bool multi_level = true;  // false: FPE evictions leave the switch directly
  bool timing_enabled = true;
  TimingModel timing;
  std::size_t mtu = kDefaultMtu;
};

struct TimedPacket {
  AggregationPacket packet;
  std::uint64_t ready_cycle = 0;
};

struct CounterRecord {
  NodeId switch_id = 0;
  std::size_t fpe_group = 0;
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t evictions = 0;
  std::uint64_t fifo_writes = 0;
  std::uint64_t fifo_full_events = 0;
  std::uint64_t bpe_stores = 0;
  std::uint64_t bpe_emits = 0;
  std::uint64_t flush_cycles = 0;
};

/// The processing engines of one switch driven by packet arrivals. Time is
/// counted in clock cycles; when timing is disabled every stage completes
/// instantly and the BPE consumes each eviction as soon as it is queued.
class AggregationEngine {
 public:
  explicit AggregationEngine(EngineConfig config);

  const EngineConfig& config() const { return config_; }

  /// Applies the tree memory shares decided by the configuration module.
  /// Pairs displaced by shrinking tables leave toward the parent.
  void configure(const std::map<TreeId, TreeMemory>& shares,
                 std::uint64_t now, std::vector<TimedPacket>& out);

  /// Runs one aggregation packet's pairs through the FPE/BPE hierarchy.
  void ingest(TreeId tree, AggOp op, std::size_t ingress_port,
              std::size_t packet_bytes, std::span<DispatchedPair> pairs,
              std::uint64_t arrival_cycle, std::vector<TimedPacket>& out);

  /// Emits every resident pair of the tree (FPE tables, then BPE regions),
  /// the last packet carrying EoT, and empties the tree. Packets still
  /// buffered for the parent go out first. Throws PrematureFlushError
  /// unless all children have sent EoT.
  std::vector<TimedPacket> flush_tree(const TreeConfig& tree,
                                      std::uint64_t now);

  std::size_t resident_pairs(TreeId tree) const;
  std::vector<KeyValuePair> resident(TreeId tree) const;

  std::span<const Fpe> fpes() const { return fpes_; }
  const Bpe& bpe() const { return bpe_; }
  const std::array<std::uint64_t, kStageCount>& stage_totals() const {
    return stage_totals_;
  }
  std::uint64_t flush_cycles() const { return flush_cycles_; }
  std::uint64_t flushes() const { return flushes_; }

  std::vector<CounterRecord> snapshot(NodeId switch_id) const;

 private:
  struct TreeRuntime {
    std::optional<AggOp> op;
    std::optional<PacketBuilder> out;
    std::uint64_t last_emit = 0;
  };

  std::uint64_t charge(Stage stage, std::size_t bytes = 0);
  void emit(TreeId tree, AggOp op, KeyValuePair pair, std::uint64_t at,
            std::vector<TimedPacket>& out);
  /// Serves one BPE slot no later than `limit`; returns (fpe, slot time).
  std::optional<std::pair<std::size_t, std::uint64_t>> serve_next(
      std::uint64_t limit, std::vector<TimedPacket>& out);
  void drain_fifos(std::vector<TimedPacket>& out);

  EngineConfig config_;
  std::vector<Fpe> fpes_;
  Bpe bpe_;
  RoundRobinScheduler scheduler_;
  std::map<TreeId, TreeRuntime> trees_;
  std::vector<std::uint64_t> analyzer_free_;
  std::vector<std::uint64_t> fpe_free_;
  std::uint64_t bpe_clock_ = 0;
  std::array<std::uint64_t, kStageCount> stage_totals_{};
  std::uint64_t flush_cycles_ = 0;
  std::uint64_t flushes_ = 0;
};

}  // namespace switchagg
