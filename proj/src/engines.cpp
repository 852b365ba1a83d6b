// SPDX-License-Identifier: Apache-2.0

#include "switchagg/engines.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#include "switchagg/errors.hpp"

namespace switchagg {

namespace {

constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kWideBucket = 64;
constexpr std::uint64_t kForever = std::numeric_limits<std::uint64_t>::max();

std::uint64_t ceil_div(std::size_t a, std::size_t b) {
  return b == 0 ? 0 : (a + b - 1) / b;
}

}  // namespace

std::uint32_t hash_key(std::string_view key) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : key) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

std::int32_t aggregate_values(AggOp op, std::int32_t a, std::int32_t b) {
  switch (op) {
    case AggOp::kSum:
      return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) +
                                       static_cast<std::uint32_t>(b));
    case AggOp::kMax:
      return std::max(a, b);
    case AggOp::kMin:
      return std::min(a, b);
  }
  return a;
}

// ---------------------------------------------------------------------------
// HashTable
// ---------------------------------------------------------------------------

HashTable::HashTable(std::size_t slot_width, std::size_t slots_per_bucket,
                     std::size_t bucket_count)
    : slot_width_(slot_width),
      slots_per_bucket_(slots_per_bucket),
      bucket_count_(bucket_count) {
  if (slot_width == 0 || slot_width > kMaxKeyBytes || slots_per_bucket == 0 ||
      bucket_count == 0) {
    throw ConfigError("hash table needs slot width 1..64 and a positive "
                      "bucket geometry");
  }
  const std::size_t slots = slots_per_bucket * bucket_count;
  keys_.assign(slots * slot_width, '\0');
  key_lens_.assign(slots, 0);
  values_.assign(slots, 0);
  last_write_.assign(slots, 0);
  if (slots_per_bucket >= kWideBucket) reset_wide();
}

void HashTable::reset_wide() {
  WideIndex w;
  w.free.resize(bucket_count_);
  w.by_write.resize(bucket_count_);
  for (std::size_t b = 0; b < bucket_count_; ++b) {
    for (std::size_t i = 0; i < slots_per_bucket_; ++i) {
      w.free[b].insert(b * slots_per_bucket_ + i);
    }
  }
  wide_ = std::move(w);
}

std::size_t HashTable::locate(std::string_view key, std::size_t bucket) const {
  if (wide_) {
    auto it = wide_->slot_of.find(std::string(key));
    return it == wide_->slot_of.end() ? kNoSlot : it->second;
  }
  const std::size_t first = bucket * slots_per_bucket_;
  for (std::size_t i = first; i < first + slots_per_bucket_; ++i) {
    if (key_lens_[i] != 0 && key_at(i) == key) return i;
  }
  return kNoSlot;
}

ProcessResult HashTable::upsert_wide(const KeyValuePair& pair, AggOp op) {
  WideIndex& w = *wide_;
  const std::size_t bucket = bucket_of(pair.key);
  auto& order = w.by_write[bucket];
  if (auto it = w.slot_of.find(pair.key); it != w.slot_of.end()) {
    const std::size_t i = it->second;
    values_[i] = aggregate_values(op, values_[i], pair.value);
    order.erase({last_write_[i], i});
    last_write_[i] = ++write_clock_;
    order.insert({last_write_[i], i});
    return {Outcome::kAggregated, std::nullopt};
  }

  ProcessResult result;
  std::size_t target;
  if (!w.free[bucket].empty()) {
    target = *w.free[bucket].begin();
    w.free[bucket].erase(w.free[bucket].begin());
    result.outcome = Outcome::kStored;
    ++occupancy_;
  } else {
    target = order.begin()->second;
    order.erase(order.begin());
    result.outcome = Outcome::kEvicted;
    result.evicted = KeyValuePair{std::string(key_at(target)), values_[target]};
    w.slot_of.erase(result.evicted->key);
  }
  const std::size_t len = pair.key.size();
  char* slot = keys_.data() + target * slot_width_;
  std::memcpy(slot, pair.key.data(), len);
  std::memset(slot + len, 0, slot_width_ - len);
  key_lens_[target] = static_cast<std::uint8_t>(len);
  values_[target] = pair.value;
  last_write_[target] = ++write_clock_;
  order.insert({last_write_[target], target});
  w.slot_of.emplace(pair.key, target);
  return result;
}

std::size_t HashTable::buckets_for(std::size_t bytes, std::size_t slot_width,
                                   std::size_t slots_per_bucket) {
  const std::size_t bucket_bytes = slot_bytes(slot_width) * slots_per_bucket;
  return bucket_bytes == 0 ? 0 : bytes / bucket_bytes;
}

ProcessResult HashTable::upsert(const KeyValuePair& pair, AggOp op) {
  const std::size_t len = pair.key.size();
  if (len == 0 || len > slot_width_) {
    throw InvariantError("key of " + std::to_string(len) +
                         " bytes does not fit slot width " +
                         std::to_string(slot_width_));
  }
  if (wide_) return upsert_wide(pair, op);
  const std::size_t first = bucket_of(pair.key) * slots_per_bucket_;
  const std::size_t last = first + slots_per_bucket_;
  std::size_t free_slot = kNoSlot;
  std::size_t victim = first;
  for (std::size_t i = first; i < last; ++i) {
    if (key_lens_[i] == 0) {
      if (free_slot == kNoSlot) free_slot = i;
      continue;
    }
    if (key_lens_[i] == len &&
        std::memcmp(keys_.data() + i * slot_width_, pair.key.data(), len) ==
            0) {
      values_[i] = aggregate_values(op, values_[i], pair.value);
      last_write_[i] = ++write_clock_;
      return {Outcome::kAggregated, std::nullopt};
    }
    if (last_write_[i] < last_write_[victim]) victim = i;
  }

  ProcessResult result;
  std::size_t target = free_slot;
  if (target == kNoSlot) {
    target = victim;
    result.outcome = Outcome::kEvicted;
    result.evicted = KeyValuePair{std::string(key_at(target)), values_[target]};
  } else {
    result.outcome = Outcome::kStored;
    ++occupancy_;
  }
  char* slot = keys_.data() + target * slot_width_;
  std::memcpy(slot, pair.key.data(), len);
  std::memset(slot + len, 0, slot_width_ - len);
  key_lens_[target] = static_cast<std::uint8_t>(len);
  values_[target] = pair.value;
  last_write_[target] = ++write_clock_;
  return result;
}

std::optional<std::int32_t> HashTable::find(std::string_view key) const {
  if (key.empty() || key.size() > slot_width_) return std::nullopt;
  const std::size_t i = locate(key, bucket_of(key));
  if (i == kNoSlot) return std::nullopt;
  return values_[i];
}

std::vector<KeyValuePair> HashTable::drain() {
  std::vector<KeyValuePair> out;
  out.reserve(occupancy_);
  for_each([&](std::string_view k, std::int32_t v) {
    out.push_back({std::string(k), v});
  });
  clear();
  return out;
}

void HashTable::clear() {
  std::fill(keys_.begin(), keys_.end(), '\0');
  std::fill(key_lens_.begin(), key_lens_.end(), 0);
  std::fill(values_.begin(), values_.end(), 0);
  std::fill(last_write_.begin(), last_write_.end(), 0);
  occupancy_ = 0;
  if (wide_) reset_wide();
}

HashTable::SlotView HashTable::slot(std::size_t index) const {
  return {key_lens_.at(index) != 0,
          std::string_view(keys_.data() + index * slot_width_, slot_width_),
          key_lens_[index]};
}

// ---------------------------------------------------------------------------
// Fpe
// ---------------------------------------------------------------------------

Fpe::Fpe(std::size_t group, std::size_t slot_width,
         std::size_t slots_per_bucket, std::size_t fifo_depth)
    : group_(group),
      slot_width_(slot_width),
      slots_per_bucket_(slots_per_bucket),
      fifo_depth_(fifo_depth) {
  if (fifo_depth == 0) throw ConfigError("FIFO depth must be positive");
}

std::vector<KeyValuePair> Fpe::allocate(TreeId tree, std::size_t bytes) {
  std::vector<KeyValuePair> residents;
  if (auto it = tables_.find(tree); it != tables_.end() && it->second) {
    residents = it->second->drain();
  }
  const std::size_t buckets =
      HashTable::buckets_for(bytes, slot_width_, slots_per_bucket_);
  auto& slot = tables_[tree];
  slot.reset();
  if (buckets == 0) return residents;

  slot.emplace(slot_width_, slots_per_bucket_, buckets);
  std::vector<KeyValuePair> displaced;
  for (auto& p : residents) {
    auto r = slot->upsert(p, AggOp::kSum);
    if (r.evicted) displaced.push_back(std::move(*r.evicted));
  }
  return displaced;
}

void Fpe::release(TreeId tree) { tables_.erase(tree); }

const HashTable* Fpe::table(TreeId tree) const {
  auto it = tables_.find(tree);
  return it == tables_.end() || !it->second ? nullptr : &*it->second;
}

HashTable* Fpe::table(TreeId tree) {
  auto it = tables_.find(tree);
  return it == tables_.end() || !it->second ? nullptr : &*it->second;
}

ProcessResult Fpe::process(TreeId tree, const KeyValuePair& pair, AggOp op) {
  auto it = tables_.find(tree);
  if (it == tables_.end()) {
    throw UnknownTreeError("FPE " + std::to_string(group_) +
                           " holds no memory for tree " +
                           std::to_string(tree));
  }
  ++counters_.lookups;
  if (!it->second) {
    ++counters_.evictions;
    return {Outcome::kEvicted, pair};
  }
  ProcessResult r = it->second->upsert(pair, op);
  if (r.outcome == Outcome::kAggregated) ++counters_.hits;
  if (r.outcome == Outcome::kEvicted) ++counters_.evictions;
  return r;
}

void Fpe::enqueue(FifoEntry entry) {
  fifo_.push_back(std::move(entry));
  ++counters_.fifo_writes;
}

// ---------------------------------------------------------------------------
// RoundRobinScheduler
// ---------------------------------------------------------------------------

std::optional<std::pair<std::size_t, FifoEntry>> RoundRobinScheduler::schedule(
    std::span<Fpe> fpes) {
  auto idx = pick([&](std::size_t i) {
    return i < fpes.size() && !fpes[i].fifo().empty();
  });
  if (!idx) return std::nullopt;
  auto& fifo = fpes[*idx].fifo();
  FifoEntry e = std::move(fifo.front());
  fifo.pop_front();
  return std::pair{*idx, std::move(e)};
}

// ---------------------------------------------------------------------------
// Bpe
// ---------------------------------------------------------------------------

Bpe::Bpe(std::size_t capacity_bytes, const GroupScheme& groups,
         std::size_t slots_per_bucket)
    : capacity_bytes_(capacity_bytes),
      groups_(groups),
      slots_per_bucket_(slots_per_bucket),
      counters_(groups.group_count()) {}

std::vector<std::pair<TreeId, KeyValuePair>> Bpe::layout(
    const std::map<TreeId, std::size_t>& tree_bytes) {
  std::size_t total = 0;
  for (const auto& [tree, bytes] : tree_bytes) total += bytes;
  if (total > capacity_bytes_) {
    throw ConfigError("BPE regions need " + std::to_string(total) +
                      " bytes but capacity is " +
                      std::to_string(capacity_bytes_));
  }

  std::vector<std::pair<TreeId, KeyValuePair>> residents;
  for (auto& [tree, regions] : regions_) {
    for (auto& r : regions) {
      if (!r.table) continue;
      for (auto& p : r.table->drain()) residents.emplace_back(tree, std::move(p));
    }
  }

  regions_.clear();
  const std::size_t k = groups_.group_count();
  std::uint64_t cursor = 0;
  for (const auto& [tree, bytes] : tree_bytes) {
    auto& regions = regions_[tree];
    regions.resize(k);
    const std::size_t per_group = bytes / k;
    for (std::size_t g = 0; g < k; ++g) {
      Region& r = regions[g];
      r.base = cursor + g * per_group;
      r.bytes = per_group;
      const std::size_t w = groups_.slot_width(g);
      const std::size_t buckets =
          HashTable::buckets_for(per_group, w, slots_per_bucket_);
      if (buckets > 0) r.table.emplace(w, slots_per_bucket_, buckets);
    }
    cursor += bytes;
  }

  std::vector<std::pair<TreeId, KeyValuePair>> displaced;
  for (auto& [tree, pair] : residents) {
    auto it = regions_.find(tree);
    if (it == regions_.end()) {
      displaced.emplace_back(tree, std::move(pair));
      continue;
    }
    auto& r = it->second[group_of(pair.key.size(), groups_)];
    if (!r.table) {
      displaced.emplace_back(tree, std::move(pair));
      continue;
    }
    auto res = r.table->upsert(pair, AggOp::kSum);
    if (res.evicted) displaced.emplace_back(tree, std::move(*res.evicted));
  }
  return displaced;
}

const Bpe::Region& Bpe::region(TreeId tree, std::size_t group) const {
  auto it = regions_.find(tree);
  if (it == regions_.end()) {
    throw RegionUnallocatedError("BPE has no region for tree " +
                                 std::to_string(tree));
  }
  return it->second.at(group);
}

Bpe::Region& Bpe::region(TreeId tree, std::size_t group) {
  auto it = regions_.find(tree);
  if (it == regions_.end()) {
    throw RegionUnallocatedError("BPE has no region for tree " +
                                 std::to_string(tree));
  }
  return it->second.at(group);
}

std::uint64_t Bpe::address(TreeId tree, std::size_t group,
                           std::size_t index) const {
  const Region& r = region(tree, group);
  return r.base + index * HashTable::slot_bytes(groups_.slot_width(group));
}

ProcessResult Bpe::process(TreeId tree, std::size_t group,
                           const KeyValuePair& pair, AggOp op) {
  Region& r = region(tree, group);
  BpeCounters& c = counters_[group];
  ++c.lookups;
  if (!r.table) {
    ++c.emits;
    return {Outcome::kEvicted, pair};
  }
  ProcessResult res = r.table->upsert(pair, op);
  switch (res.outcome) {
    case Outcome::kAggregated:
      ++c.hits;
      break;
    case Outcome::kStored:
      ++c.stores;
      break;
    case Outcome::kEvicted:
      ++c.stores;
      ++c.emits;
      break;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Timing
// ---------------------------------------------------------------------------

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kHeaderAnalyzer:
      return "header_analyzer";
    case Stage::kCrossbar:
      return "crossbar";
    case Stage::kFpeHash:
      return "fpe_hash";
    case Stage::kFpeAggregate:
      return "fpe_aggregate";
    case Stage::kFpeForward:
      return "fpe_forward";
    case Stage::kBpeAggregate:
      return "bpe_aggregate";
    case Stage::kBpeFlush:
      return "bpe_flush";
  }
  return "?";
}

std::uint64_t charge_timing(const TimingModel& model, Stage stage,
                            std::size_t payload_bytes) {
  return model.cycles(stage) + ceil_div(payload_bytes, model.datapath_bytes);
}

// ---------------------------------------------------------------------------
// AggregationEngine
// ---------------------------------------------------------------------------

AggregationEngine::AggregationEngine(EngineConfig config)
    : config_(std::move(config)),
      bpe_(config_.multi_level ? config_.bpe_bytes : 0, config_.groups,
           config_.slots_per_bucket),
      scheduler_(config_.groups.group_count()),
      fpe_free_(config_.groups.group_count(), 0) {
  if (config_.slots_per_bucket == 0) {
    throw ConfigError("slots per bucket must be positive");
  }
  if (config_.timing.bpe_burst == 0 || config_.timing.datapath_bytes == 0 ||
      config_.timing.clock_period_ns <= 0) {
    throw ConfigError("timing model needs positive burst, width and clock");
  }
  for (std::size_t g = 0; g < config_.groups.group_count(); ++g) {
    fpes_.emplace_back(g, config_.groups.slot_width(g),
                       config_.slots_per_bucket, config_.fifo_depth);
  }
}

std::uint64_t AggregationEngine::charge(Stage stage, std::size_t bytes) {
  const std::uint64_t c = charge_timing(config_.timing, stage, bytes);
  stage_totals_[static_cast<std::size_t>(stage)] += c;
  return c;
}

void AggregationEngine::configure(const std::map<TreeId, TreeMemory>& shares,
                                  std::uint64_t now,
                                  std::vector<TimedPacket>& out) {
  drain_fifos(out);
  for (auto it = trees_.begin(); it != trees_.end();) {
    if (!shares.contains(it->first)) {
      for (auto& f : fpes_) f.release(it->first);
      it = trees_.erase(it);
    } else {
      ++it;
    }
  }
  std::map<TreeId, std::size_t> bpe_bytes;
  for (const auto& [tree, share] : shares) {
    TreeRuntime& rt = trees_[tree];
    const AggOp op = rt.op.value_or(AggOp::kSum);
    for (auto& f : fpes_) {
      for (auto& p : f.allocate(tree, share.fpe_bytes_per_group)) {
        emit(tree, op, std::move(p), now, out);
      }
    }
    bpe_bytes[tree] = config_.multi_level ? share.bpe_bytes : 0;
  }
  if (config_.multi_level) {
    for (auto& [tree, p] : bpe_.layout(bpe_bytes)) {
      emit(tree, trees_[tree].op.value_or(AggOp::kSum), std::move(p), now,
           out);
    }
  }
}

void AggregationEngine::ingest(TreeId tree, AggOp op, std::size_t ingress_port,
                               std::size_t packet_bytes,
                               std::span<DispatchedPair> pairs,
                               std::uint64_t arrival_cycle,
                               std::vector<TimedPacket>& out) {
  TreeRuntime& rt = trees_[tree];
  if (!rt.op) rt.op = op;
  const TimingModel& tm = config_.timing;
  const bool timed = config_.timing_enabled;

  std::uint64_t start = arrival_cycle;
  if (timed) {
    if (ingress_port >= analyzer_free_.size()) {
      analyzer_free_.resize(ingress_port + 1, 0);
    }
    start = std::max(arrival_cycle, analyzer_free_[ingress_port]);
    analyzer_free_[ingress_port] =
        start + ceil_div(packet_bytes, tm.datapath_bytes);
  }
  charge(Stage::kHeaderAnalyzer, packet_bytes);
  const std::uint64_t header_done = start + tm.cycles(Stage::kHeaderAnalyzer);
  const bool to_back_end = config_.multi_level && bpe_.has_tree(tree);

  std::size_t streamed = kFrameHeaderBytes + kAggregationHeaderBytes;
  for (auto& d : pairs) {
    streamed += pair_wire_size(d.pair);
    const std::uint64_t ready = header_done +
                                ceil_div(streamed, tm.datapath_bytes) +
                                charge(Stage::kCrossbar);
    Fpe& fpe = fpes_.at(d.group);
    std::uint64_t begin = arrival_cycle;
    if (timed) {
      begin = std::max(ready, fpe_free_[d.group]);
      fpe_free_[d.group] = begin + tm.fpe_issue_cycles;
    }
    const std::uint64_t lookup =
        charge(Stage::kFpeHash) + charge(Stage::kFpeAggregate);

    ProcessResult r = fpe.process(tree, d.pair, op);
    if (r.outcome != Outcome::kEvicted) continue;

    const std::uint64_t forward_cost =
        charge(Stage::kFpeForward, pair_wire_size(*r.evicted));
    std::uint64_t done = timed ? begin + lookup : arrival_cycle;
    if (!to_back_end) {
      emit(tree, op, std::move(*r.evicted),
           timed ? done + forward_cost : arrival_cycle, out);
      continue;
    }

    FifoEntry entry{tree, op, std::move(*r.evicted), arrival_cycle};
    if (!timed) {
      fpe.enqueue(std::move(entry));
      serve_next(kForever, out);
      continue;
    }
    while (serve_next(done, out)) {
    }
    if (fpe.fifo_full()) {
      fpe.note_fifo_full();
      // The FPE stalls until the scheduler frees a slot in its FIFO.
      while (fpe.fifo_full()) {
        auto served = serve_next(kForever, out);
        done = std::max(done, served->second);
      }
      fpe_free_[d.group] =
          std::max(fpe_free_[d.group], done + tm.fpe_issue_cycles);
    }
    entry.ready_cycle = done + forward_cost;
    fpe.enqueue(std::move(entry));
  }
}

std::optional<std::pair<std::size_t, std::uint64_t>>
AggregationEngine::serve_next(std::uint64_t limit,
                              std::vector<TimedPacket>& out) {
  std::uint64_t earliest = kForever;
  for (const auto& f : fpes_) {
    if (!f.fifo().empty()) {
      earliest = std::min(earliest, f.fifo().front().ready_cycle);
    }
  }
  if (earliest == kForever) return std::nullopt;

  const bool timed = config_.timing_enabled;
  const std::uint64_t slot = timed ? std::max(bpe_clock_, earliest) : earliest;
  if (slot > limit) return std::nullopt;

  auto idx = scheduler_.pick([&](std::size_t i) {
    const auto& q = fpes_[i].fifo();
    return !q.empty() && q.front().ready_cycle <= slot;
  });
  auto& fifo = fpes_[*idx].fifo();
  for (std::size_t b = 0; b < config_.timing.bpe_burst && !fifo.empty() &&
                          fifo.front().ready_cycle <= slot;
       ++b) {
    FifoEntry e = std::move(fifo.front());
    fifo.pop_front();
    const std::uint64_t cost = charge(Stage::kBpeAggregate);
    ProcessResult r = bpe_.process(e.tree, *idx, e.pair, e.op);
    if (r.outcome == Outcome::kEvicted) {
      emit(e.tree, e.op, std::move(*r.evicted), timed ? slot + cost : slot,
           out);
    }
  }
  if (timed) bpe_clock_ = slot + config_.timing.bpe_issue_cycles;
  return std::pair{*idx, slot};
}

void AggregationEngine::drain_fifos(std::vector<TimedPacket>& out) {
  while (serve_next(kForever, out)) {
  }
}

void AggregationEngine::emit(TreeId tree, AggOp op, KeyValuePair pair,
                             std::uint64_t at, std::vector<TimedPacket>& out) {
  TreeRuntime& rt = trees_[tree];
  if (!rt.out) rt.out.emplace(tree, op, config_.mtu);
  if (auto full = rt.out->add(std::move(pair))) {
    out.push_back({std::move(*full), rt.last_emit});
  }
  rt.last_emit = std::max(rt.last_emit, at);
}

std::vector<TimedPacket> AggregationEngine::flush_tree(const TreeConfig& tree,
                                                       std::uint64_t now) {
  if (!tree.all_children_done()) {
    throw PrematureFlushError(
        "tree " + std::to_string(tree.tree_id) + " has " +
        std::to_string(tree.eot_seen) + " of " +
        std::to_string(tree.child_count) + " EoT packets");
  }
  std::vector<TimedPacket> result;
  drain_fifos(result);

  TreeRuntime& rt = trees_[tree.tree_id];
  const AggOp op = rt.op.value_or(tree.bound_op.value_or(AggOp::kSum));
  const bool timed = config_.timing_enabled;

  std::uint64_t start = now;
  if (timed) {
    for (auto t : fpe_free_) start = std::max(start, t);
    start = std::max({start, bpe_clock_, rt.last_emit});
  }
  if (rt.out && !rt.out->empty()) {
    result.push_back({rt.out->finish(false), timed ? start : now});
  }

  std::vector<KeyValuePair> pairs;
  for (auto& f : fpes_) {
    if (HashTable* t = f.table(tree.tree_id)) {
      for (auto& p : t->drain()) pairs.push_back(std::move(p));
    }
  }
  if (bpe_.has_tree(tree.tree_id)) {
    for (std::size_t g = 0; g < config_.groups.group_count(); ++g) {
      auto& r = bpe_.region(tree.tree_id, g);
      if (!r.table) continue;
      for (auto& p : r.table->drain()) pairs.push_back(std::move(p));
    }
  }

  std::size_t bytes = 0;
  for (const auto& p : pairs) bytes += pair_wire_size(p);
  const std::uint64_t cost = charge(Stage::kBpeFlush, bytes);
  flush_cycles_ += cost;
  ++flushes_;
  const std::uint64_t done = timed ? start + cost : now;

  PacketBuilder builder(tree.tree_id, op, config_.mtu);
  for (auto& p : pairs) {
    if (auto full = builder.add(std::move(p))) {
      result.push_back({std::move(*full), done});
    }
  }
  result.push_back({builder.finish(true), done});

  rt.op.reset();
  rt.out.reset();
  rt.last_emit = 0;
  return result;
}

std::size_t AggregationEngine::resident_pairs(TreeId tree) const {
  std::size_t n = 0;
  for (const auto& f : fpes_) {
    if (const HashTable* t = f.table(tree)) n += t->occupancy();
  }
  if (bpe_.has_tree(tree)) {
    for (std::size_t g = 0; g < config_.groups.group_count(); ++g) {
      const auto& r = bpe_.region(tree, g);
      if (r.table) n += r.table->occupancy();
    }
  }
  return n;
}

std::vector<KeyValuePair> AggregationEngine::resident(TreeId tree) const {
  std::vector<KeyValuePair> out;
  auto collect = [&](const HashTable& t) {
    t.for_each([&](std::string_view k, std::int32_t v) {
      out.push_back({std::string(k), v});
    });
  };
  for (const auto& f : fpes_) {
    if (const HashTable* t = f.table(tree)) collect(*t);
  }
  if (bpe_.has_tree(tree)) {
    for (std::size_t g = 0; g < config_.groups.group_count(); ++g) {
      const auto& r = bpe_.region(tree, g);
      if (r.table) collect(*r.table);
    }
  }
  return out;
}

std::vector<CounterRecord> AggregationEngine::snapshot(NodeId switch_id) const {
  std::vector<CounterRecord> out;
  for (const auto& f : fpes_) {
    const FpeCounters& c = f.counters();
    const BpeCounters& b = bpe_.counters().at(f.group());
    out.push_back({switch_id, f.group(), c.lookups, c.hits, c.evictions,
                   c.fifo_writes, c.fifo_full_events, b.stores, b.emits,
                   flush_cycles_});
  }
  return out;
}

}  // namespace switchagg
