// SPDX-License-Identifier: Apache-2.0

#include "switchagg/analytics.hpp"

#include <algorithm>
#include <cmath>

#include "switchagg/errors.hpp"
#include "switchagg/rng.hpp"
#include "switchagg/workload.hpp"

namespace switchagg {

double padding_overhead(std::uint64_t packet_bytes, std::uint64_t fixed_bytes,
                        std::span<const std::uint64_t> actual) {
  if (fixed_bytes == 0 || fixed_bytes > packet_bytes) {
    throw DomainError("need 1 <= pair size <= packet size");
  }
  if (actual.size() != packet_bytes / fixed_bytes) {
    throw DomainError("expected " + std::to_string(packet_bytes / fixed_bytes) +
                      " pair lengths, got " + std::to_string(actual.size()));
  }
  std::uint64_t sum = 0;
  for (std::uint64_t p : actual) {
    if (p == 0 || p > fixed_bytes) {
      throw DomainError("pair length " + std::to_string(p) + " outside 1.." +
                        std::to_string(fixed_bytes));
    }
    sum += p;
  }
  return static_cast<double>(packet_bytes) / static_cast<double>(sum);
}

std::uint64_t header_overhead(std::uint64_t payload, std::uint64_t per_packet,
                              std::uint64_t header) {
  if (per_packet == 0) throw DomainError("per-packet payload must be >= 1");
  return payload + payload / per_packet * header;
}

void ReductionParams::validate() const {
  if (variety == 0) throw DomainError("key variety must be >= 1");
  if (total < variety) {
    throw DomainError("total pairs " + std::to_string(total) +
                      " below key variety " + std::to_string(variety));
  }
  if (capacity == 0) throw DomainError("capacity must be >= 1");
  if (!(pair_bytes > 0.0)) throw DomainError("pair length must be positive");
}

double reduction_model(const ReductionParams& p) {
  p.validate();
  const double m = static_cast<double>(p.total);
  const double n = static_cast<double>(p.variety);
  const double c = static_cast<double>(p.capacity);
  if (p.variety <= p.capacity) return 1.0 - n / m;
  return (1.0 / n - 1.0 / m) * c;
}

double reduction_bound(const ReductionParams& p) {
  p.validate();
  if (p.variety <= p.capacity) return 1.0 - static_cast<double>(p.variety) /
                                                static_cast<double>(p.total);
  return static_cast<double>(p.capacity) / static_cast<double>(p.variety);
}

bool IdealizedNode::push(std::uint64_t key, std::vector<std::uint64_t>& out) {
  ++in_;
  if (auto it = counts_.find(key); it != counts_.end()) {
    ++it->second;
    return false;
  }
  if (counts_.size() < capacity_) {
    counts_.emplace(key, 1);
    return false;
  }
  out.push_back(key);
  ++out_;
  return true;
}

void IdealizedNode::flush(std::vector<std::uint64_t>& out) {
  std::vector<std::uint64_t> keys;
  keys.reserve(counts_.size());
  for (const auto& [k, c] : counts_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  out.insert(out.end(), keys.begin(), keys.end());
  out_ += keys.size();
  counts_.clear();
}

NodeRun run_idealized(std::span<const std::uint64_t> keys,
                      std::uint64_t capacity) {
  IdealizedNode node(capacity);
  NodeRun run;
  for (std::uint64_t k : keys) node.push(k, run.output);
  node.flush(run.output);
  run.reduction = keys.empty() ? 0.0
                               : 1.0 - static_cast<double>(run.output.size()) /
                                           static_cast<double>(keys.size());
  return run;
}

std::vector<std::uint64_t> even_stream(std::uint64_t total,
                                       std::uint64_t variety,
                                       std::uint64_t seed) {
  if (variety == 0) throw DomainError("key variety must be >= 1");
  std::vector<std::uint64_t> keys;
  keys.reserve(total);
  const std::uint64_t base = total / variety;
  const std::uint64_t extra = total % variety;
  for (std::uint64_t k = 0; k < variety; ++k) {
    const std::uint64_t n = base + (k < extra ? 1 : 0);
    keys.insert(keys.end(), n, k);
  }
  Rng rng(seed);
  for (std::size_t i = keys.size(); i > 1; --i) {
    std::swap(keys[i - 1], keys[rng.below(i)]);
  }
  return keys;
}

std::vector<std::uint64_t> uniform_stream(std::uint64_t total,
                                          std::uint64_t variety,
                                          std::uint64_t seed) {
  if (variety == 0) throw DomainError("key variety must be >= 1");
  Rng rng(seed);
  std::vector<std::uint64_t> keys(total);
  for (auto& k : keys) k = rng.below(variety);
  return keys;
}

std::vector<std::uint64_t> zipf_stream(std::uint64_t total,
                                       std::uint64_t variety, double s,
                                       std::uint64_t seed) {
  if (variety == 0) throw DomainError("key variety must be >= 1");
  ZipfSampler zipf(variety, s);
  Rng rng(seed);
  std::vector<std::uint64_t> keys(total);
  for (auto& k : keys) k = zipf(rng);
  return keys;
}

MergeComparison check_merge_equivalence(
    const std::vector<std::vector<std::uint64_t>>& flows,
    std::uint64_t capacity) {
  std::vector<std::size_t> schedule;
  std::vector<std::size_t> left;
  for (const auto& f : flows) left.push_back(f.size());
  for (bool any = true; any;) {
    any = false;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      if (left[i] == 0) continue;
      schedule.push_back(i);
      --left[i];
      any = true;
    }
  }
  return check_merge_equivalence(flows, capacity, schedule);
}

MergeComparison check_merge_equivalence(
    const std::vector<std::vector<std::uint64_t>>& flows,
    std::uint64_t capacity, std::span<const std::size_t> schedule) {
  std::vector<std::size_t> cursor(flows.size(), 0);
  std::vector<std::uint64_t> interleaved;
  for (std::size_t f : schedule) {
    if (f >= flows.size() || cursor[f] >= flows[f].size()) {
      throw DomainError("schedule does not match the flows");
    }
    interleaved.push_back(flows[f][cursor[f]++]);
  }
  std::vector<std::uint64_t> merged;
  for (std::size_t f = 0; f < flows.size(); ++f) {
    if (cursor[f] != flows[f].size()) {
      throw DomainError("schedule leaves pairs of flow " + std::to_string(f));
    }
    merged.insert(merged.end(), flows[f].begin(), flows[f].end());
  }
  return {run_idealized(interleaved, capacity).reduction,
          run_idealized(merged, capacity).reduction};
}

std::vector<MultihopPoint> check_multihop(const ReductionParams& p,
                                          std::size_t hops,
                                          KeyDistribution dist, double zipf_s,
                                          std::uint64_t seed) {
  if (hops == 0) throw DomainError("need at least one hop");
  p.validate();
  std::vector<std::uint64_t> stream =
      dist == KeyDistribution::kUniform
          ? even_stream(p.total, p.variety, seed)
          : zipf_stream(p.total, p.variety, zipf_s, seed);
  const double m = static_cast<double>(stream.size());
  std::vector<MultihopPoint> out;
  for (std::size_t h = 1; h <= hops; ++h) {
    stream = run_idealized(stream, p.capacity).output;
    out.push_back({h, 1.0 - static_cast<double>(stream.size()) / m});
  }
  return out;
}

}  // namespace switchagg
