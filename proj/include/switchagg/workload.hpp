// SPDX-License-Identifier: Apache-2.0
//
// Synthetic key-value workloads. All mappers share one universe of
// `key_variety` keys; a key id always expands to the same bytes, so pairs
// from different mappers merge in the network.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "switchagg/rng.hpp"
#include "switchagg/wire.hpp"

namespace switchagg {

enum class Distribution { kUniform, kZipf };

struct WorkloadSpec {
  // Serialized pair bytes each mapper emits; generation stops at the first
  // pair that reaches the target. Ignored when total_pairs is set.
  std::uint64_t total_bytes = 0;
  std::optional<std::uint64_t> total_pairs;  // pairs per mapper
  std::uint64_t key_variety = 1;
  Distribution distribution = Distribution::kUniform;
  double zipf_s = 0.99;
  std::size_t key_len_min = 16;
  std::size_t key_len_max = 64;
  std::int32_t value_min = 1;
  std::int32_t value_max = 1000;
  std::uint64_t seed = 0;
  AggOp op = AggOp::kSum;
  std::size_t mapper_count = 1;

  /// Throws SpecError.
  void validate() const;
};

/// Maps key ids to key bytes. The first min(8, len) bytes encode a bijection
/// of the id, which keeps distinct ids distinct; the rest come from a stream
/// seeded by (seed, id).
class KeyUniverse {
 public:
  KeyUniverse(std::uint64_t seed, std::uint64_t variety, std::size_t len_min,
              std::size_t len_max);

  std::uint64_t variety() const { return variety_; }
  std::size_t key_len(std::uint64_t id) const;
  std::string key(std::uint64_t id) const;

 private:
  std::uint64_t seed_;
  std::uint64_t variety_;
  std::size_t len_min_;
  std::size_t len_max_;
};

/// Inverse-CDF sampler over ranks 1..n with weight r^-s; returns rank - 1.
class ZipfSampler {
 public:
  ZipfSampler(std::uint64_t n, double s);
  std::uint64_t operator()(Rng& rng) const;
  std::uint64_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

/// Lazily generated stream of one mapper.
class WorkloadGenerator {
 public:
  WorkloadGenerator(const WorkloadSpec& spec, std::size_t mapper);

  std::optional<KeyValuePair> next();
  /// Next key id only, skipping byte expansion and the value draw.
  std::optional<std::uint64_t> next_id();

  std::uint64_t pairs_emitted() const { return pairs_; }
  std::uint64_t bytes_emitted() const { return bytes_; }

 private:
  bool exhausted() const;
  std::uint64_t draw_id();

  WorkloadSpec spec_;
  KeyUniverse universe_;
  std::optional<ZipfSampler> zipf_;
  Rng rng_;
  std::uint64_t pairs_ = 0;
  std::uint64_t bytes_ = 0;
};

/// Whole stream of `mapper`. Throws SpecError.
std::vector<KeyValuePair> generate(const WorkloadSpec& spec,
                                   std::size_t mapper);

/// Greedy in-order packing; the last packet (possibly empty) carries EoT.
std::vector<AggregationPacket> pack(std::span<const KeyValuePair> pairs,
                                    TreeId tree, AggOp op,
                                    std::size_t mtu = kDefaultMtu);

/// Trace files hold records of a big-endian u32 length followed by that many
/// bytes of one encoded packet.
void write_trace_record(std::ostream& out, const Packet& packet,
                        std::size_t mtu = kDefaultMtu);
std::vector<Packet> read_trace(std::istream& in);

std::string to_string(Distribution d);
std::optional<Distribution> parse_distribution(std::string_view name);

}  // namespace switchagg
