// SPDX-License-Identifier: Apache-2.0
//
// Closed-form traffic models and the idealized aggregation node they assume.
// All counts are in pairs of a common average length, so pair ratios and
// byte ratios coincide.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace switchagg {

/// Bytes sent per byte of payload when pairs padded to `fixed_bytes` are
/// packed into packets of `packet_bytes`: packet_bytes / sum(actual).
/// `actual` must hold exactly floor(packet_bytes / fixed_bytes) lengths, each
/// in [1, fixed_bytes]. Throws DomainError otherwise.
double padding_overhead(std::uint64_t packet_bytes, std::uint64_t fixed_bytes,
                        std::span<const std::uint64_t> actual);

/// Bytes on the wire for `payload` bytes split into packets carrying
/// `per_packet` payload bytes, each adding `header` bytes:
/// payload + floor(payload / per_packet) * header.
std::uint64_t header_overhead(std::uint64_t payload, std::uint64_t per_packet,
                              std::uint64_t header);

struct ReductionParams {
  std::uint64_t total = 0;     // M: pairs entering the node
  std::uint64_t variety = 0;   // N: distinct keys
  std::uint64_t capacity = 0;  // C: pairs the node can hold
  double pair_bytes = 20.0;    // L

  void validate() const;  // DomainError unless M >= N >= 1 and C >= 1
};

/// Reduction of a capacity-C node fed M evenly distributed pairs over N keys:
/// 1 - N/M when N <= C, otherwise (1/N - 1/M) * C.
double reduction_model(const ReductionParams& p);

/// Upper bound C/N that holds for any arrival order once N > C.
double reduction_bound(const ReductionParams& p);

/// Collision-free map of at most `capacity` keys. A pair whose key is absent
/// while the map is full is forwarded unaggregated.
class IdealizedNode {
 public:
  explicit IdealizedNode(std::uint64_t capacity) : capacity_(capacity) {}

  /// Returns true and appends to `out` when the pair is forwarded.
  bool push(std::uint64_t key, std::vector<std::uint64_t>& out);
  /// Emits every resident key once and empties the node.
  void flush(std::vector<std::uint64_t>& out);

  std::uint64_t pairs_in() const { return in_; }
  std::uint64_t pairs_out() const { return out_; }
  std::size_t resident() const { return counts_.size(); }

 private:
  std::uint64_t capacity_;
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
  std::uint64_t in_ = 0;
  std::uint64_t out_ = 0;
};

/// Output stream and reduction of one node over `keys`.
struct NodeRun {
  std::vector<std::uint64_t> output;
  double reduction = 0.0;
};
NodeRun run_idealized(std::span<const std::uint64_t> keys,
                      std::uint64_t capacity);

/// Every key in [0, variety) appears floor(M/N) or ceil(M/N) times, in a
/// seeded random order.
std::vector<std::uint64_t> even_stream(std::uint64_t total,
                                       std::uint64_t variety,
                                       std::uint64_t seed);
/// Independent uniform draws over [0, variety).
std::vector<std::uint64_t> uniform_stream(std::uint64_t total,
                                          std::uint64_t variety,
                                          std::uint64_t seed);
/// Independent Zipf(s) draws; rank r maps to key r - 1.
std::vector<std::uint64_t> zipf_stream(std::uint64_t total,
                                       std::uint64_t variety, double s,
                                       std::uint64_t seed);

struct MergeComparison {
  double multi_flow = 0.0;   // flows interleaved into one node
  double merged_flow = 0.0;  // flows concatenated into one stream
};

/// Round-robin interleaving versus concatenation.
MergeComparison check_merge_equivalence(
    const std::vector<std::vector<std::uint64_t>>& flows,
    std::uint64_t capacity);
/// Same, with the interleaving given as the flow index of each step; every
/// flow index must appear exactly as often as that flow has pairs.
MergeComparison check_merge_equivalence(
    const std::vector<std::vector<std::uint64_t>>& flows,
    std::uint64_t capacity, std::span<const std::size_t> schedule);

enum class KeyDistribution { kUniform, kZipf };

struct MultihopPoint {
  std::size_t hops = 0;
  double reduction = 0.0;
};

/// Chains capacity-C idealized nodes (each forwarding overflow downstream and
/// flushing at the end) and reports end-to-end reduction for 1..hops.
/// Uniform data uses even_stream; Zipf uses independent draws.
std::vector<MultihopPoint> check_multihop(const ReductionParams& p,
                                          std::size_t hops,
                                          KeyDistribution dist,
                                          double zipf_s = 0.99,
                                          std::uint64_t seed = 1);

}  // namespace switchagg
