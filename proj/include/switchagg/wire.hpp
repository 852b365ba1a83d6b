// SPDX-License-Identifier: Apache-2.0
//
// Packet formats exchanged between masters, controllers, switches and
// workers. Every multi-byte field is big-endian.
//
//   Frame        src_node u16 | dst_node u16 | packet_type u8 | body
//   Launch       n_reducers u16 | n_mappers u16 | reducers u16* | mappers u16*
//   Configure    n_trees u16 | (tree_id u16, child_count u16)*
//   Ack          (empty; ack type lives in packet_type)
//   Aggregation  tree_id u16 | flags u8 | op u8 | num_pairs u16 |
//                (key_len u8, value_len u8, key, value i32)*

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace switchagg {

using NodeId = std::uint16_t;
using TreeId = std::uint16_t;

enum class AggOp : std::uint8_t { kSum = 0, kMax = 1, kMin = 2 };

enum class PacketType : std::uint8_t {
  kLaunch = 0,
  kConfigure = 1,
  kAckMaster = 2,  // ack type 0: controller <-> master
  kAckSwitch = 3,  // ack type 1: controller <-> switch
  kAggregation = 4,
};

inline constexpr std::size_t kFrameHeaderBytes = 5;
inline constexpr std::size_t kAggregationHeaderBytes = 6;
inline constexpr std::size_t kPairHeaderBytes = 2;
inline constexpr std::size_t kValueBytes = 4;
inline constexpr std::size_t kMaxKeyBytes = 64;
inline constexpr std::size_t kMaxListEntries = 0xFFFF;
inline constexpr std::size_t kDefaultMtu = 1500;
inline constexpr std::uint8_t kEotFlag = 0x01;

struct KeyValuePair {
  std::string key;  // raw key bytes, 1..=64 of them
  std::int32_t value = 0;

  std::uint8_t key_len() const { return static_cast<std::uint8_t>(key.size()); }
  static constexpr std::uint8_t value_len() { return kValueBytes; }

  friend bool operator==(const KeyValuePair&, const KeyValuePair&) = default;
};

struct AggregationPacket {
  TreeId tree_id = 0;
  bool eot = false;
  AggOp op = AggOp::kSum;
  std::vector<KeyValuePair> pairs;

  friend bool operator==(const AggregationPacket&,
                         const AggregationPacket&) = default;
};

struct LaunchBody {
  std::vector<NodeId> reducer_addrs;
  std::vector<NodeId> mapper_addrs;

  friend bool operator==(const LaunchBody&, const LaunchBody&) = default;
};

struct TreeEntry {
  TreeId tree_id = 0;
  std::uint16_t child_count = 0;

  friend bool operator==(const TreeEntry&, const TreeEntry&) = default;
};

struct ConfigureBody {
  std::vector<TreeEntry> trees;

  friend bool operator==(const ConfigureBody&, const ConfigureBody&) = default;
};

struct AckBody {
  std::uint8_t ack_type = 0;  // 0 or 1

  friend bool operator==(const AckBody&, const AckBody&) = default;
};

struct Frame {
  NodeId src_node = 0;
  NodeId dst_node = 0;

  friend bool operator==(const Frame&, const Frame&) = default;
};

using PacketBody =
    std::variant<LaunchBody, ConfigureBody, AckBody, AggregationPacket>;

struct Packet {
  Frame frame;
  PacketBody body;

  PacketType type() const;

  friend bool operator==(const Packet&, const Packet&) = default;
};

/// Serialized size of one pair including its two length bytes.
constexpr std::size_t pair_wire_size(std::size_t key_len) {
  return kPairHeaderBytes + key_len + kValueBytes;
}
inline std::size_t pair_wire_size(const KeyValuePair& pair) {
  return pair_wire_size(pair.key.size());
}

/// Bytes available for pairs in one aggregation packet under `mtu`.
constexpr std::size_t pair_budget(std::size_t mtu) {
  constexpr std::size_t overhead = kFrameHeaderBytes + kAggregationHeaderBytes;
  return mtu > overhead ? mtu - overhead : 0;
}

std::size_t encoded_size(const Packet& packet);

/// Throws InvariantError when a field breaks its type invariant and
/// OversizeError when the frame would not fit in `mtu`.
std::vector<std::uint8_t> encode(const Packet& packet,
                                 std::size_t mtu = kDefaultMtu);

/// Throws TruncatedError, UnknownTypeError or LengthMismatchError; each
/// carries the offending byte offset.
Packet decode(std::span<const std::uint8_t> bytes);

void validate_pair(const KeyValuePair& pair);

/// Greedy first-fit packing of pairs into aggregation packets that fit `mtu`.
class PacketBuilder {
 public:
  PacketBuilder(TreeId tree, AggOp op, std::size_t mtu = kDefaultMtu);

  /// Appends `pair`; when it does not fit, the packet built so far is
  /// returned (eot unset) and `pair` starts the next one. Throws
  /// PairTooLargeError when `pair` alone exceeds the budget.
  std::optional<AggregationPacket> add(KeyValuePair pair);

  /// Hands out the packet under construction, possibly empty.
  AggregationPacket finish(bool eot);

  bool empty() const { return current_.pairs.empty(); }
  std::size_t pair_bytes() const { return bytes_; }
  std::size_t budget() const { return budget_; }
  AggOp op() const { return current_.op; }

 private:
  AggregationPacket current_;
  std::size_t budget_;
  std::size_t bytes_ = 0;
};

std::string_view to_string(AggOp op);
std::optional<AggOp> parse_agg_op(std::string_view name);

}  // namespace switchagg
