// SPDX-License-Identifier: Apache-2.0

#include "switchagg/wire.hpp"

#include <cstring>
#include <type_traits>

#include "switchagg/errors.hpp"

namespace switchagg {

namespace {

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve) { out_.reserve(reserve); }

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void i32(std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int shift = 24; shift >= 0; shift -= 8) {
      out_.push_back(static_cast<std::uint8_t>(u >> shift));
    }
  }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t> take() && { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == in_.size(); }

  std::uint8_t u8(const char* field) {
    need(1, field);
    return in_[pos_++];
  }
  std::uint16_t u16(const char* field) {
    need(2, field);
    const auto v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::int32_t i32(const char* field) {
    need(4, field);
    std::uint32_t u = 0;
    for (int i = 0; i < 4; ++i) u = (u << 8) | in_[pos_ + i];
    pos_ += 4;
    return static_cast<std::int32_t>(u);
  }
  std::string bytes(std::size_t n, const char* field) {
    need(n, field);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* field) const {
    if (in_.size() - pos_ < n) {
      throw TruncatedError(std::string("truncated ") + field, pos_);
    }
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void check_count(std::size_t n, const char* what) {
  if (n > kMaxListEntries) {
    throw InvariantError(std::string(what) + " count " + std::to_string(n) +
                         " does not fit a u16 field");
  }
}

std::size_t body_size(const LaunchBody& b) {
  return 4 + 2 * (b.reducer_addrs.size() + b.mapper_addrs.size());
}
std::size_t body_size(const ConfigureBody& b) { return 2 + 4 * b.trees.size(); }
std::size_t body_size(const AckBody&) { return 0; }
std::size_t body_size(const AggregationPacket& b) {
  std::size_t n = kAggregationHeaderBytes;
  for (const auto& p : b.pairs) n += pair_wire_size(p);
  return n;
}

}  // namespace

PacketType Packet::type() const {
  return std::visit(
      [](const auto& b) -> PacketType {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, LaunchBody>) {
          return PacketType::kLaunch;
        } else if constexpr (std::is_same_v<T, ConfigureBody>) {
          return PacketType::kConfigure;
        } else if constexpr (std::is_same_v<T, AckBody>) {
          return b.ack_type == 0 ? PacketType::kAckMaster
                                 : PacketType::kAckSwitch;
        } else {
          return PacketType::kAggregation;
        }
      },
      body);
}

void validate_pair(const KeyValuePair& pair) {
  if (pair.key.empty() || pair.key.size() > kMaxKeyBytes) {
    throw InvariantError("key length " + std::to_string(pair.key.size()) +
                         " outside 1..64");
  }
}

std::size_t encoded_size(const Packet& packet) {
  return kFrameHeaderBytes +
         std::visit([](const auto& b) { return body_size(b); }, packet.body);
}

std::vector<std::uint8_t> encode(const Packet& packet, std::size_t mtu) {
  const std::size_t size = encoded_size(packet);
  if (size > mtu) throw OversizeError(size, mtu);

  ByteWriter w(size);
  w.u16(packet.frame.src_node);
  w.u16(packet.frame.dst_node);

  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, LaunchBody>) {
          check_count(b.reducer_addrs.size(), "reducer");
          check_count(b.mapper_addrs.size(), "mapper");
          w.u8(static_cast<std::uint8_t>(PacketType::kLaunch));
          w.u16(static_cast<std::uint16_t>(b.reducer_addrs.size()));
          w.u16(static_cast<std::uint16_t>(b.mapper_addrs.size()));
          for (NodeId n : b.reducer_addrs) w.u16(n);
          for (NodeId n : b.mapper_addrs) w.u16(n);
        } else if constexpr (std::is_same_v<T, ConfigureBody>) {
          check_count(b.trees.size(), "tree");
          w.u8(static_cast<std::uint8_t>(PacketType::kConfigure));
          w.u16(static_cast<std::uint16_t>(b.trees.size()));
          for (const auto& t : b.trees) {
            w.u16(t.tree_id);
            w.u16(t.child_count);
          }
        } else if constexpr (std::is_same_v<T, AckBody>) {
          if (b.ack_type > 1) {
            throw InvariantError("ack type must be 0 or 1");
          }
          w.u8(static_cast<std::uint8_t>(packet.type()));
        } else {
          check_count(b.pairs.size(), "pair");
          w.u8(static_cast<std::uint8_t>(PacketType::kAggregation));
          w.u16(b.tree_id);
          w.u8(b.eot ? kEotFlag : 0);
          w.u8(static_cast<std::uint8_t>(b.op));
          w.u16(static_cast<std::uint16_t>(b.pairs.size()));
          for (const auto& p : b.pairs) {
            validate_pair(p);
            w.u8(p.key_len());
            w.u8(KeyValuePair::value_len());
            w.bytes(p.key);
            w.i32(p.value);
          }
        }
      },
      packet.body);

  return std::move(w).take();
}

Packet decode(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Packet packet;
  packet.frame.src_node = r.u16("src_node");
  packet.frame.dst_node = r.u16("dst_node");
  const std::size_t type_offset = r.offset();
  const std::uint8_t type = r.u8("packet_type");

  switch (static_cast<PacketType>(type)) {
    case PacketType::kLaunch: {
      LaunchBody b;
      const std::uint16_t n_red = r.u16("n_reducers");
      const std::uint16_t n_map = r.u16("n_mappers");
      b.reducer_addrs.reserve(n_red);
      b.mapper_addrs.reserve(n_map);
      for (std::uint16_t i = 0; i < n_red; ++i) {
        b.reducer_addrs.push_back(r.u16("reducer addr"));
      }
      for (std::uint16_t i = 0; i < n_map; ++i) {
        b.mapper_addrs.push_back(r.u16("mapper addr"));
      }
      packet.body = std::move(b);
      break;
    }
    case PacketType::kConfigure: {
      ConfigureBody b;
      const std::uint16_t n = r.u16("n_trees");
      b.trees.reserve(n);
      for (std::uint16_t i = 0; i < n; ++i) {
        TreeEntry t;
        t.tree_id = r.u16("tree_id");
        t.child_count = r.u16("child_count");
        b.trees.push_back(t);
      }
      packet.body = std::move(b);
      break;
    }
    case PacketType::kAckMaster:
      packet.body = AckBody{0};
      break;
    case PacketType::kAckSwitch:
      packet.body = AckBody{1};
      break;
    case PacketType::kAggregation: {
      AggregationPacket b;
      b.tree_id = r.u16("tree_id");
      const std::size_t flags_offset = r.offset();
      const std::uint8_t flags = r.u8("flags");
      if (flags & ~kEotFlag) {
        throw UnknownTypeError("reserved flag bits set", flags_offset);
      }
      b.eot = (flags & kEotFlag) != 0;
      const std::size_t op_offset = r.offset();
      const std::uint8_t op = r.u8("op");
      if (op > static_cast<std::uint8_t>(AggOp::kMin)) {
        throw UnknownTypeError("unknown aggregation op " + std::to_string(op),
                               op_offset);
      }
      b.op = static_cast<AggOp>(op);
      const std::uint16_t n = r.u16("num_pairs");
      b.pairs.reserve(n);
      for (std::uint16_t i = 0; i < n; ++i) {
        const std::size_t key_len_offset = r.offset();
        const std::uint8_t key_len = r.u8("key_len");
        if (key_len == 0 || key_len > kMaxKeyBytes) {
          throw LengthMismatchError(
              "key_len " + std::to_string(key_len) + " outside 1..64",
              key_len_offset);
        }
        const std::size_t value_len_offset = r.offset();
        const std::uint8_t value_len = r.u8("value_len");
        if (value_len != kValueBytes) {
          throw LengthMismatchError(
              "value_len " + std::to_string(value_len) + " is not 4",
              value_len_offset);
        }
        KeyValuePair p;
        p.key = r.bytes(key_len, "key");
        p.value = r.i32("value");
        b.pairs.push_back(std::move(p));
      }
      packet.body = std::move(b);
      break;
    }
    default:
      throw UnknownTypeError("unknown packet type " + std::to_string(type),
                             type_offset);
  }

  if (!r.done()) {
    throw LengthMismatchError("trailing bytes after body", r.offset());
  }
  return packet;
}

PacketBuilder::PacketBuilder(TreeId tree, AggOp op, std::size_t mtu)
    : budget_(pair_budget(mtu)) {
  if (budget_ < pair_wire_size(1)) {
    throw PairTooLargeError("MTU " + std::to_string(mtu) +
                            " leaves no room for a single pair");
  }
  current_.tree_id = tree;
  current_.op = op;
}

std::optional<AggregationPacket> PacketBuilder::add(KeyValuePair pair) {
  const std::size_t size = pair_wire_size(pair);
  if (size > budget_) {
    throw PairTooLargeError("pair of " + std::to_string(size) +
                            " bytes exceeds packet budget " +
                            std::to_string(budget_));
  }
  std::optional<AggregationPacket> done;
  if (bytes_ + size > budget_ || current_.pairs.size() == kMaxListEntries) {
    done = finish(false);
  }
  bytes_ += size;
  current_.pairs.push_back(std::move(pair));
  return done;
}

AggregationPacket PacketBuilder::finish(bool eot) {
  AggregationPacket out;
  out.tree_id = current_.tree_id;
  out.op = current_.op;
  std::swap(out.pairs, current_.pairs);
  out.eot = eot;
  bytes_ = 0;
  return out;
}

std::string_view to_string(AggOp op) {
  switch (op) {
    case AggOp::kSum:
      return "SUM";
    case AggOp::kMax:
      return "MAX";
    case AggOp::kMin:
      return "MIN";
  }
  return "?";
}

std::optional<AggOp> parse_agg_op(std::string_view name) {
  if (name == "SUM" || name == "sum") return AggOp::kSum;
  if (name == "MAX" || name == "max") return AggOp::kMax;
  if (name == "MIN" || name == "min") return AggOp::kMin;
  return std::nullopt;
}

}  // namespace switchagg
