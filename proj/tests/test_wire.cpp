// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "switchagg/errors.hpp"
#include "switchagg/rng.hpp"
#include "switchagg/wire.hpp"

using namespace switchagg;

namespace {

using Bytes = std::vector<std::uint8_t>;

Packet agg(AggregationPacket body, NodeId src = 1, NodeId dst = 2) {
  return Packet{Frame{src, dst}, std::move(body)};
}

// Independent big-endian assembler used as the layout oracle.
struct Asm {
  Bytes b;
  Asm& u8(unsigned v) {
    b.push_back(static_cast<std::uint8_t>(v));
    return *this;
  }
  Asm& u16(unsigned v) { return u8(v >> 8).u8(v & 0xFF); }
  Asm& i32(std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    return u8(u >> 24).u8((u >> 16) & 0xFF).u8((u >> 8) & 0xFF).u8(u & 0xFF);
  }
  Asm& str(std::string_view s) {
    for (char c : s) u8(static_cast<unsigned char>(c));
    return *this;
  }
};

Packet random_packet(Rng& rng) {
  Packet p;
  p.frame = {static_cast<NodeId>(rng.below(65536)),
             static_cast<NodeId>(rng.below(65536))};
  switch (rng.below(5)) {
    case 0: {
      LaunchBody b;
      for (auto n = rng.below(5); n > 0; --n) {
        b.reducer_addrs.push_back(static_cast<NodeId>(rng.below(65536)));
      }
      for (auto n = rng.below(20); n > 0; --n) {
        b.mapper_addrs.push_back(static_cast<NodeId>(rng.below(65536)));
      }
      p.body = b;
      break;
    }
    case 1: {
      ConfigureBody b;
      for (auto n = rng.below(10); n > 0; --n) {
        b.trees.push_back({static_cast<TreeId>(rng.below(65536)),
                           static_cast<std::uint16_t>(rng.below(65536))});
      }
      p.body = b;
      break;
    }
    case 2:
      p.body = AckBody{static_cast<std::uint8_t>(rng.below(2))};
      break;
    default: {
      AggregationPacket b;
      b.tree_id = static_cast<TreeId>(rng.below(65536));
      b.eot = rng.coin();
      b.op = static_cast<AggOp>(rng.below(3));
      std::size_t budget = pair_budget(kDefaultMtu);
      for (auto n = rng.below(40); n > 0; --n) {
        KeyValuePair kv;
        kv.key.resize(1 + rng.below(64));
        for (auto& c : kv.key) c = static_cast<char>(rng.below(256));
        kv.value = static_cast<std::int32_t>(rng.next());
        if (pair_wire_size(kv) > budget) break;
        budget -= pair_wire_size(kv);
        b.pairs.push_back(std::move(kv));
      }
      p.body = b;
    }
  }
  return p;
}

template <class E>
std::size_t offset_of(const Bytes& b) {
  try {
    decode(b);
  } catch (const E& e) {
    return e.offset();
  }
  FAIL("expected decode error");
  return 0;
}

}  // namespace

TEST_CASE("empty aggregation packet is header-only") {
  const Bytes bytes = encode(agg({0, false, AggOp::kSum, {}}));
  CHECK(bytes.size() == kFrameHeaderBytes + kAggregationHeaderBytes);
  const Bytes expect =
      Asm{}.u16(1).u16(2).u8(4).u16(0).u8(0).u8(0).u16(0).b;
  CHECK(bytes == expect);
}

TEST_CASE("single pair layout after the pair count") {
  const Bytes bytes = encode(agg({9, true, AggOp::kMax, {{"ab", 7}}}));
  const Bytes expect = Asm{}
                           .u16(1)
                           .u16(2)
                           .u8(4)
                           .u16(9)
                           .u8(1)
                           .u8(1)
                           .u16(1)
                           .u8(0x02)
                           .u8(0x04)
                           .str("ab")
                           .i32(7)
                           .b;
  CHECK(bytes == expect);
  const std::size_t pairs_at = kFrameHeaderBytes + kAggregationHeaderBytes;
  CHECK(Bytes(bytes.begin() + pairs_at, bytes.end()) ==
        Bytes{0x02, 0x04, 'a', 'b', 0, 0, 0, 7});
}

TEST_CASE("negative values are two's complement big-endian") {
  const Bytes bytes = encode(agg({0, false, AggOp::kSum, {{"k", -2}}}));
  CHECK(Bytes(bytes.end() - 4, bytes.end()) == Bytes{0xFF, 0xFF, 0xFF, 0xFE});
}

TEST_CASE("control packet layouts") {
  CHECK(encode(Packet{{3, 4}, LaunchBody{{7}, {8, 9}}}) ==
        Asm{}.u16(3).u16(4).u8(0).u16(1).u16(2).u16(7).u16(8).u16(9).b);
  CHECK(encode(Packet{{3, 4}, ConfigureBody{{{5, 3}}}}) ==
        Asm{}.u16(3).u16(4).u8(1).u16(1).u16(5).u16(3).b);
  CHECK(encode(Packet{{3, 4}, AckBody{0}}) == Asm{}.u16(3).u16(4).u8(2).b);
  CHECK(encode(Packet{{3, 4}, AckBody{1}}) == Asm{}.u16(3).u16(4).u8(3).b);
}

TEST_CASE("hand-assembled ack type 1 decodes") {
  const Packet p = decode(Asm{}.u16(0).u16(1).u8(3).b);
  REQUIRE(std::holds_alternative<AckBody>(p.body));
  CHECK(std::get<AckBody>(p.body).ack_type == 1);
  CHECK(p.type() == PacketType::kAckSwitch);
}

TEST_CASE("size law follows the layout constants") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    AggregationPacket b;
    std::size_t expect = kFrameHeaderBytes + kAggregationHeaderBytes;
    for (auto n = rng.below(20); n > 0; --n) {
      KeyValuePair kv{std::string(1 + rng.below(64), 'x'), 1};
      expect += kPairHeaderBytes + kv.key.size() + kValueBytes;
      b.pairs.push_back(kv);
    }
    const Packet p = agg(b);
    CHECK(encoded_size(p) == expect);
    CHECK(encode(p).size() == expect);
  }
}

TEST_CASE("randomized round trip and canonical form") {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const Packet p = random_packet(rng);
    const Bytes b = encode(p);
    const Packet q = decode(b);
    REQUIRE(q == p);
    REQUIRE(encode(q) == b);
  }
}

TEST_CASE("decode errors carry offsets") {
  CHECK(offset_of<TruncatedError>({}) == 0);
  CHECK(offset_of<TruncatedError>({0, 1, 0}) == 2);

  // Unknown packet type at byte 4.
  CHECK(offset_of<UnknownTypeError>(Asm{}.u16(1).u16(2).u8(9).b) == 4);
  // Unknown op at byte 8.
  CHECK(offset_of<UnknownTypeError>(
            Asm{}.u16(1).u16(2).u8(4).u16(0).u8(0).u8(7).u16(0).b) == 8);
  // Reserved flag bit at byte 7.
  CHECK(offset_of<UnknownTypeError>(
            Asm{}.u16(1).u16(2).u8(4).u16(0).u8(2).u8(0).u16(0).b) == 7);

  const Asm head = Asm{}.u16(1).u16(2).u8(4).u16(0).u8(0).u8(0).u16(1);
  // key_len of zero and above 64.
  CHECK(offset_of<LengthMismatchError>(Asm(head).u8(0).u8(4).b) == 11);
  CHECK(offset_of<LengthMismatchError>(Asm(head).u8(65).u8(4).b) == 11);
  // value_len other than 4.
  CHECK(offset_of<LengthMismatchError>(
            Asm(head).u8(1).u8(8).str("a").i32(1).b) == 12);
  // Key bytes cut short.
  CHECK(offset_of<TruncatedError>(Asm(head).u8(3).u8(4).str("a").b) == 13);
  // Value cut short.
  CHECK(offset_of<TruncatedError>(Asm(head).u8(1).u8(4).str("a").u8(0).b) ==
        14);
  // Trailing byte after a complete body.
  const Bytes ok = Asm(head).u8(1).u8(4).str("a").i32(1).b;
  Bytes extra = ok;
  extra.push_back(0);
  CHECK(offset_of<LengthMismatchError>(extra) == ok.size());
  // Announced list longer than the bytes present.
  CHECK(offset_of<TruncatedError>(Asm{}.u16(1).u16(2).u8(1).u16(2).u16(5)
                                      .u16(3).b) == 11);
}

TEST_CASE("decode never accepts a random truncation of a valid packet") {
  Rng rng(77);
  for (int i = 0; i < 2000; ++i) {
    const Packet p = random_packet(rng);
    const Bytes b = encode(p);
    if (b.empty()) continue;
    const Bytes cut(b.begin(), b.begin() + rng.below(b.size()));
    CHECK_THROWS_AS(decode(cut), DecodeError);
  }
}

TEST_CASE("encode rejects oversize and invalid pairs") {
  AggregationPacket big;
  for (int i = 0; i < 30; ++i) big.pairs.push_back({std::string(64, 'k'), i});
  CHECK_THROWS_AS(encode(agg(big)), OversizeError);
  CHECK_NOTHROW(encode(agg(big), 9000));
  CHECK_THROWS_AS(encode(agg({0, false, AggOp::kSum, {{"", 1}}})),
                  InvariantError);
  CHECK_THROWS_AS(
      encode(agg({0, false, AggOp::kSum, {{std::string(65, 'x'), 1}}}), 9000),
      InvariantError);
  CHECK_THROWS_AS(encode(Packet{{0, 0}, AckBody{2}}), InvariantError);
}

TEST_CASE("packet builder packs greedily within the budget") {
  PacketBuilder b(3, AggOp::kSum, 200);
  CHECK(b.budget() == 200 - kFrameHeaderBytes - kAggregationHeaderBytes);
  std::vector<AggregationPacket> out;
  for (int i = 0; i < 100; ++i) {
    if (auto p = b.add({std::string(10, 'a'), i})) out.push_back(*p);
  }
  out.push_back(b.finish(true));
  const std::size_t per = b.budget() / pair_wire_size(10);
  CHECK(out.size() == (100 + per - 1) / per);
  int next = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].eot == (i + 1 == out.size()));
    CHECK(encoded_size(agg(out[i])) <= 200);
    for (const auto& kv : out[i].pairs) CHECK(kv.value == next++);
  }
  CHECK(next == 100);
  CHECK_THROWS_AS(PacketBuilder(0, AggOp::kSum, 12), PairTooLargeError);
  PacketBuilder small(0, AggOp::kSum, 30);
  CHECK_THROWS_AS(small.add({std::string(40, 'x'), 1}), PairTooLargeError);
}

TEST_CASE("op names") {
  CHECK(to_string(AggOp::kMin) == "MIN");
  CHECK(parse_agg_op("max") == AggOp::kMax);
  CHECK_FALSE(parse_agg_op("avg").has_value());
}
