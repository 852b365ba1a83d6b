// SPDX-License-Identifier: Apache-2.0

#include "switchagg/workload.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "switchagg/errors.hpp"

namespace switchagg {

namespace {

constexpr std::uint64_t kLenStream = 0x4C454E;   // key length draw
constexpr std::uint64_t kTailStream = 0x544149;  // key tail bytes
constexpr std::uint64_t kIdSalt = 0x4944;        // id bijection offset

}  // namespace

void WorkloadSpec::validate() const {
  if (key_variety == 0) throw SpecError("key_variety must be >= 1");
  if (key_len_min == 0 || key_len_min > key_len_max ||
      key_len_max > kMaxKeyBytes) {
    throw SpecError("key length range must lie within [1, 64]");
  }
  if (mapper_count == 0) throw SpecError("mapper_count must be >= 1");
  if (value_min > value_max) throw SpecError("empty value range");
  if (distribution == Distribution::kZipf && !(zipf_s > 0.0)) {
    throw SpecError("Zipf skew must be positive");
  }
  // Short keys carry only len bytes of id; they must still tell ids apart.
  if (key_len_min < 8) {
    const double room = std::pow(256.0, static_cast<double>(key_len_min));
    if (static_cast<double>(key_variety) > room) {
      throw SpecError("key_variety " + std::to_string(key_variety) +
                      " exceeds the keys of " + std::to_string(key_len_min) +
                      " bytes");
    }
  }
}

KeyUniverse::KeyUniverse(std::uint64_t seed, std::uint64_t variety,
                         std::size_t len_min, std::size_t len_max)
    : seed_(seed), variety_(variety), len_min_(len_min), len_max_(len_max) {}

std::size_t KeyUniverse::key_len(std::uint64_t id) const {
  const std::uint64_t span = len_max_ - len_min_ + 1;
  return len_min_ + mix64(split_seed(seed_, kLenStream) ^ id) % span;
}

std::string KeyUniverse::key(std::uint64_t id) const {
  const std::size_t len = key_len(id);
  std::string k(len, '\0');
  const std::size_t head = std::min<std::size_t>(8, len);
  const std::uint64_t word = len < 8 ? id : mix64(id + kIdSalt);
  for (std::size_t i = 0; i < head; ++i) {
    k[i] = static_cast<char>(word >> (8 * (head - 1 - i)));
  }
  std::uint64_t state = split_seed(split_seed(seed_, kTailStream), id);
  for (std::size_t i = head; i < len; i += 8) {
    state = mix64(state);
    for (std::size_t b = 0; b < 8 && i + b < len; ++b) {
      k[i + b] = static_cast<char>(state >> (8 * b));
    }
  }
  return k;
}

ZipfSampler::ZipfSampler(std::uint64_t n, double s) {
  if (n == 0) throw SpecError("Zipf support must be non-empty");
  cdf_.resize(n);
  double acc = 0.0;
  for (std::uint64_t r = 1; r <= n; ++r) {
    acc += std::pow(static_cast<double>(r), -s);
    cdf_[r - 1] = acc;
  }
  for (auto& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

std::uint64_t ZipfSampler::operator()(Rng& rng) const {
  const double u = rng.unit();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<std::uint64_t>(it - cdf_.begin());
}

WorkloadGenerator::WorkloadGenerator(const WorkloadSpec& spec,
                                     std::size_t mapper)
    : spec_(spec),
      universe_(spec.seed, spec.key_variety, spec.key_len_min,
                spec.key_len_max),
      rng_(split_seed(spec.seed, mapper + 1)) {
  spec_.validate();
  if (mapper >= spec_.mapper_count) {
    throw SpecError("mapper " + std::to_string(mapper) + " out of range for " +
                    std::to_string(spec_.mapper_count) + " mappers");
  }
  if (spec_.distribution == Distribution::kZipf) {
    zipf_.emplace(spec_.key_variety, spec_.zipf_s);
  }
}

bool WorkloadGenerator::exhausted() const {
  if (spec_.total_pairs) return pairs_ >= *spec_.total_pairs;
  return bytes_ >= spec_.total_bytes;
}

std::uint64_t WorkloadGenerator::draw_id() {
  return zipf_ ? (*zipf_)(rng_) : rng_.below(spec_.key_variety);
}

std::optional<std::uint64_t> WorkloadGenerator::next_id() {
  if (exhausted()) return std::nullopt;
  const std::uint64_t id = draw_id();
  ++pairs_;
  bytes_ += pair_wire_size(universe_.key_len(id));
  return id;
}

std::optional<KeyValuePair> WorkloadGenerator::next() {
  if (exhausted()) return std::nullopt;
  const std::uint64_t id = draw_id();
  KeyValuePair p;
  p.key = universe_.key(id);
  p.value = static_cast<std::int32_t>(
      rng_.between(spec_.value_min, spec_.value_max));
  ++pairs_;
  bytes_ += pair_wire_size(p);
  return p;
}

std::vector<KeyValuePair> generate(const WorkloadSpec& spec,
                                   std::size_t mapper) {
  WorkloadGenerator gen(spec, mapper);
  std::vector<KeyValuePair> out;
  while (auto p = gen.next()) out.push_back(std::move(*p));
  return out;
}

std::vector<AggregationPacket> pack(std::span<const KeyValuePair> pairs,
                                    TreeId tree, AggOp op, std::size_t mtu) {
  PacketBuilder builder(tree, op, mtu);
  std::vector<AggregationPacket> out;
  for (const auto& p : pairs) {
    validate_pair(p);
    if (auto full = builder.add(p)) out.push_back(std::move(*full));
  }
  out.push_back(builder.finish(true));
  return out;
}

void write_trace_record(std::ostream& out, const Packet& packet,
                        std::size_t mtu) {
  const std::vector<std::uint8_t> bytes = encode(packet, mtu);
  const auto n = static_cast<std::uint32_t>(bytes.size());
  const char len[4] = {static_cast<char>(n >> 24), static_cast<char>(n >> 16),
                       static_cast<char>(n >> 8), static_cast<char>(n)};
  out.write(len, 4);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<Packet> read_trace(std::istream& in) {
  std::vector<Packet> out;
  std::vector<std::uint8_t> buf;
  for (;;) {
    unsigned char len[4];
    in.read(reinterpret_cast<char*>(len), 4);
    if (in.gcount() == 0) break;
    if (in.gcount() != 4) throw TruncatedError("truncated trace length", 0);
    const std::uint32_t n = (std::uint32_t{len[0]} << 24) |
                            (std::uint32_t{len[1]} << 16) |
                            (std::uint32_t{len[2]} << 8) | len[3];
    buf.resize(n);
    in.read(reinterpret_cast<char*>(buf.data()), n);
    if (static_cast<std::uint32_t>(in.gcount()) != n) {
      throw TruncatedError("truncated trace record", in.gcount());
    }
    out.push_back(decode(buf));
  }
  return out;
}

std::string to_string(Distribution d) {
  return d == Distribution::kZipf ? "zipf" : "uniform";
}

std::optional<Distribution> parse_distribution(std::string_view name) {
  if (name == "uniform") return Distribution::kUniform;
  if (name == "zipf") return Distribution::kZipf;
  return std::nullopt;
}

}  // namespace switchagg
