// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "switchagg/errors.hpp"
#include "switchagg/workload.hpp"

using namespace switchagg;

namespace {

WorkloadSpec base_spec() {
  WorkloadSpec s;
  s.total_pairs = 1000;
  s.key_variety = 100;
  s.seed = 7;
  s.mapper_count = 3;
  return s;
}

}  // namespace

TEST_CASE("splitmix seeding") {
  CHECK(mix64(0) == mix64(0));
  CHECK(mix64(0) != mix64(1));
  CHECK(split_seed(1, 0) != split_seed(1, 1));
  CHECK(split_seed(1, 0) != split_seed(2, 0));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(9);
  for (int i = 0; i < 10000; ++i) {
    CHECK(r.below(7) < 7);
    const auto v = r.between(-3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
    const double u = r.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("streams are deterministic per seed and mapper") {
  const WorkloadSpec s = base_spec();
  CHECK(generate(s, 0) == generate(s, 0));
  CHECK(generate(s, 0) != generate(s, 1));
  WorkloadSpec other = s;
  other.seed = 8;
  CHECK(generate(s, 0) != generate(other, 0));
}

TEST_CASE("single key folds to one pair") {
  WorkloadSpec s = base_spec();
  s.key_variety = 1;
  s.total_pairs = 10;
  const auto pairs = generate(s, 0);
  REQUIRE(pairs.size() == 10);
  std::map<std::string, std::int64_t> fold;
  for (const auto& p : pairs) fold[p.key] += p.value;
  CHECK(fold.size() == 1);
}

TEST_CASE("key universe is shared and injective") {
  const KeyUniverse u(3, 5000, 1, 64);
  std::set<std::string> seen;
  for (std::uint64_t id = 0; id < 5000; ++id) {
    const std::string k = u.key(id);
    CHECK(k.size() == u.key_len(id));
    CHECK(k.size() >= 1);
    CHECK(k.size() <= 64);
    CHECK(k == u.key(id));
    seen.insert(k);
  }
  // Length-1 keys can only encode 256 ids; everything else must be distinct.
  CHECK(seen.size() >= 5000 - 256);

  const KeyUniverse wide(3, 5000, 8, 64);
  std::set<std::string> all;
  for (std::uint64_t id = 0; id < 5000; ++id) all.insert(wide.key(id));
  CHECK(all.size() == 5000);

  // Mappers draw from the same bytes.
  WorkloadSpec s = base_spec();
  s.key_variety = 5;
  std::set<std::string> k0, k1;
  for (const auto& p : generate(s, 0)) k0.insert(p.key);
  for (const auto& p : generate(s, 1)) k1.insert(p.key);
  CHECK(k0 == k1);
}

TEST_CASE("byte budget and value range") {
  WorkloadSpec s = base_spec();
  s.total_pairs.reset();
  s.total_bytes = 50'000;
  s.value_min = -5;
  s.value_max = 5;
  WorkloadGenerator g(s, 2);
  std::uint64_t bytes = 0;
  std::uint64_t n = 0;
  while (auto p = g.next()) {
    bytes += pair_wire_size(*p);
    ++n;
    CHECK(p->value >= -5);
    CHECK(p->value <= 5);
    CHECK(p->key.size() >= 16);
    CHECK(p->key.size() <= 64);
  }
  CHECK(bytes == g.bytes_emitted());
  CHECK(n == g.pairs_emitted());
  CHECK(bytes >= 50'000);
  CHECK(bytes < 50'000 + pair_wire_size(64));
}

TEST_CASE("uniform draws pass a chi-square test") {
  WorkloadSpec s = base_spec();
  s.total_pairs = 100'000;
  WorkloadGenerator g(s, 0);
  std::vector<double> counts(100, 0.0);
  while (auto id = g.next_id()) counts.at(*id) += 1;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  // df = 99: mean 99, sd ~14.
  CHECK(std::abs(chi2 - 99.0) < 3 * std::sqrt(2 * 99.0));
}

TEST_CASE("zipf rank-frequency slope") {
  WorkloadSpec s = base_spec();
  s.distribution = Distribution::kZipf;
  s.zipf_s = 0.99;
  s.key_variety = 10'000;
  s.total_pairs = 1'000'000;
  WorkloadGenerator g(s, 0);
  std::vector<double> counts(10'000, 0.0);
  while (auto id = g.next_id()) counts.at(*id) += 1;
  // Least squares of log count on log rank over well-populated ranks.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int r = 1; r <= 1000; ++r) {
    if (counts[r - 1] == 0) continue;
    const double x = std::log(r);
    const double y = std::log(counts[r - 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(std::abs(slope + 0.99) <= 0.05);
  CHECK(counts[0] > counts[1]);
}

TEST_CASE("spec validation") {
  WorkloadSpec s = base_spec();
  s.key_variety = 0;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s = base_spec();
  s.key_len_min = 0;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s = base_spec();
  s.key_len_max = 65;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s = base_spec();
  s.value_min = 10;
  s.value_max = 1;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s = base_spec();
  s.mapper_count = 0;
  CHECK_THROWS_AS(generate(s, 0), SpecError);
  s = base_spec();
  CHECK_THROWS_AS(generate(s, 3), SpecError);
  CHECK(parse_distribution("zipf") == Distribution::kZipf);
  CHECK(to_string(Distribution::kUniform) == "uniform");
  CHECK_FALSE(parse_distribution("pareto").has_value());
}

TEST_CASE("packing") {
  const auto empty = pack({}, 4, AggOp::kSum);
  REQUIRE(empty.size() == 1);
  CHECK(empty[0].eot);
  CHECK(empty[0].pairs.empty());
  CHECK(empty[0].tree_id == 4);

  const std::vector<KeyValuePair> few{{"a", 1}, {"b", 2}};
  const auto one = pack(few, 4, AggOp::kMax);
  REQUIRE(one.size() == 1);
  CHECK(one[0].eot);
  CHECK(one[0].op == AggOp::kMax);
  CHECK(one[0].pairs == few);

  std::vector<KeyValuePair> big;
  for (int i = 0; i < 1000; ++i) big.push_back({std::string(64, 'k'), i});
  REQUIRE(pair_wire_size(big[0]) == 70);
  const auto packets = pack(big, 1, AggOp::kSum, 1500);
  const std::size_t budget = pair_budget(1500);
  CHECK(packets.size() == (1000 * 70 + budget - 1) / budget);
  std::vector<KeyValuePair> back;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    CHECK(packets[i].eot == (i + 1 == packets.size()));
    CHECK(encoded_size(Packet{{}, packets[i]}) <= 1500);
    back.insert(back.end(), packets[i].pairs.begin(), packets[i].pairs.end());
  }
  CHECK(back == big);
}

TEST_CASE("trace round trip") {
  WorkloadSpec s = base_spec();
  const auto pairs = generate(s, 1);
  const auto packets = pack(pairs, 2, AggOp::kSum);
  std::stringstream io;
  for (const auto& p : packets) write_trace_record(io, Packet{{11, 20}, p});
  const auto back = read_trace(io);
  REQUIRE(back.size() == packets.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i] == Packet{{11, 20}, packets[i]});
  }

  std::stringstream cut(io.str().substr(0, io.str().size() - 3));
  CHECK_THROWS_AS(read_trace(cut), DecodeError);
  std::stringstream none;
  CHECK(read_trace(none).empty());
}
