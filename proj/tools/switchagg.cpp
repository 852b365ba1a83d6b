// SPDX-License-Identifier: Apache-2.0
//
// switchagg: run experiments, word counts, closed-form sweeps and workload
// generation from the command line.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "switchagg/analytics.hpp"
#include "switchagg/errors.hpp"
#include "switchagg/harness.hpp"
#include "switchagg/workload.hpp"

using namespace switchagg;
using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

// Writes to `path`, or to stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  auto out = open_out(path);
  out << text;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string out;
  std::string csv;
  std::string counters;
  bool baseline = false;
};

int simulate(const SimulateArgs& a) {
  auto experiments = load_experiments(a.config);
  std::ostringstream jsonl;
  std::ostringstream csv;
  json counters = json::array();
  csv << csv_header() << '\n';
  for (auto& e : experiments) {
    if (a.baseline) e.compare_baseline = true;
    const ExperimentReport r = run_experiment(e);
    jsonl << to_json(r).dump() << '\n';
    csv << to_csv_row(r) << '\n';
    counters.push_back({{"experiment", r.name},
                        {"records", counters_to_json(r.counters)}});
    std::cerr << r.name << ": reduction " << r.reduction_ratio
              << (r.oracle_match ? "" : " (ORACLE MISMATCH)") << '\n';
    if (!r.oracle_match) return 2;
  }
  emit(a.out, jsonl.str());
  if (!a.csv.empty()) emit(a.csv, csv.str());
  if (!a.counters.empty()) emit(a.counters, counters.dump(2) + "\n");
  return 0;
}

// --- wordcount --------------------------------------------------------------

struct WordCountArgs {
  std::vector<std::string> inputs;
  std::string report;
  std::size_t fpe_bytes = 16 * 1024;
  std::size_t bpe_bytes = 4 * 1024 * 1024;
  bool no_timing = false;
};

int wordcount(const WordCountArgs& a) {
  std::vector<std::vector<std::string>> streams;
  auto read_all = [](std::istream& in) {
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  if (a.inputs.empty()) {
    streams.push_back(tokenize(read_all(std::cin)));
  }
  for (const auto& path : a.inputs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    streams.push_back(tokenize(read_all(in)));
  }
  WordCountOptions opt;
  opt.switches.memory.fpe_bytes_per_group = a.fpe_bytes;
  opt.switches.memory.bpe_bytes = a.bpe_bytes;
  opt.timing = !a.no_timing;
  const WordCountResult r = wordcount_demo(streams, opt);
  if (r.truncated_tokens > 0) {
    std::cerr << "warning: " << r.truncated_tokens
              << " tokens longer than 64 bytes were truncated\n";
  }
  for (const auto& [word, count] : r.counts) {
    std::cout << json{{"word", word}, {"count", count}}.dump(
                     -1, ' ', false, json::error_handler_t::replace)
              << '\n';
  }
  if (!a.report.empty()) emit(a.report, to_json(r.report).dump() + "\n");
  return r.report.oracle_match ? 0 : 2;
}

// --- model ------------------------------------------------------------------

struct ModelArgs {
  std::uint64_t total = 1'000'000;
  std::uint64_t capacity = 10'000;
  std::vector<std::uint64_t> varieties{1'000, 10'000, 100'000, 1'000'000};
  std::size_t hops = 4;
  std::string distribution = "uniform";
  double zipf_s = 0.99;
  bool simulate = false;
  std::uint64_t seed = 1;
  // overhead
  std::uint64_t payload = 1'000'000'000;
  std::uint64_t header = 58;
  std::vector<std::uint64_t> packet_sizes{200, 1500};
  std::uint64_t fixed = 20;
  std::vector<std::uint64_t> lengths;
};

int model_reduction(const ModelArgs& a) {
  for (std::uint64_t n : a.varieties) {
    const ReductionParams p{a.total, n, a.capacity};
    json row = {{"total", a.total},
                {"variety", n},
                {"capacity", a.capacity},
                {"model", reduction_model(p)},
                {"bound", reduction_bound(p)}};
    if (a.simulate) {
      row["idealized"] =
          run_idealized(even_stream(a.total, n, a.seed), a.capacity).reduction;
    }
    std::cout << row.dump() << '\n';
  }
  return 0;
}

int model_multihop(const ModelArgs& a) {
  const auto dist = parse_distribution(a.distribution);
  if (!dist) throw ConfigError("unknown distribution " + a.distribution);
  for (std::uint64_t n : a.varieties) {
    const auto pts = check_multihop(
        {a.total, n, a.capacity}, a.hops,
        *dist == Distribution::kZipf ? KeyDistribution::kZipf
                                     : KeyDistribution::kUniform,
        a.zipf_s, a.seed);
    for (const auto& p : pts) {
      std::cout << json{{"total", a.total},
                        {"variety", n},
                        {"capacity", a.capacity},
                        {"distribution", a.distribution},
                        {"hops", p.hops},
                        {"reduction", p.reduction}}
                       .dump()
                << '\n';
    }
  }
  return 0;
}

int model_overhead(const ModelArgs& a) {
  if (a.packet_sizes.empty()) throw ConfigError("need packet sizes");
  const double base = static_cast<double>(
      header_overhead(a.payload, a.packet_sizes.back(), a.header));
  for (std::uint64_t size : a.packet_sizes) {
    const std::uint64_t total = header_overhead(a.payload, size, a.header);
    std::cout << json{{"payload", a.payload},
                      {"packet_payload", size},
                      {"header", a.header},
                      {"total_bytes", total},
                      {"ratio_to_last", base > 0 ? total / base : 0.0}}
                     .dump()
              << '\n';
  }
  if (!a.lengths.empty()) {
    // Padding cost of packing the listed pair lengths into fixed slots.
    const std::uint64_t packet = a.packet_sizes.front();
    std::vector<std::uint64_t> actual;
    const std::size_t need = packet / a.fixed;
    for (std::size_t i = 0; i < need; ++i) {
      actual.push_back(a.lengths[i % a.lengths.size()]);
    }
    std::cout << json{{"packet", packet},
                      {"fixed", a.fixed},
                      {"padding_overhead",
                       padding_overhead(packet, a.fixed, actual)}}
                     .dump()
              << '\n';
  }
  return 0;
}

// --- gen-workload -----------------------------------------------------------

struct GenArgs {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> pairs;
  std::uint64_t bytes = 0;
  std::uint64_t variety = 1000;
  std::string distribution = "uniform";
  double zipf_s = 0.99;
  std::size_t key_len_min = 16;
  std::size_t key_len_max = 64;
  std::int32_t value_min = 1;
  std::int32_t value_max = 1000;
  std::string op = "SUM";
  std::size_t mappers = 1;
  std::uint16_t first_mapper = 10;
  std::uint16_t reducer = 0;
  std::uint16_t tree = 1;
  std::size_t mtu = kDefaultMtu;
  std::string trace;
  std::string manifest;
};

int gen_workload(const GenArgs& a) {
  if (!a.seed) throw ConfigError("--seed is required");
  WorkloadSpec s;
  s.seed = *a.seed;
  s.total_pairs = a.pairs;
  s.total_bytes = a.bytes;
  s.key_variety = a.variety;
  const auto dist = parse_distribution(a.distribution);
  if (!dist) throw ConfigError("unknown distribution " + a.distribution);
  s.distribution = *dist;
  s.zipf_s = a.zipf_s;
  s.key_len_min = a.key_len_min;
  s.key_len_max = a.key_len_max;
  s.value_min = a.value_min;
  s.value_max = a.value_max;
  const auto op = parse_agg_op(a.op);
  if (!op) throw ConfigError("unknown op " + a.op);
  s.op = *op;
  s.mapper_count = a.mappers;
  s.validate();

  std::ofstream trace;
  if (!a.trace.empty()) trace = open_out(a.trace);
  json per_mapper = json::array();
  std::unordered_map<std::string, std::int32_t> reference;
  for (std::size_t m = 0; m < a.mappers; ++m) {
    const auto pairs = generate(s, m);
    std::uint64_t bytes = 0;
    for (const auto& p : pairs) {
      bytes += pair_wire_size(p);
      auto [it, fresh] = reference.try_emplace(p.key, p.value);
      if (!fresh) it->second = aggregate_values(s.op, it->second, p.value);
    }
    const auto src = static_cast<NodeId>(a.first_mapper + m);
    std::size_t packets = 0;
    if (trace.is_open()) {
      for (auto& body : pack(pairs, a.tree, s.op, a.mtu)) {
        write_trace_record(trace, Packet{{src, a.reducer}, std::move(body)},
                           a.mtu);
        ++packets;
      }
    }
    per_mapper.push_back({{"mapper", m},
                          {"node", src},
                          {"pairs", pairs.size()},
                          {"pair_bytes", bytes},
                          {"packets", packets}});
  }
  json manifest = {{"seed", s.seed},
                   {"key_variety", s.key_variety},
                   {"distribution", to_string(s.distribution)},
                   {"zipf_s", s.zipf_s},
                   {"key_len", {s.key_len_min, s.key_len_max}},
                   {"values", {s.value_min, s.value_max}},
                   {"op", std::string(to_string(s.op))},
                   {"distinct_keys", reference.size()},
                   {"mappers", per_mapper}};
  if (s.total_pairs) manifest["total_pairs"] = *s.total_pairs;
  else manifest["total_bytes"] = s.total_bytes;
  if (!a.trace.empty()) manifest["trace"] = a.trace;
  emit(a.manifest, manifest.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-network key-value aggregation simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run experiments from a config file");
  s->add_option("config", sim.config, "Experiment JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  s->add_option("-o,--out", sim.out, "JSONL report file (default stdout)");
  s->add_option("--csv", sim.csv, "Also write a CSV table");
  s->add_option("--counters", sim.counters, "Write per-FPE counter snapshots");
  s->add_flag("--baseline", sim.baseline,
              "Also run without in-network aggregation");

  WordCountArgs wc;
  auto* w = app.add_subcommand(
      "wordcount", "Count words with one mapper per input file (stdin if none)");
  w->add_option("inputs", wc.inputs, "Text files")->check(CLI::ExistingFile);
  w->add_option("--report", wc.report, "Write the experiment report");
  w->add_option("--fpe-bytes", wc.fpe_bytes, "FPE memory per group");
  w->add_option("--bpe-bytes", wc.bpe_bytes, "BPE memory");
  w->add_flag("--no-timing", wc.no_timing, "Disable pipeline timing");

  ModelArgs ma;
  auto* m = app.add_subcommand("model", "Closed-form traffic models");
  m->require_subcommand(1);
  auto* mr = m->add_subcommand("reduction", "Reduction ratio vs key variety");
  auto* mh = m->add_subcommand("multihop", "Chains of idealized nodes");
  for (auto* sub : {mr, mh}) {
    sub->add_option("-M,--total", ma.total, "Pairs entering the node");
    sub->add_option("-C,--capacity", ma.capacity, "Pairs the node holds");
    sub->add_option("-N,--variety", ma.varieties, "Key varieties to sweep");
    sub->add_option("--seed", ma.seed, "Stream seed");
  }
  mr->add_flag("--simulate", ma.simulate, "Also run the idealized node");
  mh->add_option("--hops", ma.hops, "Chain length");
  mh->add_option("--distribution", ma.distribution, "uniform or zipf");
  mh->add_option("--zipf-s", ma.zipf_s, "Zipf skew");
  auto* mo = m->add_subcommand("overhead", "Header and padding overheads");
  mo->add_option("--payload", ma.payload, "Payload bytes");
  mo->add_option("--header", ma.header, "Header bytes per packet");
  mo->add_option("--packet", ma.packet_sizes, "Payload bytes per packet");
  mo->add_option("--fixed", ma.fixed, "Fixed pair size for padding");
  mo->add_option("--lengths", ma.lengths, "Actual pair lengths (cycled)");

  GenArgs ga;
  auto* g = app.add_subcommand("gen-workload", "Generate a synthetic workload");
  g->add_option("--seed", ga.seed, "Seed")->required();
  g->add_option("--pairs", ga.pairs, "Pairs per mapper");
  g->add_option("--bytes", ga.bytes, "Pair bytes per mapper");
  g->add_option("--variety", ga.variety, "Distinct keys");
  g->add_option("--distribution", ga.distribution, "uniform or zipf");
  g->add_option("--zipf-s", ga.zipf_s, "Zipf skew");
  g->add_option("--key-len-min", ga.key_len_min, "Shortest key");
  g->add_option("--key-len-max", ga.key_len_max, "Longest key");
  g->add_option("--value-min", ga.value_min, "Smallest value");
  g->add_option("--value-max", ga.value_max, "Largest value");
  g->add_option("--op", ga.op, "SUM, MAX or MIN");
  g->add_option("--mappers", ga.mappers, "Mapper count");
  g->add_option("--first-mapper", ga.first_mapper, "Node id of mapper 0");
  g->add_option("--reducer", ga.reducer, "Destination node in the trace");
  g->add_option("--tree", ga.tree, "Tree id in the trace");
  g->add_option("--mtu", ga.mtu, "Packet size limit");
  g->add_option("--trace", ga.trace, "Write length-prefixed packet records");
  g->add_option("--manifest", ga.manifest, "Manifest file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*s) return simulate(sim);
    if (*w) return wordcount(wc);
    if (*mr) return model_reduction(ma);
    if (*mh) return model_multihop(ma);
    if (*mo) return model_overhead(ma);
    if (*g) return gen_workload(ga);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
