// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "switchagg/analytics.hpp"
#include "switchagg/errors.hpp"
#include "switchagg/harness.hpp"
#include "switchagg/wire.hpp"
#include "switchagg/workload.hpp"

namespace py = pybind11;
using namespace switchagg;

namespace {

AggOp op_from(const std::string& name) {
  auto op = parse_agg_op(name);
  if (!op) throw ConfigError("unknown op " + name);
  return *op;
}

std::vector<KeyValuePair> pairs_from(
    const std::vector<std::pair<py::bytes, std::int32_t>>& in) {
  std::vector<KeyValuePair> out;
  out.reserve(in.size());
  for (const auto& [k, v] : in) out.push_back({std::string(k), v});
  return out;
}

py::list pairs_to(const std::vector<KeyValuePair>& pairs) {
  py::list out;
  for (const auto& p : pairs) out.append(py::make_tuple(py::bytes(p.key), p.value));
  return out;
}

py::dict packet_to(const Packet& p) {
  py::dict d;
  d["src"] = p.frame.src_node;
  d["dst"] = p.frame.dst_node;
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, LaunchBody>) {
          d["type"] = "launch";
          d["reducers"] = body.reducer_addrs;
          d["mappers"] = body.mapper_addrs;
        } else if constexpr (std::is_same_v<T, ConfigureBody>) {
          d["type"] = "configure";
          py::list trees;
          for (const auto& t : body.trees) {
            trees.append(py::make_tuple(t.tree_id, t.child_count));
          }
          d["trees"] = trees;
        } else if constexpr (std::is_same_v<T, AckBody>) {
          d["type"] = "ack";
          d["ack_type"] = body.ack_type;
        } else {
          d["type"] = "aggregation";
          d["tree_id"] = body.tree_id;
          d["eot"] = body.eot;
          d["op"] = std::string(to_string(body.op));
          d["pairs"] = pairs_to(body.pairs);
        }
      },
      p.body);
  return d;
}

py::bytes to_bytes(const std::vector<std::uint8_t>& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "In-network key-value aggregation simulator";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DecodeError>(m, "DecodeError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<SpecError>(m, "SpecError", base.ptr());

  m.def(
      "encode_aggregation",
      [](std::uint16_t src, std::uint16_t dst, std::uint16_t tree, bool eot,
         const std::string& op,
         const std::vector<std::pair<py::bytes, std::int32_t>>& pairs,
         std::size_t mtu) {
        return to_bytes(encode(
            Packet{{src, dst}, AggregationPacket{tree, eot, op_from(op),
                                                 pairs_from(pairs)}},
            mtu));
      },
      py::arg("src"), py::arg("dst"), py::arg("tree_id"), py::arg("eot"),
      py::arg("op"), py::arg("pairs"), py::arg("mtu") = kDefaultMtu,
      "Encode an aggregation packet; pairs are (bytes key, int value).");
  m.def("decode",
        [](const py::bytes& data) { return packet_to(decode(from_bytes(data))); },
        "Decode one packet into a dict.");
  m.def(
      "read_trace",
      [](const py::bytes& data) {
        std::istringstream in(std::string(data), std::ios::binary);
        py::list out;
        for (const auto& p : read_trace(in)) out.append(packet_to(p));
        return out;
      },
      "Decode a trace of length-prefixed packet records.");

  m.def(
      "reduction_model",
      [](std::uint64_t total, std::uint64_t variety, std::uint64_t capacity) {
        return reduction_model({total, variety, capacity});
      },
      py::arg("total"), py::arg("variety"), py::arg("capacity"));
  m.def(
      "reduction_bound",
      [](std::uint64_t total, std::uint64_t variety, std::uint64_t capacity) {
        return reduction_bound({total, variety, capacity});
      },
      py::arg("total"), py::arg("variety"), py::arg("capacity"));
  m.def(
      "padding_overhead",
      [](std::uint64_t packet, std::uint64_t fixed,
         const std::vector<std::uint64_t>& actual) {
        return padding_overhead(packet, fixed, actual);
      },
      py::arg("packet_bytes"), py::arg("fixed_bytes"), py::arg("actual"));
  m.def("header_overhead", &header_overhead, py::arg("payload"),
        py::arg("per_packet"), py::arg("header"));
  m.def(
      "run_idealized",
      [](const std::vector<std::uint64_t>& keys, std::uint64_t capacity) {
        auto r = run_idealized(keys, capacity);
        return py::make_tuple(r.reduction, r.output);
      },
      py::arg("keys"), py::arg("capacity"),
      "Returns (reduction, output key stream).");
  m.def("even_stream", &even_stream, py::arg("total"), py::arg("variety"),
        py::arg("seed"));
  m.def(
      "check_merge_equivalence",
      [](const std::vector<std::vector<std::uint64_t>>& flows,
         std::uint64_t capacity) {
        auto r = check_merge_equivalence(flows, capacity);
        return py::make_tuple(r.multi_flow, r.merged_flow);
      },
      py::arg("flows"), py::arg("capacity"));
  m.def(
      "check_multihop",
      [](std::uint64_t total, std::uint64_t variety, std::uint64_t capacity,
         std::size_t hops, const std::string& dist, double zipf_s,
         std::uint64_t seed) {
        const auto d = parse_distribution(dist);
        if (!d) throw ConfigError("unknown distribution " + dist);
        std::vector<double> out;
        for (const auto& p : check_multihop(
                 {total, variety, capacity}, hops,
                 *d == Distribution::kZipf ? KeyDistribution::kZipf
                                           : KeyDistribution::kUniform,
                 zipf_s, seed)) {
          out.push_back(p.reduction);
        }
        return out;
      },
      py::arg("total"), py::arg("variety"), py::arg("capacity"),
      py::arg("hops"), py::arg("distribution") = "uniform",
      py::arg("zipf_s") = 0.99, py::arg("seed") = 1);

  m.def(
      "generate",
      [](std::uint64_t seed, std::uint64_t pairs, std::uint64_t variety,
         const std::string& dist, double zipf_s, std::size_t key_len_min,
         std::size_t key_len_max, std::size_t mappers, std::size_t mapper) {
        WorkloadSpec s;
        s.seed = seed;
        s.total_pairs = pairs;
        s.key_variety = variety;
        const auto d = parse_distribution(dist);
        if (!d) throw ConfigError("unknown distribution " + dist);
        s.distribution = *d;
        s.zipf_s = zipf_s;
        s.key_len_min = key_len_min;
        s.key_len_max = key_len_max;
        s.mapper_count = mappers;
        return pairs_to(generate(s, mapper));
      },
      py::arg("seed"), py::arg("pairs"), py::arg("variety"),
      py::arg("distribution") = "uniform", py::arg("zipf_s") = 0.99,
      py::arg("key_len_min") = 16, py::arg("key_len_max") = 64,
      py::arg("mappers") = 1, py::arg("mapper") = 0,
      "One mapper's (key, value) stream.");

  m.def(
      "run_experiment_json",
      [](const std::string& config) {
        const auto cfg = parse_experiment(nlohmann::json::parse(config));
        ExperimentReport r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        return to_json(r).dump();
      },
      py::arg("config"), "Run one experiment given as JSON text.");
  m.def(
      "wordcount",
      [](const std::vector<std::vector<std::string>>& streams, bool timing) {
        WordCountOptions opt;
        opt.timing = timing;
        const auto r = wordcount_demo(streams, opt);
        py::dict counts;
        for (const auto& [k, v] : r.counts) counts[py::bytes(k)] = v;
        return py::make_tuple(counts, to_json(r.report).dump());
      },
      py::arg("streams"), py::arg("timing") = true,
      "Returns (counts keyed by bytes, report JSON).");
  m.def("tokenize", [](const std::string& s) { return tokenize(s); });

  m.def(
      "stage_cycles",
      []() {
        const TimingModel t;
        std::vector<std::uint64_t> out;
        for (std::size_t i = 0; i < kStageCount; ++i) {
          out.push_back(charge_timing(t, static_cast<Stage>(i)));
        }
        return out;
      },
      "Default cycle cost of each pipeline stage.");
}
