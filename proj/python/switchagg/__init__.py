# SPDX-License-Identifier: Apache-2.0
"""In-network key-value aggregation simulator."""

import json

from ._core import (
    ConfigError,
    DecodeError,
    DomainError,
    Error,
    SpecError,
    check_merge_equivalence,
    check_multihop,
    decode,
    encode_aggregation,
    even_stream,
    generate,
    header_overhead,
    padding_overhead,
    read_trace,
    reduction_bound,
    reduction_model,
    run_idealized,
    stage_cycles,
    tokenize,
)
from . import _core


def run_experiment(config):
    """Run one experiment. `config` is a dict in the experiment file schema."""
    return json.loads(_core.run_experiment_json(json.dumps(config)))


def wordcount(texts, timing=True):
    """Count words with one mapper per text; returns (counts, report)."""
    counts, report = _core.wordcount([tokenize(t) for t in texts], timing)
    return {k.decode("utf-8", "replace"): v for k, v in counts.items()}, json.loads(report)


__all__ = [
    "ConfigError",
    "DecodeError",
    "DomainError",
    "Error",
    "SpecError",
    "check_merge_equivalence",
    "check_multihop",
    "decode",
    "encode_aggregation",
    "even_stream",
    "generate",
    "header_overhead",
    "padding_overhead",
    "read_trace",
    "reduction_bound",
    "reduction_model",
    "run_experiment",
    "run_idealized",
    "stage_cycles",
    "tokenize",
    "wordcount",
]
