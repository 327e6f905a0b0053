# Copyright 2026 The paca-lab Authors
# SPDX-License-Identifier: Apache-2.0
"""Partial-connection fine-tuning kernels, quantization and experiment runner."""

import json as _json

from ._paca import (  # noqa: F401
    ArgumentError,
    ConfigError,
    DecodeError,
    IndexError,
    InvariantError,
    ShapeError,
    StateError,
    dequantize_block,
    descent_check,
    expected_cache_bytes,
    flop_linear,
    gather_cols,
    gather_rows,
    linear_backward,
    linear_forward,
    lipschitz_of_quadratic,
    lora_backward,
    lora_forward,
    lora_merge,
    matmul,
    nf4_levels,
    paca_backward,
    paca_forward,
    qpaca_roundtrip,
    qpaca_weight_bytes,
    quantize_block,
    scatter_cols_add,
    select_by_grad,
    select_by_weight_norm,
    select_random,
    transpose,
)
from ._paca import _run_experiment

__version__ = "0.1.0"


def run_experiment(config):
    """Run one experiment.

    ``config`` is a dict or a JSON string in the config-file schema. Returns the
    summary document with the per-step losses added under ``"losses"``.
    """
    text = config if isinstance(config, str) else _json.dumps(config)
    summary, losses = _run_experiment(text)
    result = _json.loads(summary)
    result["losses"] = losses
    return result
