# Copyright 2026 The paca-lab Authors
# SPDX-License-Identifier: Apache-2.0
import numpy as np
import pytest

import paca_lab as pl


def rng():
    return np.random.default_rng(7)


def test_matmul_and_gathers():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(pl.matmul(a, np.ones((2, 1))), [[3.0], [7.0]])
    assert np.array_equal(pl.transpose(a), a.T)
    w = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    assert np.array_equal(pl.gather_cols(w, [0, 2]), [[1.0, 3.0], [4.0, 6.0]])
    assert np.array_equal(pl.gather_rows(w, [1]), [[4.0, 5.0, 6.0]])
    out = pl.scatter_cols_add(np.zeros((2, 3)), [1], np.ones((2, 1)), -0.5)
    assert np.array_equal(out, [[0.0, -0.5, 0.0], [0.0, -0.5, 0.0]])


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        pl.matmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(IndexError):
        pl.gather_cols(np.ones((2, 2)), [5])
    with pytest.raises(ValueError):
        pl.run_experiment({"method": "paca", "bogus": 1})


def test_paca_gradient_is_a_slice_of_the_full_gradient():
    g = rng()
    w, x, gout = g.normal(size=(5, 9)), g.normal(size=(9, 4)), g.normal(size=(5, 4))
    idx = [1, 4, 8]
    out, cache_bytes = pl.paca_forward(w, idx, x)
    assert np.array_equal(out, pl.linear_forward(w, x))
    assert cache_bytes == 3 * 4 * 8
    _, g_w = pl.linear_backward(w, x, gout)
    _, g_p = pl.paca_backward(w, idx, x, gout)
    assert np.max(np.abs(g_p - g_w[:, idx])) <= 1e-12
    assert np.allclose(g_w, gout @ x.T, atol=1e-12)


def test_lora_merge_matches_adapter_forward():
    g = rng()
    w, a, b, x = g.normal(size=(3, 4)), g.normal(size=(2, 4)), g.normal(size=(3, 2)), g.normal(size=(4, 5))
    merged = pl.lora_merge(w, a, b, 1.5)
    assert np.allclose(pl.linear_forward(merged, x), pl.lora_forward(w, a, b, 1.5, x), atol=1e-10)
    _, g_a, g_b = pl.lora_backward(w, a, np.zeros((3, 2)), 2.0, x, g.normal(size=(3, 5)))
    assert not g_a.any()


def test_selection():
    assert pl.select_random(10, 10, 3) == list(range(10))
    assert pl.select_random(100, 5, 9) == pl.select_random(100, 5, 9)
    assert pl.select_by_weight_norm(np.array([[3.0, 0.0, 1.0], [4.0, 0.0, 1.0]]), 1) == [0]
    assert pl.select_by_grad([1.0, 8.0, 3.0], 1, 2) == [1, 2]


def test_nf4():
    levels = pl.nf4_levels()
    assert levels[0] == -1.0 and levels[-1] == 1.0 and levels.count(0.0) == 1
    codes, absmax = pl.quantize_block([0.25, -0.75, 0.5])
    assert pl.dequantize_block(codes, absmax)[1] == -0.75
    w = rng().normal(size=(40, 10))
    m, blob = pl.qpaca_roundtrip(w, [2, 7], 16)
    assert blob[:4] == b"QPCA"
    assert np.array_equal(m[:, [2, 7]], w[:, [2, 7]])
    assert pl.qpaca_weight_bytes(4096, 4096, 64, 64, 8) == 11386880


def test_cost_model_and_descent():
    full = pl.flop_linear(4096, 4096, 512, "full")
    lora = pl.flop_linear(4096, 4096, 512, "lora", 8)
    assert abs((1 - lora["total"] / full["total"]) - 1 / 3) < 0.03
    assert pl.expected_cache_bytes("lora", 4096, 8, 1, 8) == 32832
    assert pl.lipschitz_of_quadratic(np.array([[2.0, 0.0], [0.0, 0.0]])) == pytest.approx(4.0)
    g = rng()
    x, y = g.normal(size=(4, 12)), g.normal(size=(3, 12))
    eta = 1.0 / pl.lipschitz_of_quadratic(x)
    steps = pl.descent_check(x, y, np.zeros((3, 4)), [0, 2], eta, 50)
    assert len(steps) == 50 and all(s["holds"] for s in steps)


def test_run_experiment():
    cfg = {
        "method": "paca",
        "rank": 4,
        "steps": 20,
        "batch_size": 8,
        "model": {"layers": [[16, 8], [8, 2]]},
        "task": {"eval_samples": 32},
    }
    a = pl.run_experiment(cfg)
    b = pl.run_experiment(cfg)
    assert a["steps"] == 20 and len(a["losses"]) == 20
    assert a["losses"] == b["losses"]
    assert a["memory"]["measured"] == a["memory"]["analytical"]
