"""Acceptance criteria, one test per criterion.

Each test carries a ``criterion`` marker; the run ends with one PASS/FAIL
line per criterion in the terminal summary. Thresholds taken from pilot
runs are recorded next to the fixture that uses them.
"""

from __future__ import annotations

import gc
import itertools
import math
import time
import tracemalloc

import numpy as np
import pytest

from catseg.calibration import calibrate_neh, calibrate_segmentation
from catseg.domain import CategoricalSequence, encode, is_probability
from catseg.evaluation import (SIGNAL_IDS, frange, grid_sweep, monte_carlo_risk,
                               oracle_neh_level, oracle_partition_select, oracle_subset_select,
                               penalty_grid, sample, test_signal, two_segment_signal)
from catseg.haar import ROOT, forward, haar_vector, index_at, transform_matrix
from catseg.segmentation import SegmentStats, dp_optimal_partitions, ei_select, hybrid_detect
from catseg.selection import PenaltySpec, eh_select, neh_collection_dimension, neh_models, neh_select

from conftest import random_onehot

# fixed seeds for the Monte Carlo criteria
RISK_SEED = 1
HYBRID_SEED = 10
# pilot over 50 draws: 50/50 within +-8 of n/2 + 1 with the default hybrid
HYBRID_MIN_RATE = 0.9
# EI dynamic program cap in the risk sweeps; every stand-in has at most 11 segments
EI_SWEEP_DMAX = 64


def detail(request, text):
    request.node.user_properties.append(("detail", text))


@pytest.mark.criterion(1, "EH matches exhaustive subset oracle")
def test_eh_oracle_equivalence(request):
    start = time.perf_counter()
    pens = [PenaltySpec.two_constant(1, 2), PenaltySpec.two_constant(0, 0),
            PenaltySpec.two_constant(0.5, 1.0)]
    worst, cases = 0.0, 0
    for n, r, seed in itertools.product([2, 4, 8, 16], [2, 3], range(20)):
        coeffs = transform_matrix(random_onehot(np.random.default_rng((1, n, r, seed)), r, n))
        for pen in pens:
            got = eh_select(coeffs, pen).criterion_value
            worst = max(worst, abs(got - oracle_subset_select(coeffs, pen).criterion))
            cases += 1
    elapsed = time.perf_counter() - start
    detail(request, f"{cases} cases, max diff {worst:.1e}, {elapsed:.1f}s")
    assert worst <= 1e-10
    assert elapsed < 30


@pytest.mark.criterion(2, "DP matches exhaustive partition oracle")
def test_dp_oracle_equivalence(request):
    start = time.perf_counter()
    worst, cases = 0.0, 0
    for n, r, seed in itertools.product(range(4, 13), [2, 4], range(20)):
        X = random_onehot(np.random.default_rng((2, n, r, seed)), r, n)
        for entry in dp_optimal_partitions(SegmentStats.from_matrix(X), n):
            oracle = oracle_partition_select(X, PenaltySpec.linear(0), entry.D)
            assert oracle.scored == math.comb(n - 1, entry.D - 1)
            worst = max(worst, abs(entry.sse - oracle.sse))
            cases += 1
    elapsed = time.perf_counter() - start
    detail(request, f"{cases} (n, D) cases, max diff {worst:.1e}, {elapsed:.1f}s")
    assert worst <= 1e-10
    assert elapsed < 60


@pytest.mark.criterion(3, "NEH per-level greedy equals exhaustive per-level subsets")
def test_neh_greedy_optimality(request):
    worst, cases = 0.0, 0
    for n, r, seed in itertools.product([16, 64], [2, 4], range(20)):
        coeffs = transform_matrix(random_onehot(np.random.default_rng((3, n, r, seed)), r, n))
        models = neh_models(coeffs)
        for J in models.levels:
            best, subset = oracle_neh_level(coeffs, int(J))
            assert len(subset) == neh_collection_dimension(int(J), coeffs.N)
            worst = max(worst, abs(models.captured[J] - best))
            greedy = coeffs.norms[models.positions(int(J))].sum()
            worst = max(worst, abs(greedy - best))
            cases += 1
    detail(request, f"{cases} (seed, level) cases, max diff {worst:.1e}")
    assert worst <= 1e-12


@pytest.mark.criterion(4, "Haar transform: Gram, Parseval, fast vs naive")
def test_transform_correctness(request):
    gram = 0.0
    for n in (2, 4, 8, 16):
        B = np.array([haar_vector(index_at(o, n), n) for o in range(1, n + 1)])
        gram = max(gram, np.abs(B @ B.T - np.eye(n)).max())
    rng = np.random.default_rng(4)
    parseval = 0.0
    for case in range(100):
        n = 2 ** int(rng.integers(1, 13))
        X = random_onehot(rng, int(rng.integers(2, 6)), n)
        parseval = max(parseval, abs(transform_matrix(X).norms.sum() - n) / n)
    agree = 0.0
    for N in range(1, 9):
        n = 2 ** N
        B = np.array([haar_vector(index_at(o, n), n) for o in range(1, n + 1)])
        for _ in range(5):
            v = rng.normal(size=n)
            naive = B @ v
            agree = max(agree, np.abs(forward(v) - naive).max() / max(1.0, np.abs(naive).max()))
    detail(request, f"gram {gram:.1e}, parseval/n {parseval:.1e}, fast-naive {agree:.1e}")
    assert gram <= 1e-12
    assert parseval <= 1e-9
    assert agree <= 1e-10


@pytest.mark.criterion(5, "Column-sum conservation and exact EI probabilities")
def test_conservation(request):
    rng = np.random.default_rng(5)
    worst_haar, worst_ei = 0.0, 0.0
    for case in range(1000):
        r = int(rng.integers(2, 6))
        kind = case % 3
        if kind == 2:
            n = int(rng.integers(2, 200))
            X = random_onehot(rng, r, n)
            pen = PenaltySpec.two_constant(rng.uniform(0, 2), rng.uniform(0, 6))
            est = ei_select(X, pen, D_max=min(n, 32)).estimate
            assert is_probability(est) and est.min() >= 0 and est.max() <= 1
            worst_ei = max(worst_ei, np.abs(est.sum(axis=0) - 1).max())
            continue
        X = random_onehot(rng, r, 2 ** int(rng.integers(1, 11)))
        coeffs = transform_matrix(X)
        if kind == 0:
            res = eh_select(coeffs, PenaltySpec.two_constant(rng.uniform(0, 2), rng.uniform(0, 6)))
        else:
            res = neh_select(coeffs, PenaltySpec.linear(rng.uniform(0, 4)))
        assert ROOT in res.selected
        worst_haar = max(worst_haar, np.abs(res.estimate.sum(axis=0) - 1).max())
    detail(request, f"haar max |sum-1| {worst_haar:.1e}, EI {worst_ei:.1e}")
    assert worst_haar <= 1e-9
    assert worst_ei <= 1e-12


@pytest.mark.criterion(6, "Calibration sweeps monotone, retained = 2 c_hat")
def test_calibration_monotonicity(request):
    rng = np.random.default_rng(6)
    sweeps = 0
    for k, sid in enumerate(SIGNAL_IDS):
        X = sample(test_signal(sid, 1024), (6, k))
        paths = [calibrate_neh(transform_matrix(X)),
                 calibrate_segmentation(X, D_max=48)]
        for _ in range(5):
            Y = random_onehot(rng, int(rng.integers(2, 5)), 2 ** int(rng.integers(2, 10)))
            paths.append(calibrate_neh(transform_matrix(Y), grid_step=float(rng.choice([0.01, 0.05]))))
            paths.append(calibrate_segmentation(Y, D_max=min(Y.shape[1], 24)))
        for path in paths:
            assert np.all(np.diff(path.dims) <= 0)
            assert path.retained == 2 * path.c_hat
            sweeps += 1
    coeffs = transform_matrix(sample(test_signal("s1", 1024), 0))
    dims = [neh_select(coeffs, PenaltySpec.linear(c)).dimension for c in frange(0, 5, 0.01)]
    assert all(a >= b for a, b in zip(dims, dims[1:]))
    detail(request, f"{sweeps} sweeps")


@pytest.mark.criterion(7, "Saturated risk matches sum s(1-s) within 5%")
def test_saturated_risk_anchor(request):
    start = time.perf_counter()
    zero = PenaltySpec.two_constant(0, 0)
    notes = []
    for sid in ("s1", "s3", "s5"):
        s = test_signal(sid, 256)
        expected = float((s * (1 - s)).sum())
        risk = monte_carlo_risk(s, lambda X: eh_select(transform_matrix(X), zero).estimate,
                                seed=RISK_SEED)
        rel = abs(risk.value - expected) / expected
        notes.append(f"{sid} {rel:.2%} ({risk.replicates} reps)")
        assert rel <= 0.05
    elapsed = time.perf_counter() - start
    detail(request, ", ".join(notes) + f", {elapsed:.1f}s")
    assert elapsed < 120


@pytest.mark.slow
@pytest.mark.criterion(8, "Risk orderings across EH, NEH and EI on stand-in signals")
def test_table_orderings(request):
    start = time.perf_counter()
    grids = {
        "NEH": (penalty_grid("linear", c=frange(0, 4, 0.2)), None),
        "EH": (penalty_grid("log2const", c1=frange(0, 1, 0.2), c2=frange(0, 6, 0.2)), None),
        "EI": (penalty_grid("log2const", c1=frange(0, 1, 0.2), c2=frange(0, 6, 0.2)),
               EI_SWEEP_DMAX),
    }
    risk = {}
    for sid in SIGNAL_IDS:
        s = test_signal(sid, 1024)
        for strategy, (pens, dmax) in grids.items():
            _, best = grid_sweep(s, strategy, pens, seed=RISK_SEED, D_max=dmax).best
            risk[sid, strategy] = best.value
    elapsed = time.perf_counter() - start
    checks = {f"EI<=NEH {sid}": risk[sid, "EI"] <= risk[sid, "NEH"] for sid in ("s1", "s2")}
    checks.update({f"NEH<=EH {sid}": risk[sid, "NEH"] <= risk[sid, "EH"] for sid in SIGNAL_IDS})
    checks.update({f"NEH<=EI {sid}": risk[sid, "NEH"] <= risk[sid, "EI"] for sid in ("s3", "s4")})
    table = " ".join(f"{sid}:" + "/".join(f"{risk[sid, k]:.1f}" for k in ("EH", "NEH", "EI"))
                     for sid in SIGNAL_IDS)
    failed = [k for k, ok in checks.items() if not ok]
    detail(request, f"EH/NEH/EI {table}; {elapsed:.0f}s" + (f"; failed {failed}" if failed else ""))
    assert not failed
    assert elapsed < 30 * 60


def _neh_time(n, r=4):
    X = encode(CategoricalSequence(np.random.default_rng(n).integers(1, r + 1, n), r))
    start = time.perf_counter()
    neh_select(transform_matrix(X))
    return time.perf_counter() - start


@pytest.mark.criterion(9, "NEH at n=2^21, r=4: time, memory and scaling")
def test_neh_scale(request):
    n = 2 ** 21
    X = encode(CategoricalSequence(np.random.default_rng(9).integers(1, 5, n), 4))
    gc.collect()
    tracemalloc.start()
    start = time.perf_counter()
    res = neh_select(transform_matrix(X))
    elapsed = time.perf_counter() - start
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    assert res.estimate.shape == (4, n)
    t19 = min(_neh_time(2 ** 19) for _ in range(3))
    t20 = min(_neh_time(2 ** 20) for _ in range(3))
    ratio = t20 / t19
    detail(request, f"{elapsed:.2f}s, peak {peak / 2 ** 30:.2f} GiB, 2^20/2^19 time ratio {ratio:.2f}")
    assert elapsed < 10
    assert peak < 2 * 2 ** 30
    assert ratio < 3


@pytest.mark.criterion(10, "Hybrid detector recovers a single jump")
def test_hybrid_recovery(request):
    n = 1024
    truth = n // 2 + 1
    s = two_segment_signal(n, jump=0.4)
    hits = 0
    for rep in range(50):
        res = hybrid_detect(sample(s, (HYBRID_SEED, rep)))
        hits += any(abs(b - truth) <= 8 for b in res.partition.breakpoints[1:])
    detail(request, f"{hits}/50 within +-8 of {truth}")
    assert hits / 50 >= HYBRID_MIN_RATE
