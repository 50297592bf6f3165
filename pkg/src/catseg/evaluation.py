"""Synthetic signals, seeded sampling, Monte Carlo risk and brute-force oracles.

All randomness goes through :func:`numpy.random.default_rng`; replicate
``h`` of a run with master seed ``seed`` draws from ``default_rng((seed, h))``
so replicates can be computed in any order (or concurrently) and still
reproduce bit for bit.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .domain import check_probability, frobenius_sq_diff
from .errors import EstimatorFailure, OracleSizeError
from .haar import ROOT, CoefficientMatrix, HaarIndex, forward, index_at, transform_matrix
from .segmentation import (Partition, SegmentStats, partition_estimate, segmentation_path)
from .selection import PenaltyFamily, PenaltySpec, eh_ranking, neh_models

STOP_TOL = 1e-2
DEFAULT_MIN_REPS = 10
DEFAULT_MAX_REPS = 100_000

SIGNAL_IDS = tuple(f"s{l}" for l in range(1, 9))


# -- test signals ---------------------------------------------------------

def _grid(n: int) -> np.ndarray:
    return np.arange(1, n + 1) / n


def _steps(t, cuts, levels):
    return np.asarray(levels)[np.searchsorted(cuts, t, side="left")]


def _two_lines(p: np.ndarray) -> np.ndarray:
    return np.vstack([p, 1.0 - p])


def _first_line(sid: str, n: int) -> np.ndarray:
    t = _grid(n)
    if sid == "s1":
        return _steps(t, [0.2, 0.45, 0.72], [0.2, 0.7, 0.4, 0.8])
    if sid == "s2":
        cuts = [0.07, 0.16, 0.23, 0.35, 0.41, 0.52, 0.6, 0.68, 0.79, 0.88]
        levels = [0.15, 0.85, 0.35, 0.75, 0.2, 0.65, 0.3, 0.85, 0.15, 0.7, 0.4]
        return _steps(t, cuts, levels)
    if sid == "s3":
        return 0.5 + 0.35 * np.sin(2 * np.pi * t)
    if sid == "s4":
        return 0.5 + 0.3 * np.sin(6 * np.pi * t) * np.exp(-2 * t)
    if sid == "s5":
        return np.interp(t, [0.0, 0.3, 0.65, 1.0], [0.1, 0.9, 0.25, 0.6])
    if sid == "s6":
        frac = np.mod(6 * t, 1.0)
        frac[frac == 0] = 1.0
        return 0.2 + 0.6 * frac
    raise KeyError(sid)


_PRODUCTS = {"s7": ("s1", "s3"), "s8": ("s4", "s5")}


def test_signal(sid: str, n: int = 1024) -> np.ndarray:
    """Stand-in target matrix ``s1``..``s8``.

    ``s1``-``s6`` have two lines (the second is one minus the first);
    ``s7`` and ``s8`` have four lines built as the product distribution of
    two of the earlier first lines ``a`` and ``b``:
    ``(a b, a (1 - b), (1 - a) b, (1 - a)(1 - b))``.
    """
    if sid not in SIGNAL_IDS:
        raise KeyError(f"unknown signal {sid!r}; expected one of {SIGNAL_IDS}")
    if sid in _PRODUCTS:
        a = _first_line(_PRODUCTS[sid][0], n)
        b = _first_line(_PRODUCTS[sid][1], n)
        s = np.vstack([a * b, a * (1 - b), (1 - a) * b, (1 - a) * (1 - b)])
    else:
        s = _two_lines(_first_line(sid, n))
    return check_probability(s)


test_signal.__test__ = False


def two_segment_signal(n: int, low: float = 0.3, jump: float = 0.4, at: int | None = None):
    """Two-line step signal whose first line jumps by ``jump`` at start ``at``."""
    at = n // 2 + 1 if at is None else at
    p = np.where(np.arange(1, n + 1) < at, low, low + jump)
    return _two_lines(p)


# -- sampling ----------------------------------------------------------------

def sample_labels(s, seed) -> np.ndarray:
    """Draw 0-based labels column by column from ``s`` (inverse CDF)."""
    s = np.asarray(s, dtype=np.float64)
    rng = np.random.default_rng(seed)
    u = rng.random(s.shape[1])
    cum = np.cumsum(s, axis=0)
    labels = (cum <= u[None, :]).sum(axis=0)
    return np.minimum(labels, s.shape[0] - 1)


def sample(s, seed) -> np.ndarray:
    """One-hot ``(r, n)`` draw with independent columns ``X_i ~ s_i``."""
    labels = sample_labels(s, seed)
    X = np.zeros_like(np.asarray(s, dtype=np.float64))
    X[labels, np.arange(X.shape[1])] = 1.0
    return X


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("CATSEG_THREADS", "1")))
    except ValueError:
        return 1


# -- Monte Carlo risk -------------------------------------------------------

@dataclass(frozen=True)
class RiskEstimate:
    """Empirical risk with its running-average history.

    ``history[h - 1]`` is the average loss over replicates ``1..h``.
    """

    value: float
    replicates: int
    history: np.ndarray
    converged: bool


class _RunningRisk:
    def __init__(self, min_reps: int, max_reps: int):
        self.min_reps, self.max_reps = min_reps, max_reps
        self.total = 0.0
        self.history: list[float] = []
        self.done = False
        self.converged = False

    def add(self, loss: float) -> None:
        self.total += loss
        h = len(self.history) + 1
        self.history.append(self.total / h)
        if h >= self.min_reps and abs(self.history[-1] - self.history[-2]) < STOP_TOL:
            self.done = self.converged = True
        elif h >= self.max_reps:
            self.done = True

    def result(self) -> RiskEstimate:
        hist = np.array(self.history)
        return RiskEstimate(float(hist[-1]), hist.size, hist, self.converged)


def _check_reps(min_reps: int, max_reps: int) -> None:
    if min_reps < 2 or max_reps < min_reps:
        raise ValueError(f"need 2 <= min_reps <= max_reps, got {min_reps}, {max_reps}")


def _replicates(fn: Callable[[int], object], workers: int):
    """Yield ``fn(1), fn(2), ...`` in order, computing ``workers`` at a time."""
    h = 1
    if workers <= 1:
        while True:
            yield fn(h)
            h += 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while True:
            yield from pool.map(fn, range(h, h + workers))
            h += workers


def monte_carlo_risk(s, estimator: Callable[[np.ndarray], np.ndarray], seed: int = 0,
                     min_reps: int = DEFAULT_MIN_REPS, max_reps: int = DEFAULT_MAX_REPS,
                     workers: int | None = None) -> RiskEstimate:
    """Estimate ``E ||s - estimator(X)||**2`` by repeated sampling.

    Stops at the first ``h >= min_reps`` where two successive running
    averages differ by less than ``1e-2``; otherwise at ``max_reps`` with
    ``converged=False``.
    """
    _check_reps(min_reps, max_reps)
    s = check_probability(s)
    workers = default_workers() if workers is None else workers

    def loss(h):
        X = sample(s, (seed, h))
        try:
            est = estimator(X)
        except Exception as exc:
            raise EstimatorFailure(h, exc) from exc
        return frobenius_sq_diff(s, est)

    run = _RunningRisk(min_reps, max_reps)
    for value in _replicates(loss, workers):
        run.add(value)
        if run.done:
            break
    return run.result()


# -- grid sweeps ----------------------------------------------------------

def penalty_grid(family: PenaltyFamily | str, c=None, c1=None, c2=None) -> list[PenaltySpec]:
    family = PenaltyFamily(family)
    if family is PenaltyFamily.LINEAR:
        return [PenaltySpec.linear(v) for v in c]
    return [PenaltySpec.two_constant(a, b) for a in c1 for b in c2]


def frange(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive grid ``start, start + step, ..., stop`` built by multiplication."""
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)


@dataclass(frozen=True)
class SweepResult:
    strategy: str
    penalties: list[PenaltySpec]
    risks: list[RiskEstimate]

    @property
    def best_index(self) -> int:
        return int(np.argmin([r.value for r in self.risks]))

    @property
    def best(self) -> tuple[PenaltySpec, RiskEstimate]:
        k = self.best_index
        return self.penalties[k], self.risks[k]

    def rows(self) -> list[dict]:
        out = []
        for pen, risk in zip(self.penalties, self.risks):
            row = {"penalty": pen.family.value}
            if pen.family is PenaltyFamily.LINEAR:
                row.update(c=pen.c, c1="", c2="")
            else:
                row.update(c="", c1=pen.c1, c2=pen.c2)
            row.update(risk=risk.value, replicates=risk.replicates, converged=risk.converged)
            out.append(row)
        return out


class _HaarLosses:
    """Per-position loss pieces for coefficient-domain risk (Parseval)."""

    def __init__(self, s_coeffs: np.ndarray, x_coeffs: np.ndarray):
        self.kept = np.einsum("jp,jp->p", s_coeffs - x_coeffs, s_coeffs - x_coeffs)
        self.dropped = np.einsum("jp,jp->p", s_coeffs, s_coeffs)
        self.total_dropped = float(self.dropped.sum())

    def of(self, positions) -> float:
        return self.total_dropped + float((self.kept[positions] - self.dropped[positions]).sum())


def _loss_function(s: np.ndarray, strategy: str, penalties: Sequence[PenaltySpec],
                   D_max: int | None, J_max: int | None):
    n = s.shape[1]
    strategy = strategy.upper()
    if strategy in ("EH", "NEH"):
        family = PenaltyFamily.TWO_CONSTANT_LOG if strategy == "EH" else PenaltyFamily.LINEAR
        for pen in penalties:
            if pen.family is not family:
                from .errors import PenaltyError
                raise PenaltyError(f"{strategy} sweep needs {family.value} penalties")
        s_coeffs = forward(s)
    if strategy == "EH":
        dims = np.arange(1, n + 1)
        penmat = np.array([pen(dims, n) for pen in penalties])

        def losses(X):
            coeffs = transform_matrix(X)
            order, captured = eh_ranking(coeffs)
            picks = np.argmin(-captured[None, :] + penmat, axis=1)
            parts = _HaarLosses(s_coeffs, coeffs.coeffs)
            ordered = np.cumsum((parts.kept - parts.dropped)[order])
            return parts.total_dropped + ordered[picks]
        return losses
    if strategy == "NEH":
        def losses(X):
            coeffs = transform_matrix(X)
            models = neh_models(coeffs, J_max)
            penmat = np.array([pen(models.dims, n) for pen in penalties])
            picks = np.argmin(-models.captured[None, :] + penmat, axis=1)
            parts = _HaarLosses(s_coeffs, coeffs.coeffs)
            per_level = {J: parts.of(models.positions(J)) for J in np.unique(picks)}
            return np.array([per_level[J] for J in picks])
        return losses
    if strategy == "EI":
        def losses(X):
            stats = SegmentStats.from_matrix(X)
            path = segmentation_path(stats, D_max)
            penmat = np.array([pen(path.dims, n) for pen in penalties])
            picks = np.argmin(path.sse[None, :] + penmat, axis=1)
            per_dim = {}
            for k in np.unique(picks):
                est = partition_estimate(stats, path.partition(int(k) + 1))
                per_dim[k] = frobenius_sq_diff(s, est)
            return np.array([per_dim[k] for k in picks])
        return losses
    raise ValueError(f"unknown strategy {strategy!r}")


def grid_sweep(s, strategy: str, penalties: Sequence[PenaltySpec], seed: int = 0,
               min_reps: int = DEFAULT_MIN_REPS, max_reps: int = DEFAULT_MAX_REPS,
               D_max: int | None = None, J_max: int | None = None,
               workers: int | None = None) -> SweepResult:
    """Monte Carlo risk of ``strategy`` at every penalty of a grid.

    Every penalty sees the same replicate sequence as
    :func:`monte_carlo_risk` with the same seed and keeps its own stopping
    time; sampling continues until all have stopped. Haar risks are taken
    in the coefficient domain (orthonormal basis) on the unprojected
    estimate. ``D_max`` caps the EI dynamic program (default ``n``).
    """
    _check_reps(min_reps, max_reps)
    s = check_probability(s)
    penalties = list(penalties)
    if not penalties:
        raise ValueError("empty penalty grid")
    workers = default_workers() if workers is None else workers
    losses = _loss_function(s, strategy, penalties, D_max, J_max)

    def replicate(h):
        X = sample(s, (seed, h))
        try:
            return losses(X)
        except Exception as exc:
            raise EstimatorFailure(h, exc) from exc

    runs = [_RunningRisk(min_reps, max_reps) for _ in penalties]
    for values in _replicates(replicate, workers):
        for run, v in zip(runs, values):
            if not run.done:
                run.add(float(v))
        if all(run.done for run in runs):
            break
    return SweepResult(strategy.upper(), penalties, [run.result() for run in runs])


# -- brute-force oracles ----------------------------------------------------

@dataclass(frozen=True)
class SubsetOracleResult:
    criterion: float
    subset: frozenset
    scored: int


def oracle_subset_select(coeffs: CoefficientMatrix, pen: PenaltySpec) -> SubsetOracleResult:
    """Exhaustive minimum of ``-captured(m) + pen(|m|)`` over subsets with the constant."""
    n = coeffs.n
    if n > 16:
        raise OracleSizeError(f"subset oracle limited to n <= 16, got {n}")
    m = n - 1
    codes = np.arange(2 ** m)
    masks = ((codes[:, None] >> np.arange(m)) & 1).astype(bool)
    captured = coeffs.norms[0] + masks.astype(np.float64) @ coeffs.norms[1:]
    dims = 1 + masks.sum(axis=1)
    crit = -captured + pen(dims, n)
    best = int(np.argmin(crit))
    subset = frozenset([ROOT] + [index_at(int(p) + 2, n) for p in np.flatnonzero(masks[best])])
    return SubsetOracleResult(float(crit[best]), subset, int(codes.size))


@dataclass(frozen=True)
class PartitionOracleResult:
    sse: float
    criterion: float
    partition: Partition
    scored: int


def direct_sse(X: np.ndarray, partition: Partition) -> float:
    """``sum_l ||X_l - segment mean||**2`` by explicit summation."""
    total = 0.0
    for a, b in partition.segments():
        block = X[:, a - 1:b]
        mean = block.mean(axis=1, keepdims=True)
        total += float(((block - mean) ** 2).sum())
    return total


def oracle_partition_select(X, pen: PenaltySpec, D: int) -> PartitionOracleResult:
    """Exhaustive best partition into ``D`` intervals."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[1]
    if n > 12:
        raise OracleSizeError(f"partition oracle limited to n <= 12, got {n}")
    if not 1 <= D <= n:
        raise ValueError(f"D={D} outside 1..{n}")
    best_sse, best_part, count = math.inf, None, 0
    for cuts in itertools.combinations(range(2, n + 1), D - 1):
        part = Partition((1,) + cuts, n)
        sse = direct_sse(X, part)
        count += 1
        if sse < best_sse - 1e-12:
            best_sse, best_part = sse, part
    crit = best_sse + float(pen(D, n))
    return PartitionOracleResult(best_sse, crit, best_part, count)


def oracle_neh_level(coeffs: CoefficientMatrix, J: int) -> tuple[float, frozenset]:
    """Largest captured energy over all NEH models of level ``J``.

    Every admissible subset of each level ``J + k`` is scored; levels are
    independent, so the best model combines the per-level winners.
    """
    N = coeffs.N
    norms = coeffs.norms
    total = float(norms[:2 ** J].sum())
    chosen = [index_at(p + 1, coeffs.n) for p in range(2 ** J)]
    for k in range(N - J):
        level = J + k
        cnt = 2 ** J // (k + 1) ** 3
        if cnt == 0:
            continue
        base = 2 ** level
        best, best_set = -math.inf, ()
        for combo in itertools.combinations(range(2 ** level), cnt):
            v = float(norms[[base + c for c in combo]].sum())
            if v > best:
                best, best_set = v, combo
        total += best
        chosen.extend(HaarIndex(level, c) for c in best_set)
    return total, frozenset(chosen)
