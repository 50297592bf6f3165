"""Least-squares segmentation over interval partitions.

Within a segment the least-squares fit is the mean of the one-hot
columns, so a segment of length ``L`` with category counts ``n_j`` costs
``L - sum_j n_j**2 / L``. Optimal partitions for every number of segments
come from a dynamic program over segment boundaries, optionally
restricted to a candidate set of start positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .domain import check_multinomial
from .errors import SegmentationError
from .haar import dyadic_exponent, transform_matrix
from .selection import PenaltyFamily, PenaltySpec, SelectionResult, neh_select

JUMP_TOL = 1e-9


@dataclass(frozen=True)
class Partition:
    """Partition of ``1..n`` into intervals, given by 1-based segment starts."""

    breakpoints: tuple[int, ...]
    n: int

    def __post_init__(self):
        bps = tuple(int(b) for b in self.breakpoints)
        if not bps or bps[0] != 1:
            raise SegmentationError("a partition must start at position 1")
        if any(b >= c for b, c in zip(bps, bps[1:])) or bps[-1] > self.n:
            raise SegmentationError(f"invalid breakpoints {bps} for n={self.n}")
        object.__setattr__(self, "breakpoints", bps)

    @property
    def dimension(self) -> int:
        return len(self.breakpoints)

    def segments(self) -> list[tuple[int, int]]:
        """Inclusive 1-based ``(start, end)`` pairs."""
        ends = [b - 1 for b in self.breakpoints[1:]] + [self.n]
        return list(zip(self.breakpoints, ends))


@dataclass(frozen=True)
class SegmentStats:
    """Cumulative category counts; row ``i`` counts positions ``1..i``."""

    cum_counts: np.ndarray

    @classmethod
    def from_matrix(cls, X) -> "SegmentStats":
        X = np.asarray(X, dtype=np.float64)
        cc = np.zeros((X.shape[1] + 1, X.shape[0]), dtype=np.int64)
        np.cumsum(X.T, axis=0, out=cc[1:], dtype=np.int64)
        cc.flags.writeable = False
        return cls(cc)

    @property
    def n(self) -> int:
        return self.cum_counts.shape[0] - 1

    @property
    def r(self) -> int:
        return self.cum_counts.shape[1]

    def counts(self, a: int, b: int) -> np.ndarray:
        return self.cum_counts[b] - self.cum_counts[a - 1]


def segment_cost(stats: SegmentStats, a: int, b: int) -> float:
    """Residual sum of squares of positions ``a..b`` (1-based, inclusive)."""
    if not 1 <= a <= b <= stats.n:
        raise SegmentationError(f"invalid segment [{a}, {b}] for n={stats.n}")
    counts = stats.counts(a, b).astype(np.float64)
    L = float(b - a + 1)
    return L - float(counts @ counts) / L


@njit(cache=True)
def _dp_kernel(bounds, cc, D_max):
    p = bounds.size - 1
    r = cc.shape[1]
    best = np.full((p + 1, D_max + 1), np.inf)
    back = np.full((p + 1, D_max + 1), -1, dtype=np.int64)
    best[0, 0] = 0.0
    for v in range(1, p + 1):
        for u in range(v):
            L = float(bounds[v] - bounds[u])
            s = 0.0
            for j in range(r):
                c = float(cc[v, j] - cc[u, j])
                s += c * c
            cost = L - s / L
            top = min(D_max, u + 1)
            for d in range(1, top + 1):
                cand = best[u, d - 1] + cost
                if cand < best[v, d]:
                    best[v, d] = cand
                    back[v, d] = u
    return best, back


def _boundaries(n: int, candidates) -> np.ndarray:
    if candidates is None:
        return np.arange(n + 1, dtype=np.int64)
    cand = np.asarray(sorted(set(int(c) for c in candidates)), dtype=np.int64)
    if cand.size and (cand[0] < 2 or cand[-1] > n):
        raise SegmentationError(f"candidate starts must lie in 2..{n}")
    return np.concatenate(([0], cand - 1, [n])).astype(np.int64)


@dataclass(frozen=True)
class SegmentationPath:
    """Optimal SSE for ``D = 1..D_max`` and the tables to recover partitions."""

    bounds: np.ndarray
    sse: np.ndarray
    back: np.ndarray = field(repr=False)
    n: int

    @property
    def D_max(self) -> int:
        return self.sse.size

    @property
    def dims(self) -> np.ndarray:
        return np.arange(1, self.D_max + 1)

    def partition(self, D: int) -> Partition:
        if not 1 <= D <= self.D_max:
            raise SegmentationError(f"D={D} outside 1..{self.D_max}")
        v = self.bounds.size - 1
        starts = []
        for d in range(D, 0, -1):
            u = int(self.back[v, d])
            starts.append(int(self.bounds[u]) + 1)
            v = u
        return Partition(tuple(reversed(starts)), self.n)


def segmentation_path(stats: SegmentStats, D_max: int | None = None,
                      candidates=None) -> SegmentationPath:
    bounds = _boundaries(stats.n, candidates)
    p = bounds.size - 1
    if D_max is None:
        D_max = p
    D_max = int(D_max)
    if not 1 <= D_max <= p:
        raise SegmentationError(
            f"D_max={D_max} exceeds the {p} admissible segments")
    cc = np.ascontiguousarray(stats.cum_counts[bounds])
    best, back = _dp_kernel(bounds, cc, D_max)
    sse = np.maximum(best[p, 1:], 0.0)
    return SegmentationPath(bounds, sse, back, stats.n)


@dataclass(frozen=True)
class DPEntry:
    D: int
    sse: float
    partition: Partition


def dp_optimal_partitions(stats: SegmentStats, D_max: int, candidates=None) -> list[DPEntry]:
    """Best partition into ``D`` intervals for every ``D = 1..D_max``."""
    path = segmentation_path(stats, D_max, candidates)
    return [DPEntry(D, float(path.sse[D - 1]), path.partition(D)) for D in path.dims]


def partition_estimate(stats: SegmentStats, partition: Partition) -> np.ndarray:
    """Piecewise-constant matrix of segment frequencies."""
    segs = partition.segments()
    lengths = np.array([b - a + 1 for a, b in segs])
    freqs = np.array([stats.counts(a, b) for a, b in segs], dtype=np.float64)
    freqs /= lengths[:, None]
    return np.repeat(freqs, lengths, axis=0).T.copy()


@dataclass(frozen=True)
class SegmentationResult:
    partition: Partition
    dimension: int
    candidates: np.ndarray
    criterion: np.ndarray
    sse: np.ndarray
    estimate: np.ndarray

    @property
    def criterion_path(self) -> list[tuple[int, float]]:
        return list(zip(self.candidates.tolist(), self.criterion.tolist()))


def _penalty_size(n: int, candidates) -> int:
    if candidates is None:
        return n
    return max(len(set(int(c) for c in candidates)), 1)


def select_from_path(path: SegmentationPath, pen: PenaltySpec, size: int) -> int:
    """Dimension minimizing ``SSE(D) + pen(D)``, ties to the smaller ``D``."""
    crit = path.sse + pen(path.dims, size)
    return int(np.argmin(crit)) + 1


def ei_select(X, pen: PenaltySpec | None = None, D_max: int | None = None,
              candidates=None, stats: SegmentStats | None = None) -> SegmentationResult:
    """Penalized least-squares segmentation.

    Minimizing ``SSE(D) + pen(D)`` is the same as minimizing the contrast
    plus penalty, the two differing by the constant ``n``. With
    ``candidates`` every segment after the first must start at one of them
    and a ``log2const`` penalty uses the candidate count inside the log.
    """
    if pen is None:
        pen = PenaltySpec.linear()
    if stats is None:
        stats = SegmentStats.from_matrix(check_multinomial(X))
    path = segmentation_path(stats, D_max, candidates)
    size = _penalty_size(stats.n, candidates)
    crit = path.sse + pen(path.dims, size)
    D = int(np.argmin(crit)) + 1
    partition = path.partition(D)
    return SegmentationResult(
        partition=partition,
        dimension=D,
        candidates=path.dims,
        criterion=crit,
        sse=path.sse,
        estimate=partition_estimate(stats, partition),
    )


def jump_set(estimate, tol: float = JUMP_TOL) -> np.ndarray:
    """1-based positions ``i >= 2`` where column ``i`` differs from column ``i - 1``."""
    est = np.asarray(estimate, dtype=np.float64)
    if est.ndim == 1:
        est = est[None, :]
    if est.shape[1] < 2:
        return np.array([], dtype=np.int64)
    diff = np.max(np.abs(np.diff(est, axis=1)), axis=0)
    return np.flatnonzero(diff > tol).astype(np.int64) + 2


@dataclass(frozen=True)
class HybridResult:
    partition: Partition
    estimate: np.ndarray
    neh: SelectionResult
    jumps: np.ndarray
    neh_penalty: PenaltySpec
    ei_penalty: PenaltySpec | None
    segmentation: SegmentationResult | None
    calibration: dict = field(default_factory=dict)


DEFAULT_HYBRID_JMAX = 7
EI_CALIBRATIONS = ("neh", "segmentation")


def hybrid_detect(X, neh_pen: PenaltySpec | None = None, ei_pen: PenaltySpec | None = None,
                  D_max: int | None = None, J_max: int | None = DEFAULT_HYBRID_JMAX,
                  grid_step: float = 0.02, ei_calibration: str = "neh") -> HybridResult:
    """Two-step change-point detection: NEH fit, then EI on its jumps.

    A missing ``neh_pen`` is calibrated by the dimension-jump sweep on the
    NEH criterion (retained constant ``2 * c_hat``, levels up to ``J_max``).
    A missing ``ei_pen`` is linear with either the NEH constant
    (``ei_calibration="neh"``) or a dimension-jump sweep of the segmentation
    criterion restricted to the jump set (``"segmentation"``). The latter
    only sees the models built on the jumps; when NEH already isolates the
    true changes its single large drop is the signal itself and the
    retained constant removes it. ``D_max`` defaults to every admissible
    segment count.
    """
    if ei_calibration not in EI_CALIBRATIONS:
        raise ValueError(f"ei_calibration must be one of {EI_CALIBRATIONS}")
    from .calibration import calibrate_neh, calibrate_segmentation

    X = check_multinomial(X)
    N = dyadic_exponent(X.shape[1])
    if J_max is None or J_max > N - 1:
        J_max = N - 1
    coeffs = transform_matrix(X)
    calibration = {}
    if neh_pen is None:
        cal = calibrate_neh(coeffs, J_max=J_max, grid_step=grid_step)
        calibration["neh"] = cal
        neh_pen = PenaltySpec.linear(cal.retained)
    neh = neh_select(coeffs, neh_pen, J_max)
    jumps = jump_set(neh.estimate)
    stats = SegmentStats.from_matrix(X)
    n = X.shape[1]
    if jumps.size == 0:
        part = Partition((1,), n)
        return HybridResult(part, partition_estimate(stats, part), neh, jumps,
                            neh_pen, ei_pen, None, calibration)
    if D_max is None:
        D_max = jumps.size + 1
    if ei_pen is None and ei_calibration == "segmentation":
        cal = calibrate_segmentation(X, jumps, D_max=D_max, grid_step=grid_step, stats=stats)
        calibration["ei"] = cal
        ei_pen = PenaltySpec.linear(cal.retained)
    elif ei_pen is None:
        if neh_pen.family is not PenaltyFamily.LINEAR:
            raise SegmentationError("the NEH step needs a linear penalty")
        ei_pen = PenaltySpec.linear(neh_pen.c)
    seg = ei_select(X, ei_pen, D_max=D_max, candidates=jumps, stats=stats)
    return HybridResult(seg.partition, seg.estimate, neh, jumps, neh_pen, ei_pen, seg,
                        calibration)


__all__ = [
    "DPEntry", "HybridResult", "Partition", "PenaltyFamily", "SegmentStats",
    "SegmentationPath", "SegmentationResult", "dp_optimal_partitions", "ei_select",
    "hybrid_detect", "jump_set", "partition_estimate", "segment_cost",
    "segmentation_path", "select_from_path",
]
