"""Penalized model selection over Haar coefficient subsets.

Two collections are supported:

* EH: every subset of the Haar indices that contains the constant
  function, with the two-constant logarithmic penalty. For a fixed size
  the best subset keeps the largest norms, so one sort solves the
  problem.
* NEH: for each level ``J`` all coefficients of levels ``< J`` plus the
  ``2**J // (k + 1)**3`` largest norms of each level ``J + k``, with a
  linear penalty.

For a model ``m`` the least-squares contrast equals minus the captured
energy ``sum_{p in m} norms[p]``, so both criteria are computed from the
norms alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from .errors import PenaltyError
from .haar import CoefficientMatrix, HaarIndex, indices_of, inverse, positions_of


class PenaltyFamily(str, Enum):
    TWO_CONSTANT_LOG = "log2const"
    LINEAR = "linear"


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty as a function of model dimension.

    ``log2const``: ``D * (c1 * log(size / D) + c2)``, where ``size`` is the
    number of candidate atoms (``n``, or the candidate-set size for
    restricted segmentation). ``linear``: ``c * D``.
    """

    family: PenaltyFamily
    c1: float = 1.0
    c2: float = 2.0
    c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", PenaltyFamily(self.family))
        for name in ("c1", "c2", "c"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise PenaltyError(f"penalty constant {name} must be finite and >= 0, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def two_constant(cls, c1: float = 1.0, c2: float = 2.0) -> "PenaltySpec":
        return cls(PenaltyFamily.TWO_CONSTANT_LOG, c1=c1, c2=c2)

    @classmethod
    def linear(cls, c: float = 1.0) -> "PenaltySpec":
        return cls(PenaltyFamily.LINEAR, c=c)

    @property
    def constants(self) -> tuple[float, ...]:
        if self.family is PenaltyFamily.LINEAR:
            return (self.c,)
        return (self.c1, self.c2)

    def __call__(self, dims, size: int) -> np.ndarray:
        dims = np.asarray(dims, dtype=np.float64)
        if self.family is PenaltyFamily.LINEAR:
            return self.c * dims
        return dims * (self.c1 * np.log(size / dims) + self.c2)

    def describe(self) -> str:
        if self.family is PenaltyFamily.LINEAR:
            return f"linear(c={self.c:g})"
        return f"log2const(c1={self.c1:g}, c2={self.c2:g})"


def _require(pen: PenaltySpec, family: PenaltyFamily, strategy: str) -> None:
    if not isinstance(pen, PenaltySpec) or pen.family is not family:
        raise PenaltyError(f"{strategy} requires a {family.value} penalty, got {pen!r}")


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a Haar selection.

    ``positions`` are 0-based lexical positions of the kept coefficients;
    ``candidates`` and ``criterion`` hold the criterion path (dimensions
    1..n for EH, levels 0..J_max for NEH).
    """

    positions: np.ndarray
    dimension: int
    candidates: np.ndarray
    criterion: np.ndarray
    estimate: np.ndarray
    level: int | None = None
    n: int = field(default=0)

    @property
    def selected(self) -> frozenset[HaarIndex]:
        return indices_of(self.positions, self.n)

    @property
    def criterion_value(self) -> float:
        return float(self.criterion.min())

    @property
    def criterion_path(self) -> list[tuple[int, float]]:
        return list(zip(self.candidates.tolist(), self.criterion.tolist()))


def reconstruct(coeffs: CoefficientMatrix, selected) -> np.ndarray:
    """Inverse transform of the coefficients restricted to ``selected``.

    ``selected`` is either a collection of :class:`HaarIndex` or an integer
    array of 0-based positions.
    """
    if isinstance(selected, np.ndarray) and np.issubdtype(selected.dtype, np.integer):
        pos = selected
    else:
        pos = positions_of(selected, coeffs.n)
    kept = np.zeros_like(coeffs.coeffs)
    kept[:, pos] = coeffs.coeffs[:, pos]
    return inverse(kept)


def eh_ranking(coeffs: CoefficientMatrix) -> tuple[np.ndarray, np.ndarray]:
    """EH ordering of positions and the captured energy of each prefix.

    The constant function is forced first; the rest follow by decreasing
    norm, ties by lexical position. ``captured[D - 1]`` is the energy of
    the best model of dimension ``D``.
    """
    norms = coeffs.norms
    rest = np.argsort(-norms[1:], kind="stable") + 1
    order = np.concatenate(([0], rest))
    return order, np.cumsum(norms[order])


def eh_select(coeffs: CoefficientMatrix, pen: PenaltySpec | None = None) -> SelectionResult:
    if pen is None:
        pen = PenaltySpec.two_constant()
    _require(pen, PenaltyFamily.TWO_CONSTANT_LOG, "EH")
    n = coeffs.n
    order, captured = eh_ranking(coeffs)
    dims = np.arange(1, n + 1)
    crit = -captured + pen(dims, n)
    best = int(np.argmin(crit))
    positions = np.sort(order[:best + 1])
    return SelectionResult(
        positions=positions,
        dimension=best + 1,
        candidates=dims,
        criterion=crit,
        estimate=reconstruct(coeffs, positions),
        n=n,
    )


def neh_collection_dimension(J: int, N: int) -> int:
    """Common dimension of the NEH models at level ``J`` for ``n = 2**N``."""
    if not 0 <= J <= N - 1:
        raise ValueError(f"level J={J} outside 0..{N - 1}")
    return 2 ** J + sum(2 ** J // (k + 1) ** 3 for k in range(N - J))


@dataclass(frozen=True)
class NehModels:
    """Best NEH model of each level ``0..J_max`` for a given coefficient set."""

    levels: np.ndarray
    dims: np.ndarray
    captured: np.ndarray
    level_order: list[np.ndarray]

    def positions(self, J: int) -> np.ndarray:
        N = len(self.level_order) - 1
        parts = [np.arange(2 ** J)]
        for k in range(N - J):
            cnt = 2 ** J // (k + 1) ** 3
            if cnt:
                parts.append(self.level_order[J + k + 1][:cnt])
        return np.sort(np.concatenate(parts))


def neh_models(coeffs: CoefficientMatrix, J_max: int | None = None) -> NehModels:
    N = coeffs.N
    if N < 1:
        raise ValueError("NEH needs n >= 2")
    if J_max is None:
        J_max = N - 1
    if not 0 <= J_max <= N - 1:
        raise ValueError(f"J_max={J_max} outside 0..{N - 1}")
    norms = coeffs.norms
    # level_order[j + 1]: positions of level j by decreasing norm, ties by shift
    level_order = [np.array([0])]
    level_cum = [None]
    for j in range(N):
        seg = norms[2 ** j:2 ** (j + 1)]
        order = np.argsort(-seg, kind="stable")
        level_order.append(order + 2 ** j)
        level_cum.append(np.concatenate(([0.0], np.cumsum(seg[order]))))
    prefix = np.concatenate(([0.0], np.cumsum(norms)))
    levels = np.arange(J_max + 1)
    dims = np.array([neh_collection_dimension(J, N) for J in levels])
    captured = np.empty(J_max + 1)
    for J in levels:
        total = prefix[2 ** J]
        for k in range(N - J):
            total += level_cum[J + k + 1][2 ** J // (k + 1) ** 3]
        captured[J] = total
    return NehModels(levels, dims, captured, level_order)


def neh_select(coeffs: CoefficientMatrix, pen: PenaltySpec | None = None,
               J_max: int | None = None) -> SelectionResult:
    if pen is None:
        pen = PenaltySpec.linear()
    _require(pen, PenaltyFamily.LINEAR, "NEH")
    models = neh_models(coeffs, J_max)
    crit = -models.captured + pen(models.dims, coeffs.n)
    J = int(np.argmin(crit))
    positions = models.positions(J)
    return SelectionResult(
        positions=positions,
        dimension=int(models.dims[J]),
        candidates=models.levels,
        criterion=crit,
        estimate=reconstruct(coeffs, positions),
        level=J,
        n=coeffs.n,
    )


def select(coeffs: CoefficientMatrix, strategy: str, pen: PenaltySpec | None = None,
           J_max: int | None = None) -> SelectionResult:
    strategy = strategy.upper()
    if strategy == "EH":
        return eh_select(coeffs, pen)
    if strategy == "NEH":
        return neh_select(coeffs, pen, J_max)
    raise ValueError(f"unknown Haar strategy {strategy!r}")


def criterion_of(coeffs: CoefficientMatrix, selected: Iterable[HaarIndex],
                 pen: PenaltySpec) -> float:
    """Penalized contrast of an arbitrary model, ``-captured + pen(|m|)``."""
    pos = positions_of(selected, coeffs.n)
    return float(-coeffs.norms[pos].sum() + pen(pos.size, coeffs.n))
