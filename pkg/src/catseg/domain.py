"""Categorical sequences, their one-hot encoding and probability matrices.

Matrices are ``(r, n)`` float arrays: row ``j`` is the line of category
``j + 1`` and column ``i`` the observation at position ``i + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSequenceError, ShapeMismatchError

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class CategoricalSequence:
    """Labels ``1..r`` of ``n`` independent categorical observations."""

    values: np.ndarray
    r: int

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1 or values.size < 1:
            raise InvalidSequenceError("sequence must be one-dimensional and non-empty")
        if not np.issubdtype(values.dtype, np.integer):
            if not np.all(np.equal(np.mod(values, 1), 0)):
                raise InvalidSequenceError("sequence labels must be integers")
        if int(self.r) < 2:
            raise InvalidSequenceError(f"alphabet size must be at least 2, got {self.r}")
        values = values.astype(np.int64)
        lo, hi = int(values.min()), int(values.max())
        if lo < 1 or hi > self.r:
            raise InvalidSequenceError(
                f"labels must lie in 1..{self.r}, found range {lo}..{hi}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "r", int(self.r))

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other):
        if not isinstance(other, CategoricalSequence):
            return NotImplemented
        return self.r == other.r and np.array_equal(self.values, other.values)

    __hash__ = None


def encode(seq: CategoricalSequence) -> np.ndarray:
    """One-hot encode a sequence into its ``(r, n)`` multinomial matrix."""
    X = np.zeros((seq.r, seq.n), dtype=np.float64)
    X[seq.values - 1, np.arange(seq.n)] = 1.0
    return X


def decode(X: np.ndarray) -> CategoricalSequence:
    """Recover labels from a one-hot matrix (argmax per column)."""
    X = check_multinomial(X)
    return CategoricalSequence(np.argmax(X, axis=0) + 1, X.shape[0])


def check_multinomial(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise InvalidSequenceError(f"expected an (r, n) matrix with r >= 2, got shape {X.shape}")
    if not np.all((X == 0.0) | (X == 1.0)) or not np.all(X.sum(axis=0) == 1.0):
        raise InvalidSequenceError("multinomial matrix columns must be one-hot")
    return X


def check_probability(P, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate that every column of ``P`` is a probability vector."""
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2:
        raise InvalidSequenceError(f"expected an (r, n) matrix, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise InvalidSequenceError("probability matrix has non-finite entries")
    if P.min() < 0.0 or P.max() > 1.0:
        raise InvalidSequenceError("probability entries must lie in [0, 1]")
    if np.max(np.abs(P.sum(axis=0) - 1.0)) > tol:
        raise InvalidSequenceError("probability columns must sum to 1")
    return P


def is_probability(P, tol: float = SIMPLEX_TOL) -> bool:
    try:
        check_probability(P, tol)
    except InvalidSequenceError:
        return False
    return True


def frobenius_sq_diff(a, b) -> float:
    """Squared Frobenius distance between two matrices of equal shape."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.einsum("ij,ij->", d, d)) if d.ndim == 2 else float(np.sum(d * d))


def simplex_project(m) -> np.ndarray:
    """Euclidean projection of each column onto the probability simplex.

    Sort-based algorithm: for a column ``v`` sorted decreasingly as ``u``,
    the threshold is ``theta = (cumsum(u)[rho] - 1) / (rho + 1)`` with
    ``rho`` the last index where ``u[rho] > theta``; the projection is
    ``max(v - theta, 0)``.
    """
    m = np.asarray(m, dtype=np.float64)
    one_d = m.ndim == 1
    if one_d:
        m = m[:, None]
    if m.ndim != 2:
        raise ShapeMismatchError(f"expected a vector or (r, n) matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidSequenceError("cannot project non-finite entries")
    r = m.shape[0]
    u = -np.sort(-m, axis=0)
    css = np.cumsum(u, axis=0) - 1.0
    k = np.arange(1, r + 1, dtype=np.float64)[:, None]
    cond = u - css / k > 0
    # cond is true on a prefix; rho is its last index
    rho = r - 1 - np.argmax(cond[::-1], axis=0)
    theta = css[rho, np.arange(m.shape[1])] / (rho + 1.0)
    out = np.maximum(m - theta, 0.0)
    return out[:, 0] if one_d else out
