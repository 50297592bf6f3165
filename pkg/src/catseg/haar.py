"""Discrete Haar basis on dyadic lengths and its fast transforms.

Coefficient arrays use lexical order: position 0 holds the constant
function ``(-1, 0)`` and ``(j, k)`` sits at position ``2**j + k``.
Sample ``i`` (1-based) corresponds to the point ``i / n``, and the mother
function is +1 on ``(0, 1/2]`` and -1 on ``(1/2, 1]``, so within each
support block the earlier half carries the positive sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import NonDyadicLengthError

_SQRT2 = math.sqrt(2.0)


class HaarIndex(NamedTuple):
    level: int
    shift: int


ROOT = HaarIndex(-1, 0)


def dyadic_exponent(n: int) -> int:
    """Return ``N`` with ``n == 2**N``, raising for other lengths."""
    n = int(n)
    if n < 1 or n & (n - 1):
        raise NonDyadicLengthError(f"length {n} is not a power of two")
    return n.bit_length() - 1


def _check_index(idx: HaarIndex, N: int) -> None:
    j, k = idx
    if j == -1:
        if k != 0:
            raise ValueError(f"invalid Haar index {tuple(idx)}")
    elif not (0 <= j <= N - 1 and 0 <= k < 2 ** j):
        raise ValueError(f"invalid Haar index {tuple(idx)} for n = 2**{N}")


def canonical_order(idx: HaarIndex, n: int) -> int:
    """1-based lexical rank of ``idx`` among the ``n`` Haar indices."""
    N = dyadic_exponent(n)
    idx = HaarIndex(*idx)
    _check_index(idx, N)
    if idx.level == -1:
        return 1
    return 1 + 2 ** idx.level + idx.shift


def index_at(order: int, n: int) -> HaarIndex:
    """Inverse of :func:`canonical_order`."""
    dyadic_exponent(n)
    if not 1 <= order <= n:
        raise ValueError(f"order {order} outside 1..{n}")
    if order == 1:
        return ROOT
    pos = order - 1
    j = pos.bit_length() - 1
    return HaarIndex(j, pos - 2 ** j)


def level_slice(j: int) -> slice:
    """Positions (0-based) of the level-``j`` coefficients."""
    if j == -1:
        return slice(0, 1)
    return slice(2 ** j, 2 ** (j + 1))


def haar_vector(idx: HaarIndex, n: int) -> np.ndarray:
    """Evaluate the Haar function ``idx`` at the points ``i / n``, ``i = 1..n``."""
    N = dyadic_exponent(n)
    if N < 1:
        raise NonDyadicLengthError("the Haar basis needs n >= 2")
    j, k = HaarIndex(*idx)
    _check_index(HaarIndex(j, k), N)
    if j == -1:
        return np.full(n, 1.0 / math.sqrt(n))
    x = 2.0 ** j * np.arange(1, n + 1) / n - k
    phi = np.where((x > 0) & (x <= 0.5), 1.0, np.where((x > 0.5) & (x <= 1.0), -1.0, 0.0))
    return 2.0 ** (j / 2) / math.sqrt(n) * phi


def forward(x) -> np.ndarray:
    """Haar coefficients of every line of ``x`` along the last axis.

    Pyramid algorithm, ``O(n)`` per line. Accepts a vector or a stack of
    lines (e.g. an ``(r, n)`` matrix).
    """
    a = np.array(x, dtype=np.float64)
    n = a.shape[-1]
    dyadic_exponent(n)
    out = np.empty_like(a)
    m = n
    while m > 1:
        pairs = a[..., :m].reshape(a.shape[:-1] + (m // 2, 2))
        even = pairs[..., 0]
        odd = pairs[..., 1]
        out[..., m // 2:m] = (even - odd) / _SQRT2
        a = (even + odd) / _SQRT2
        m //= 2
    out[..., 0] = a[..., 0]
    return out


def inverse(coeffs) -> np.ndarray:
    """Inverse of :func:`forward` along the last axis."""
    c = np.asarray(coeffs, dtype=np.float64)
    n = c.shape[-1]
    dyadic_exponent(n)
    a = c[..., :1].copy()
    m = 1
    while m < n:
        d = c[..., m:2 * m]
        nxt = np.empty(c.shape[:-1] + (m, 2))
        nxt[..., 0] = (a + d) / _SQRT2
        nxt[..., 1] = (a - d) / _SQRT2
        a = nxt.reshape(c.shape[:-1] + (2 * m,))
        m *= 2
    return a


@dataclass(frozen=True)
class CoefficientMatrix:
    """Haar coefficients of each matrix line plus their per-index squared norms.

    Attributes
    ----------
    coeffs : ndarray, shape (r, n)
        ``coeffs[j, p]`` is the coefficient of line ``j`` on the Haar
        function at lexical position ``p``.
    norms : ndarray, shape (n,)
        ``norms[p] = sum_j coeffs[j, p] ** 2``.
    """

    coeffs: np.ndarray
    norms: np.ndarray

    @property
    def r(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @property
    def N(self) -> int:
        return dyadic_exponent(self.n)


def transform_matrix(X) -> CoefficientMatrix:
    """Transform every line of an ``(r, n)`` matrix and collect norms."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected an (r, n) matrix, got shape {X.shape}")
    coeffs = forward(X)
    norms = np.einsum("jp,jp->p", coeffs, coeffs)
    coeffs.flags.writeable = False
    norms.flags.writeable = False
    return CoefficientMatrix(coeffs, norms)


def positions_of(indices: Iterable[HaarIndex], n: int) -> np.ndarray:
    """0-based lexical positions of a collection of Haar indices."""
    return np.array(sorted(canonical_order(HaarIndex(*i), n) - 1 for i in indices),
                    dtype=np.int64)


def indices_of(positions, n: int) -> frozenset[HaarIndex]:
    return frozenset(index_at(int(p) + 1, n) for p in positions)
