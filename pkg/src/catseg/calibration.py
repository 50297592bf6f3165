"""Data-driven choice of a linear penalty constant by dimension jump.

The constant ``c`` is swept over ``0, step, 2*step, ...`` until the
smallest model is selected. ``c_hat`` is the grid point right after the
largest drop in selected dimension between consecutive grid points
(first one on ties) and the retained constant is ``2 * c_hat``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError
from .haar import CoefficientMatrix
from .segmentation import SegmentStats, segmentation_path
from .selection import neh_models

DEFAULT_GRID_STEP = 0.02
DEFAULT_CALIBRATION_JMAX = 7
MAX_STEPS = 10 ** 6


@dataclass(frozen=True)
class CalibrationPath:
    """Selected dimension along the constant grid.

    ``selected`` holds the chosen level (NEH) or segment count (EI) at each
    grid point; ``dims`` the matching model dimension.
    """

    grid: np.ndarray
    dims: np.ndarray
    selected: np.ndarray
    c_hat: float
    retained: float

    @property
    def drops(self) -> np.ndarray:
        return self.dims[:-1] - self.dims[1:]


def _sweep(base: np.ndarray, dims: np.ndarray, labels: np.ndarray, grid_step: float,
           max_steps: int = MAX_STEPS) -> CalibrationPath:
    if not grid_step > 0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    base = np.asarray(base, dtype=np.float64)
    dims_f = np.asarray(dims, dtype=np.float64)
    chunk = int(max(64, min(65536, 4_000_000 // base.size)))
    picks = []
    k0 = 0
    while True:
        if k0 > max_steps:
            raise CalibrationError(
                f"smallest model not reached within {max_steps} grid steps "
                f"(step {grid_step}); data may be degenerate")
        ks = np.arange(k0, min(k0 + chunk, max_steps + 1))
        c = ks * grid_step
        pick = np.argmin(base[None, :] + c[:, None] * dims_f[None, :], axis=1)
        done = np.flatnonzero((pick == 0) & (ks >= 1))
        if done.size:
            picks.append(pick[:done[0] + 1])
            break
        picks.append(pick)
        k0 += chunk
    pick = np.concatenate(picks)
    grid = np.arange(pick.size) * grid_step
    sel_dims = np.asarray(dims)[pick]
    k = int(np.argmax(sel_dims[:-1] - sel_dims[1:])) + 1
    c_hat = float(grid[k])
    return CalibrationPath(grid, sel_dims, np.asarray(labels)[pick], c_hat, 2.0 * c_hat)


def calibrate_neh(coeffs: CoefficientMatrix, J_max: int = DEFAULT_CALIBRATION_JMAX,
                  grid_step: float = DEFAULT_GRID_STEP) -> CalibrationPath:
    """Sweep the NEH constant until level 0 is selected.

    ``J_max`` is clipped to the finest available level.
    """
    J_max = min(int(J_max), coeffs.N - 1)
    models = neh_models(coeffs, J_max)
    return _sweep(-models.captured, models.dims, models.levels, grid_step)


def calibrate_segmentation(X, candidates=None, D_max: int | None = None,
                           grid_step: float = DEFAULT_GRID_STEP,
                           stats: SegmentStats | None = None) -> CalibrationPath:
    """Same sweep on the segmentation criterion ``SSE(D) + c * D``."""
    if stats is None:
        stats = SegmentStats.from_matrix(X)
    path = segmentation_path(stats, D_max, candidates)
    return _sweep(path.sse, path.dims, path.dims, grid_step)
