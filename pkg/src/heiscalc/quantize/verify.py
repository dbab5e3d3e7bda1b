"""Operator-composition oracle for inverse symbols: Delta (Q f) ~ f and
Q (Delta f) ~ f on the interior of the grid."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError
from .apply import quantize_apply
from .grid import GridSpec
from .s0 import make_s0
from .symbols import sublaplacian_symbol

__all__ = ["VerifyReport", "verify_inverse", "refinement_study", "relative_error", "DEFAULT_EXTENT"]

DEFAULT_EXTENT = 8.0


def relative_error(a: np.ndarray, b: np.ndarray, window) -> float:
    """||a - b||_2 / ||b||_2 restricted to ``window`` (tuple of slices)."""
    num = np.linalg.norm((a - b)[window])
    den = np.linalg.norm(b[window])
    return float(num / den) if den > 0 else float("inf")


@dataclass
class VerifyReport:
    grid: GridSpec
    seeds: tuple
    e1: tuple  # ||Delta Q f - f|| / ||f|| per seed
    e2: tuple  # ||Q Delta f - f|| / ||f|| per seed
    window: float
    seconds: float
    label: str = "inverse"
    extra: dict = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return float(max(max(self.e1), max(self.e2)))

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "grid": self.grid.as_dict(),
            "seeds": list(self.seeds),
            "e1": [float(v) for v in self.e1],
            "e2": [float(v) for v in self.e2],
            "max_error": self.max_error,
            "window": self.window,
        }


def _delta_symbol(delta, dim: int):
    """Accept SublaplacianData (scalar mu), a PolynomialSymbol, or a scalar mu."""
    if hasattr(delta, "terms"):
        return delta
    if hasattr(delta, "mu"):
        if delta.size != 1:
            raise InputError("grid verification supports scalar mu only")
        return sublaplacian_symbol(dim - 1, complex(delta.mu[0][0]))
    return sublaplacian_symbol(dim - 1, complex(delta))


def verify_inverse(qsym, delta, chart, grid: GridSpec, seeds=(0, 1, 2), window: float = 0.5,
                   nthreads: int = 1, label: str = "inverse") -> VerifyReport:
    """Max over seeds of the two composition residuals on the interior window."""
    if isinstance(seeds, int):
        seeds = tuple(range(seeds))
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise InputError("need at least one trial")
    t0 = time.perf_counter()
    dsym = _delta_symbol(delta, grid.dim)
    fs = np.stack([make_s0(grid, s).samples for s in seeds]).astype(complex)
    dfs = quantize_apply(dsym, chart, grid, fs, batch=True)
    both = quantize_apply(qsym, chart, grid, np.concatenate([fs, dfs]), batch=True, nthreads=nthreads)
    qf, qdf = both[: len(seeds)], both[len(seeds):]
    dqf = quantize_apply(dsym, chart, grid, qf, batch=True)
    win = grid.interior(window)
    e1 = tuple(relative_error(dqf[i], fs[i], win) for i in range(len(seeds)))
    e2 = tuple(relative_error(qdf[i], fs[i], win) for i in range(len(seeds)))
    return VerifyReport(grid, seeds, e1, e2, window, time.perf_counter() - t0, label)


def refinement_study(qsym, delta, chart, sizes=(32, 64), extent: float = DEFAULT_EXTENT,
                     seeds=(0, 1, 2), nthreads: int = 1):
    """Reports on cubes of the given sizes and the error ratio coarse/fine."""
    dim = getattr(qsym, "dim", None) or (len(getattr(chart, "L", chart)) + 1)
    reports = [verify_inverse(qsym, delta, chart, GridSpec.cube(dim, N, extent), seeds, nthreads=nthreads)
               for N in sizes]
    ratios = [reports[i].max_error / reports[i + 1].max_error for i in range(len(reports) - 1)]
    return reports, ratios
