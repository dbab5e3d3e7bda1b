"""Periodic sampling grids and their DFT dual grids."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError

__all__ = ["GridSpec"]


@dataclass(frozen=True)
class GridSpec:
    """Axis k samples x = -L_k + j * 2 L_k / N_k, j = 0..N_k-1 (periodic)."""

    extent: tuple  # L_k per axis
    points: tuple  # N_k per axis

    def __post_init__(self):
        ext = tuple(float(v) for v in self.extent)
        pts = tuple(int(v) for v in self.points)
        if len(ext) != len(pts) or not pts:
            raise InputError("extent and points must have the same positive length")
        for n in pts:
            if n < 8 or n & (n - 1):
                raise InputError(f"grid size {n} must be a power of two >= 8")
        if any(not L > 0 for L in ext):
            raise InputError("grid extents must be positive")
        object.__setattr__(self, "extent", ext)
        object.__setattr__(self, "points", pts)

    @classmethod
    def cube(cls, dim: int, N: int, L: float) -> "GridSpec":
        return cls((L,) * dim, (N,) * dim)

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def spacing(self) -> tuple:
        return tuple(2.0 * L / N for L, N in zip(self.extent, self.points))

    def axis(self, k: int) -> np.ndarray:
        L, N = self.extent[k], self.points[k]
        return -L + np.arange(N) * (2.0 * L / N)

    def freq_axis(self, k: int) -> np.ndarray:
        """Standard DFT dual grid 2 pi fftfreq(N, h) (signed, Nyquist negative)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points[k], self.spacing[k])

    def axes(self) -> list:
        return [self.axis(k) for k in range(self.dim)]

    def freq_axes(self) -> list:
        return [self.freq_axis(k) for k in range(self.dim)]

    def mesh(self) -> list:
        return np.meshgrid(*self.axes(), indexing="ij")

    def freq_mesh(self) -> list:
        return np.meshgrid(*self.freq_axes(), indexing="ij")

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def interior(self, fraction: float = 0.5) -> tuple:
        """Slices selecting the central ``fraction`` of every axis."""
        out = []
        for N in self.points:
            m = int(round(N * (1.0 - fraction) / 2.0))
            out.append(slice(m, N - m))
        return tuple(out)

    def as_dict(self) -> dict:
        return {"extent": list(self.extent), "points": list(self.points)}
