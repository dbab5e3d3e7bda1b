"""Test functions whose Fourier transform vanishes to infinite order at 0."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec

__all__ = ["S0TestFunction", "make_s0", "hole_radius", "S0_TOLERANCE"]

S0_TOLERANCE = 1e-10
# 1-D undivided difference stencils on offsets -2..2, orders 0..4
_STENCILS = np.array([
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, -0.5, 0.0, 0.5, 0.0],
    [0.0, 1.0, -2.0, 1.0, 0.0],
    [-0.5, 1.0, 0.0, -1.0, 0.5],
    [1.0, -4.0, 6.0, -4.0, 1.0],
])


def hole_radius(grid: GridSpec, decades: float = 12.0) -> float:
    """Smallest b with exp(-r^2 - b^2/r^2) <= 10^-decades exp(-2b) on the +-2 stencil.

    r^2 = sum_k (2 rho_k)^2 bounds |xi|^2 on the stencil (rho_k the frequency
    spacing); the condition (b/r - r)^2 >= decades ln 10 gives b = r (r + c).
    """
    rho = [2.0 * math.pi / (2.0 * L) for L in grid.extent]
    r = math.sqrt(sum((2.0 * p) ** 2 for p in rho))
    return r * (r + math.sqrt(decades * math.log(10.0)))


@dataclass
class S0TestFunction:
    grid: GridSpec
    samples: np.ndarray
    seed: int
    hole: float
    coefficients: dict = field(default_factory=dict)

    def dft(self) -> np.ndarray:
        return np.fft.fftn(self.samples)

    def zero_jet(self) -> float:
        """Max |undivided difference of order <= 4| of the DFT at frequency 0, relative to peak."""
        F = self.dft()
        peak = float(np.max(np.abs(F)))
        D = self.grid.dim
        idx = np.ix_(*[np.arange(-2, 3) % n for n in self.grid.points])
        block = F[idx]
        worst = 0.0
        for alpha in itertools.product(range(5), repeat=D):
            if sum(alpha) > 4:
                continue
            val = block
            for k, a in enumerate(alpha):
                val = np.tensordot(_STENCILS[a], val, axes=([0], [0]))
            # tensordot consumes the leading axis each time, so val is a scalar here
            worst = max(worst, abs(complex(val)))
        return worst / peak if peak > 0 else 0.0

    def check(self, tol: float = S0_TOLERANCE) -> bool:
        return self.zero_jet() <= tol

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.samples))


def make_s0(grid: GridSpec, seed: int, hole: float | None = None, degree: int = 2,
            tol: float = S0_TOLERANCE) -> S0TestFunction:
    """f^(xi) = exp(-|xi|^2 - b^2/|xi|^2) g(xi), g a seeded real polynomial in (i xi).

    The transform is multiplied by exp(i sum_k L_k xi_k) so that f is centred
    at the origin of the grid; real coefficients make f real.
    """
    b = hole_radius(grid) if hole is None else float(hole)
    K = grid.freq_mesh()
    r2 = sum(k * k for k in K)
    rng = np.random.default_rng(seed)
    D = grid.dim
    coeffs = {}
    g = np.zeros(grid.shape, dtype=complex)
    for alpha in itertools.product(range(degree + 1), repeat=D):
        if sum(alpha) > degree:
            continue
        c = float(rng.standard_normal())
        coeffs[alpha] = c
        term = np.full(grid.shape, c, dtype=complex)
        for k, a in enumerate(alpha):
            if a:
                term = term * (1j * K[k]) ** a
        g += term
    with np.errstate(divide="ignore", invalid="ignore"):
        fh = np.exp(-r2 - b * b / r2) * g
    fh[(0,) * D] = 0.0
    phase = np.exp(1j * sum(L * k for L, k in zip(grid.extent, K)))
    f = np.fft.ifftn(fh * phase).real
    f = f / np.max(np.abs(f))
    out = S0TestFunction(grid, f, seed, b, coeffs)
    if not out.check(tol):
        raise ValueError(f"S0 invariant violated ({out.zero_jet():.2e}); increase the hole radius")
    return out
