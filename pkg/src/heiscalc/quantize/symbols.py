"""Homogeneous symbols on the dual of the tangent Lie algebra."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "HomogeneousSymbol", "FunctionSymbol", "PolynomialSymbol", "RadialProfile",
    "sublaplacian_symbol", "pseudo_norm_xi", "model_full_symbols", "FullSymbol",
]


def pseudo_norm_xi(xi: np.ndarray) -> np.ndarray:
    """(xi0^2 + |xi'|^4)^(1/4), homogeneous of degree 1 under (t^2 xi0, t xi')."""
    xi = np.asarray(xi, dtype=float)
    s = np.sum(xi[..., 1:] ** 2, axis=-1)
    return (xi[..., 0] ** 2 + s * s) ** 0.25


class HomogeneousSymbol:
    """p(t^2 xi0, t xi') = t^m p(xi0, xi') for t > 0, evaluated on xi != 0."""

    degree: complex = 0
    size: int = 1
    dim: int = 0
    origin: str = "user"

    def __call__(self, xi):
        raise NotImplementedError

    def evaluate(self, xi: np.ndarray) -> np.ndarray:
        """Vectorized evaluation over the leading axes of ``xi`` (..., dim)."""
        xi = np.asarray(xi, dtype=float)
        flat = xi.reshape(-1, xi.shape[-1])
        vals = [self(v) for v in flat]
        if self.size == 1:
            return np.array(vals, dtype=complex).reshape(xi.shape[:-1])
        return np.array(vals, dtype=complex).reshape(xi.shape[:-1] + (self.size, self.size))

    def radial_profile(self) -> "RadialProfile | None":
        return None

    def polynomial_terms(self):
        return None

    def check_homogeneity(self, samples: int = 50, scales=(2.0, 0.5), seed: int = 0) -> float:
        """Max relative deviation from degree-m homogeneity on random xi."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            xi = rng.standard_normal(self.dim)
            base = np.asarray(self(xi), dtype=complex)
            for t in scales:
                scaled = np.concatenate([[t * t * xi[0]], t * xi[1:]])
                val = np.asarray(self(scaled), dtype=complex)
                ref = t ** self.degree * base
                den = max(float(np.max(np.abs(ref))), 1e-300)
                worst = max(worst, float(np.max(np.abs(val - ref))) / den)
        return worst


class FunctionSymbol(HomogeneousSymbol):
    def __init__(self, fn: Callable, degree, dim: int, size: int = 1, origin: str = "user",
                 vectorized: bool = False):
        self.fn = fn
        self.degree = degree
        self.dim = dim
        self.size = size
        self.origin = origin
        self.vectorized = vectorized

    def __call__(self, xi):
        return self.fn(np.asarray(xi, dtype=float))

    def evaluate(self, xi):
        if self.vectorized:
            return np.asarray(self.fn(np.asarray(xi, dtype=float)), dtype=complex)
        return super().evaluate(xi)


class PolynomialSymbol(HomogeneousSymbol):
    """Scalar polynomial sum c_alpha xi^alpha (weighted-homogeneous)."""

    def __init__(self, dim: int, terms: Mapping[tuple, complex], origin: str = "user"):
        self.dim = dim
        self.terms = {tuple(a): complex(c) for a, c in terms.items() if c != 0}
        degs = {2 * a[0] + sum(a[1:]) for a in self.terms}
        if len(degs) > 1:
            raise ValueError("polynomial symbol must be weighted-homogeneous")
        self.degree = degs.pop() if degs else 0
        self.size = 1
        self.origin = origin

    def __call__(self, xi):
        return complex(self.evaluate(np.asarray(xi, dtype=float)[None, :])[0])

    def evaluate(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape[:-1], dtype=complex)
        for a, c in self.terms.items():
            term = np.full(xi.shape[:-1], c, dtype=complex)
            for k, p in enumerate(a):
                if p:
                    term = term * xi[..., k] ** p
            out += term
        return out

    def polynomial_terms(self):
        return dict(self.terms)


def sublaplacian_symbol(d: int, mu=0.0) -> PolynomialSymbol:
    """|xi'|^2 + mu xi0: principal symbol of -sum X_j^2 - i mu X_0."""
    dim = d + 1
    terms = {}
    for j in range(1, dim):
        a = [0] * dim
        a[j] = 2
        terms[tuple(a)] = 1.0
    if mu != 0:
        a = [0] * dim
        a[0] = 1
        terms[tuple(a)] = complex(mu)
    sym = PolynomialSymbol(dim, terms, origin="sublaplacian")
    sym.degree = 2
    return sym


@dataclass(frozen=True)
class RadialProfile:
    """Symbols of degree -2 depending on xi' only through |xi'|^2.

    p(xi0, xi') = g_sign(tau) / (|xi0| (1 + s)),  s = |xi'|^2/|xi0|,
    tau = s/(1+s), tables g_plus/g_minus on a uniform tau grid on [0, 1].
    At xi0 = 0 the value is g(1)/|xi'|^2.
    """

    g_plus: np.ndarray
    g_minus: np.ndarray

    @property
    def at_infinity(self) -> complex:
        return complex(self.g_plus[-1])

    def value(self, xi0: np.ndarray, s2: np.ndarray) -> np.ndarray:
        xi0 = np.asarray(xi0, dtype=float)
        s2 = np.asarray(s2, dtype=float)
        xi0, s2 = np.broadcast_arrays(xi0, s2)
        out = np.zeros(xi0.shape, dtype=complex)
        a = np.abs(xi0)
        nz = a > 0
        grid = np.linspace(0.0, 1.0, self.g_plus.size)
        s = np.where(nz, s2 / np.where(nz, a, 1.0), 0.0)
        tau = s / (1.0 + s)
        for sign, table in ((1, self.g_plus), (-1, self.g_minus)):
            m = nz & (np.sign(xi0) == sign)
            if np.any(m):
                g = np.interp(tau[m], grid, table.real) + 1j * np.interp(tau[m], grid, table.imag)
                out[m] = g / (a[m] * (1.0 + s[m]))
        zero = ~nz & (s2 > 0)
        out[zero] = self.at_infinity / s2[zero]
        return out


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FullSymbol:
    """sigma_j(x, xi) = xi_j + sum_k c_jk x_k xi0 (c = -L/2), sigma_0 = xi0."""

    index: int
    coeffs: tuple  # c_jk for k = 1..d (empty for index 0)

    def __call__(self, x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.index == 0:
            return xi[..., 0]
        val = xi[..., self.index].copy() if isinstance(xi[..., self.index], np.ndarray) else xi[..., self.index]
        for k, c in enumerate(self.coeffs):
            if c:
                val = val + c * x[..., k + 1] * xi[..., 0]
        return val

    def as_text(self) -> str:
        if self.index == 0:
            return "xi0"
        parts = [f"xi{self.index}"]
        for k, c in enumerate(self.coeffs):
            if c:
                parts.append(f"{c:+g}*x{k + 1}*xi0")
        return " ".join(parts)


def model_full_symbols(chart) -> list[FullSymbol]:
    """Symbols of (1/i) X_j^a: sigma_0 = xi0, sigma_j = xi_j - 1/2 sum_k L_jk x_k xi0.

    ``chart`` is a HeisenbergChart, LeviData or a bare Levi matrix.
    """
    L = getattr(chart, "L", chart)
    Lf = np.array([[float(v) for v in row] for row in L], dtype=float) if len(L) else np.zeros((0, 0))
    d = Lf.shape[0]
    out = [FullSymbol(0, ())]
    for j in range(d):
        out.append(FullSymbol(j + 1, tuple(-0.5 * Lf[j, k] for k in range(d))))
    return out
