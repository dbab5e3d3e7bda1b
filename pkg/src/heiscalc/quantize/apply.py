"""Grid realization of Pf(x) = (2 pi)^-(d+1) int e^{i x.xi} p(sigma(x, xi)) f^(xi) dxi.

sigma(x, xi) = (xi0, xi' - 1/2 xi0 L x') are the full symbols of the model
frame.  On a periodic grid with DFT F of f the realization is

    Pf(x_j) = N^-1 sum_m exp(2 pi i j.m / N) p(sigma(x_j, xi_m)) F_m,

the zero frequency contributing nothing.  Only x' enters sigma, so the xi0
direction is handled by one inverse FFT along axis 0.
"""
from __future__ import annotations

import os
import warnings
from collections import defaultdict

import numpy as np

from ..errors import InputError
from .grid import GridSpec
from .symbols import HomogeneousSymbol, PolynomialSymbol

__all__ = [
    "quantize_apply", "SeparableSymbol", "MultiplierSymbol", "expand_polynomial",
    "backend", "set_backend", "available_backends",
]

try:  # compiled kernel built by setup.py
    from . import _kernel as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None
from . import _fallback

_BACKEND = "compiled" if _compiled is not None and os.environ.get("HEISCALC_NO_EXT") != "1" else "numpy"


def available_backends() -> list:
    return (["compiled"] if _compiled is not None else []) + ["numpy"]


def backend() -> str:
    return _BACKEND


def set_backend(name: str) -> str:
    """Select "compiled" or "numpy"; returns the previous choice."""
    global _BACKEND
    if name not in available_backends():
        raise InputError(f"backend {name!r} unavailable (have {available_backends()})")
    prev, _BACKEND = _BACKEND, name
    return prev


def _levi_float(chart) -> np.ndarray:
    L = getattr(chart, "L", chart)
    if L is None or len(L) == 0:
        return np.zeros((0, 0))
    return np.array([[float(v) for v in row] for row in L], dtype=float)


# ---------------------------------------------------------------------------
# separable symbols


class SeparableSymbol:
    """Finite sum of products u(x) v(xi); u acts on the coordinate mesh, v on the
    frequency mesh (None means 1)."""

    def __init__(self, terms, degree=None):
        self.terms = list(terms)
        self.degree = degree
        self.size = 1

    def apply(self, grid: GridSpec, f: np.ndarray) -> np.ndarray:
        axes = tuple(range(f.ndim - grid.dim, f.ndim))
        F = np.fft.fftn(f, axes=axes)
        F[(Ellipsis,) + (0,) * grid.dim] = 0.0
        X = grid.mesh()
        K = grid.freq_mesh()
        cache = {}
        out = np.zeros(f.shape, dtype=complex)
        for u, v in self.terms:
            key = id(v)
            if key not in cache:
                cache[key] = np.fft.ifftn(F if v is None else v(K) * F, axes=axes)
            part = cache[key]
            out += part if u is None else u(X) * part
        return out


class MultiplierSymbol(SeparableSymbol):
    """xi-independent symbol p(x): multiplication by p on S0 functions."""

    def __init__(self, fn):
        super().__init__([(fn, None)], degree=0)


def _poly_mul(a: dict, b: dict) -> dict:
    out = defaultdict(complex)
    for ka, ca in a.items():
        for kb, cb in b.items():
            out[tuple(x + y for x, y in zip(ka, kb))] += ca * cb
    return dict(out)


def expand_polynomial(sym: PolynomialSymbol, L) -> dict:
    """Expand p(sigma(x, xi)) into {(beta, gamma): c} meaning c x^beta xi^gamma.

    beta and gamma have length d + 1 (beta[0] is always 0).
    """
    Lf = _levi_float(L)
    D = sym.dim
    d = D - 1
    if Lf.shape != (d, d):
        raise InputError("Levi matrix does not match the symbol dimension")

    def mono(beta, gamma, c=1.0):
        return {(tuple(beta) + tuple(gamma)): complex(c)}

    zero = [0] * D
    sig = []
    e0 = list(zero)
    e0[0] = 1
    sig.append(mono(zero, e0))
    for j in range(d):
        gj = list(zero)
        gj[j + 1] = 1
        s = mono(zero, gj)
        for k in range(d):
            c = -0.5 * Lf[j, k]
            if c:
                bk = list(zero)
                bk[k + 1] = 1
                s.update(mono(bk, e0, c))
        sig.append(s)
    total = defaultdict(complex)
    for alpha, c in sym.terms.items():
        acc = {tuple([0] * (2 * D)): complex(c)}
        for k, p in enumerate(alpha):
            for _ in range(p):
                acc = _poly_mul(acc, sig[k])
        for key, v in acc.items():
            total[key] += v
    return {(k[:D], k[D:]): v for k, v in total.items() if v != 0}


def _separable_from_polynomial(sym: PolynomialSymbol, L) -> SeparableSymbol:
    expanded = expand_polynomial(sym, L)
    by_gamma = defaultdict(list)
    for (beta, gamma), c in expanded.items():
        by_gamma[gamma].append((beta, c))
    terms = []
    for gamma, parts in sorted(by_gamma.items()):
        def v(K, gamma=gamma):
            out = np.ones(K[0].shape, dtype=complex)
            for k, p in enumerate(gamma):
                if p:
                    out = out * K[k] ** p
            return out

        def u(X, parts=parts):
            out = np.zeros(X[0].shape, dtype=complex)
            for beta, c in parts:
                t = np.full(X[0].shape, c, dtype=complex)
                for k, p in enumerate(beta):
                    if p:
                        t = t * X[k] ** p
                out += t
            return out

        terms.append((u, v))
    return SeparableSymbol(terms, degree=sym.degree)


# ---------------------------------------------------------------------------
# per-point frequency sums


def _sum_setup(grid: GridSpec, Lf: np.ndarray):
    d = grid.dim - 1
    shape = np.array(grid.points[1:], dtype=np.int64)
    Nmax = int(shape.max())
    freq = np.zeros((d, Nmax))
    tw = np.zeros((d, Nmax, Nmax), dtype=complex)
    for k in range(d):
        n = grid.points[k + 1]
        freq[k, :n] = grid.freq_axis(k + 1)
        idx = np.arange(n)
        tw[k, :n, :n] = np.exp(2j * np.pi * np.outer(idx, idx) / n)
    xm = np.meshgrid(*[grid.axis(k + 1) for k in range(d)], indexing="ij")
    xflat = np.stack([x.ravel() for x in xm], axis=1)  # (P, d)
    C = np.ascontiguousarray(-0.5 * xflat @ Lf.T)  # sigma' = xi' + xi0 C
    jm = np.meshgrid(*[np.arange(n) for n in grid.points[1:]], indexing="ij")
    jidx = np.ascontiguousarray(np.stack([x.ravel() for x in jm], axis=1).astype(np.int64))
    return freq, shape, C, jidx, tw


def _radial_apply(profile, grid: GridSpec, Lf: np.ndarray, fb: np.ndarray, nthreads: int) -> np.ndarray:
    """fb has shape (B,) + grid.shape."""
    B = fb.shape[0]
    N0 = grid.points[0]
    P = int(np.prod(grid.points[1:]))
    F = np.fft.fftn(fb, axes=tuple(range(1, fb.ndim)))
    F = np.ascontiguousarray(np.moveaxis(F.reshape(B, N0, P), 0, -1))  # (N0, P, B)
    xi0 = grid.freq_axis(0)
    freq, shape, C, jidx, tw = _sum_setup(grid, Lf)
    tp = np.ascontiguousarray(profile.g_plus, dtype=complex)
    tm = np.ascontiguousarray(profile.g_minus, dtype=complex)
    kern = _compiled.radial_apply if _BACKEND == "compiled" else _fallback.radial_apply
    G = np.zeros((N0, P, B), dtype=complex)
    for b0 in range(0, B, 16):
        Fb = np.ascontiguousarray(F[:, :, b0: b0 + 16])
        G[:, :, b0: b0 + 16] = kern(xi0, freq, shape, C, jidx, tw, tp, tm, Fb, nthreads)
    G = G / P
    out = np.fft.ifft(G, axis=0)  # (N0, P, B)
    return np.moveaxis(out, -1, 0).reshape((B,) + grid.shape)


def _generic_apply(sym: HomogeneousSymbol, grid: GridSpec, Lf: np.ndarray, fb: np.ndarray) -> np.ndarray:
    """Direct evaluation of p at every (x', xi) pair; practical for small grids."""
    B = fb.shape[0]
    r = getattr(sym, "size", 1)
    N0 = grid.points[0]
    P = int(np.prod(grid.points[1:]))
    d = grid.dim - 1
    gshape = grid.shape
    if r > 1:
        if fb.shape[-1] != r:
            raise InputError("matrix symbols need a trailing component axis of length r")
        gshape = fb.shape[1:-1]
    axes = tuple(range(1, 1 + grid.dim))
    F = np.fft.fftn(fb, axes=axes).reshape((B, N0, P, r))
    xi0 = grid.freq_axis(0)
    freq, shape, C, jidx, tw = _sum_setup(grid, Lf)
    fm = np.meshgrid(*[grid.freq_axis(k + 1) for k in range(d)], indexing="ij")
    fm = np.stack([x.ravel() for x in fm], axis=1)  # (P, d)
    T = np.ones((P, P), dtype=complex)
    mm = np.meshgrid(*[np.arange(n) for n in grid.points[1:]], indexing="ij")
    mflat = np.stack([x.ravel() for x in mm], axis=1)
    for k in range(d):
        T *= tw[k][jidx[:, k][:, None], mflat[None, :, k]]
    G = np.zeros((B, N0, P, r), dtype=complex)
    for a in range(N0):
        sig = np.empty((P, P, d + 1))
        sig[..., 0] = xi0[a]
        sig[..., 1:] = fm[None, :, :] + xi0[a] * C[:, None, :]
        zero = np.all(sig == 0.0, axis=-1)
        safe = np.where(zero[..., None], 1.0, sig)
        vals = np.asarray(sym.evaluate(safe), dtype=complex)
        if r == 1:
            vals = np.where(zero, 0.0, vals)
            G[:, a, :, 0] = np.einsum("jm,bm->bj", T * vals, F[:, a, :, 0])
        else:
            vals = np.where(zero[..., None, None], 0.0, vals)
            G[:, a] = np.einsum("jm,jmrs,bms->bjr", T, vals, F[:, a])
    G = G / P
    out = np.fft.ifft(G, axis=1)
    if r == 1:
        return out.reshape((B,) + grid.shape)
    return out.reshape((B,) + grid.shape + (r,))


def _nyquist_check(sym, grid: GridSpec, fb: np.ndarray):
    """Warn when f carries noticeable energy in the outer frequency shell."""
    F = np.abs(np.fft.fftn(fb[0], axes=tuple(range(grid.dim))))
    peak = float(F.max()) if F.size else 0.0
    if peak == 0.0:
        return
    edge = 0.0
    for k, n in enumerate(grid.points):
        sl = [slice(None)] * grid.dim
        sl[k] = slice(n // 2 - 1, n // 2 + 2)
        edge = max(edge, float(F[tuple(sl)].max()))
    if edge > 1e-2 * peak:
        warnings.warn(
            f"grid may be too coarse: Nyquist-shell amplitude {edge / peak:.1e} of peak", RuntimeWarning
        )


def quantize_apply(p, chart, grid: GridSpec, f: np.ndarray, batch: bool = False,
                   nthreads: int = 1, path: str = "auto") -> np.ndarray:
    """Apply Op(p(sigma(x, xi))) to grid samples ``f``.

    ``p`` is a HomogeneousSymbol, PolynomialSymbol or SeparableSymbol;
    ``chart`` supplies the Levi matrix (HeisenbergChart, LeviData or matrix).
    With ``batch`` the leading axis of ``f`` indexes independent inputs.
    ``path`` forces "separable", "radial" or "generic".
    """
    f = np.asarray(f)
    fb = f if batch else f[None]
    if fb.shape[1: 1 + grid.dim] != grid.shape:
        raise InputError(f"samples of shape {f.shape} do not match grid {grid.shape}")
    Lf = _levi_float(chart)
    if Lf.shape != (grid.dim - 1, grid.dim - 1):
        raise InputError("Levi matrix size does not match the grid dimension")
    if not np.any(fb):
        out = np.zeros(fb.shape, dtype=complex)
        return out if batch else out[0]
    _nyquist_check(p, grid, fb)
    if path == "auto":
        if isinstance(p, SeparableSymbol):
            path = "separable"
        elif isinstance(p, PolynomialSymbol):
            path = "separable"
        elif getattr(p, "size", 1) == 1 and p.radial_profile() is not None:
            path = "radial"
        else:
            path = "generic"
    if path == "separable":
        sep = p if isinstance(p, SeparableSymbol) else _separable_from_polynomial(p, Lf)
        out = sep.apply(grid, fb)
    elif path == "radial":
        prof = p.radial_profile()
        if prof is None:
            raise InputError("symbol has no radial profile")
        out = _radial_apply(prof, grid, Lf, fb.astype(complex), nthreads)
    elif path == "generic":
        out = _generic_apply(p, grid, Lf, fb.astype(complex))
    else:
        raise InputError(f"unknown path {path!r}")
    return out if batch else out[0]
