"""Pure numpy version of the radial frequency-sum kernel (same contract)."""
from __future__ import annotations

import numpy as np

__all__ = ["radial_apply"]


def _interp(table: np.ndarray, tau: np.ndarray) -> np.ndarray:
    M = table.size - 1
    pos = tau * M
    i = np.minimum(pos.astype(np.int64), M - 1)
    frac = pos - i
    return table[i] + frac * (table[i + 1] - table[i])


def radial_apply(xi0, freq, shape, C, jidx, tw, table_plus, table_minus, F, nthreads=1, chunk=256):
    """out[a, j, b] = sum_m T(j, m) p(xi0_a, |xi'_m + xi0_a C_j|^2) F[a, m, b]."""
    xi0 = np.asarray(xi0, dtype=float)
    shape = tuple(int(s) for s in shape)
    d = len(shape)
    N0, P, B = F.shape
    # primed frequency grid, flattened in C order
    fm = np.meshgrid(*[freq[k, : shape[k]] for k in range(d)], indexing="ij")
    fm = np.stack([x.ravel() for x in fm], axis=1)  # (P, d)
    midx = np.meshgrid(*[np.arange(s) for s in shape], indexing="ij")
    midx = np.stack([x.ravel() for x in midx], axis=1)
    out = np.zeros((N0, P, B), dtype=complex)
    for j0 in range(0, P, chunk):
        js = slice(j0, min(P, j0 + chunk))
        T = np.ones((js.stop - js.start, P), dtype=complex)
        for k in range(d):
            T *= tw[k][jidx[js, k][:, None], midx[None, :, k]]
        for a in range(N0):
            sig = fm[None, :, :] + xi0[a] * C[js, None, :]
            s2 = np.sum(sig * sig, axis=2)
            den = abs(xi0[a]) + s2
            pos = den > 0
            safe = np.where(pos, den, 1.0)
            table = table_plus if xi0[a] >= 0 else table_minus
            p = np.where(pos, _interp(table, np.where(pos, s2 / safe, 0.0)) / safe, 0.0)
            out[a, js, :] = (T * p) @ F[a]
    return out
