# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-point frequency sum for radially tabulated degree -2 symbols.

For every xi0 slice a and output point j of the primed grid,

    out[a, j, b] = sum_m T(j, m) p(xi0_a, |xi'_m + xi0_a C_j|^2) F[a, m, b],

with T(j, m) = prod_k exp(2 pi i j_k m_k / N_k) and
p(xi0, s2) = g(tau) / (|xi0| + s2), tau = s2 / (|xi0| + s2), g interpolated
linearly on a uniform tau table (value 0 at the zero frequency).
"""
import numpy as np
from cython.parallel import prange

cdef enum:
    MAXB = 16
    MAXD = 16


cdef void _row(Py_ssize_t a, Py_ssize_t j, double xi0, const double[:, ::1] freq,
               const double[:, ::1] C, const long[:, ::1] jidx,
               const double complex[:, :, ::1] tw, const long[::1] shape,
               const double complex[::1] table, const double complex[:, :, ::1] F,
               double complex[:, :, ::1] out, int d, int B) noexcept nogil:
    cdef double complex acc[MAXB]
    cdef double shift[MAXD]
    cdef Py_ssize_t mk[MAXD]
    cdef double complex part[MAXD]
    cdef double spart[MAXD]
    cdef Py_ssize_t P = F.shape[1]
    cdef Py_ssize_t M = table.shape[0] - 1
    cdef double ax0 = xi0 if xi0 >= 0 else -xi0
    cdef Py_ssize_t m, k, b, i
    cdef double s2, den, tau, pos, frac, v
    cdef double complex g, w
    for b in range(B):
        acc[b] = 0
    for k in range(d):
        shift[k] = xi0 * C[j, k]
        mk[k] = 0
    # partial products over the leading axes, refreshed when an index rolls over
    part[0] = 1.0
    spart[0] = 0.0
    for k in range(d - 1):
        v = freq[k, 0] + shift[k]
        spart[k + 1] = spart[k] + v * v
        part[k + 1] = part[k] * tw[k, jidx[j, k], 0]
    for m in range(P):
        v = freq[d - 1, mk[d - 1]] + shift[d - 1]
        s2 = spart[d - 1] + v * v
        den = ax0 + s2
        if den > 0:
            tau = s2 / den
            pos = tau * M
            i = <Py_ssize_t> pos
            if i >= M:
                g = table[M]
            else:
                frac = pos - i
                g = table[i] + frac * (table[i + 1] - table[i])
            w = part[d - 1] * tw[d - 1, jidx[j, d - 1], mk[d - 1]] * (g / den)
            for b in range(B):
                acc[b] = acc[b] + w * F[a, m, b]
        # odometer increment over the primed multi-index (C order)
        k = d - 1
        mk[k] += 1
        while k > 0 and mk[k] == shape[k]:
            mk[k] = 0
            k -= 1
            mk[k] += 1
        if k < d - 1 and m + 1 < P:
            # axes k..d-2 changed: refresh their partial sums/products
            for i in range(k, d - 1):
                v = freq[i, mk[i]] + shift[i]
                spart[i + 1] = spart[i] + v * v
                part[i + 1] = part[i] * tw[i, jidx[j, i], mk[i]]
    for b in range(B):
        out[a, j, b] = acc[b]


def radial_apply(double[::1] xi0, double[:, ::1] freq, long[::1] shape, double[:, ::1] C,
                 long[:, ::1] jidx, double complex[:, :, ::1] tw,
                 double complex[::1] table_plus, double complex[::1] table_minus,
                 double complex[:, :, ::1] F, int nthreads=1):
    """See the module docstring; F and the result have shape (N0, P, B), B <= 16."""
    cdef Py_ssize_t N0 = F.shape[0]
    cdef Py_ssize_t P = F.shape[1]
    cdef int B = F.shape[2]
    cdef int d = C.shape[1]
    if B > MAXB or d > MAXD or d < 1:
        raise ValueError("batch or dimension too large for the compiled kernel")
    out_arr = np.zeros((N0, P, B), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef Py_ssize_t a, j, idx
    cdef Py_ssize_t total = N0 * P
    for idx in prange(total, nogil=True, num_threads=nthreads, schedule="static"):
        a = idx // P
        j = idx % P
        if xi0[a] >= 0:
            _row(a, j, xi0[a], freq, C, jidx, tw, shape, table_plus, F, out, d, B)
        else:
            _row(a, j, xi0[a], freq, C, jidx, tw, shape, table_minus, F, out, d, B)
    return out_arr
