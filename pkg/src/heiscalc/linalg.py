"""Small dense linear algebra: cyclic Jacobi eigensolver, exact rational
elimination, and the block normal form of an antisymmetric matrix."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, SingularFrameError

__all__ = [
    "jacobi_eigh", "exact_solve", "exact_inverse", "exact_rank", "exact_det",
    "AntisymmetricNormalForm", "antisymmetric_normal_form", "rationalize_lambdas",
    "RANK_THRESHOLD",
]

# lambda^2 below RANK_THRESHOLD * ||L||_F^2 counts as zero
RANK_THRESHOLD = 1e-10


def jacobi_eigh(S, tol: float = 1e-15, max_sweeps: int = 100):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns (w, V) with ascending eigenvalues and orthonormal columns.
    """
    A = np.array(S, dtype=float, copy=True)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("square matrix required")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max(initial=0))):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    scale = np.abs(A).max(initial=0.0)
    if n <= 1 or scale == 0.0:
        return np.diag(A).copy(), V
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(A, 1) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/cols p, q
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp = V[:, p].copy()
                Vq = V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        raise ConvergenceError("Jacobi iteration did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w)
    return w[order], V[:, order]


# ---------------------------------------------------------------------------
# exact rational elimination


def _frac_matrix(M) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in M]


def exact_rank(M) -> int:
    A = _frac_matrix(M)
    if not A:
        return 0
    rows, cols = len(A), len(A[0])
    rank = 0
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if A[r][c] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        for r in range(rows):
            if r != rank and A[r][c] != 0:
                f = A[r][c] / A[rank][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[rank])]
        rank += 1
    return rank


def exact_det(M) -> Fraction:
    A = _frac_matrix(M)
    n = len(A)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, n):
            if A[r][c] != 0:
                f = A[r][c] / A[c][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    return det


def exact_solve(M, b) -> list[Fraction]:
    """Solve M x = b exactly (Gauss-Jordan); raises SingularFrameError."""
    A = _frac_matrix(M)
    n = len(A)
    rhs = [Fraction(x) for x in b]
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            raise SingularFrameError("singular matrix in exact solve")
        A[c], A[piv] = A[piv], A[c]
        rhs[c], rhs[piv] = rhs[piv], rhs[c]
        inv = 1 / A[c][c]
        A[c] = [a * inv for a in A[c]]
        rhs[c] *= inv
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [a - f * p for a, p in zip(A[r], A[c])]
                rhs[r] -= f * rhs[c]
    return rhs


def exact_inverse(M) -> list[list[Fraction]]:
    n = len(M)
    cols = [exact_solve(M, [1 if i == j else 0 for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# antisymmetric normal form


@dataclass(frozen=True)
class AntisymmetricNormalForm:
    """O^T L O = [[0, D, 0], [-D, 0, 0], [0, 0, 0]] with D = diag(lambdas)."""

    lambdas: tuple  # descending, positive
    O: np.ndarray
    rank: int

    def normal_matrix(self, d: int) -> np.ndarray:
        n = len(self.lambdas)
        N = np.zeros((d, d))
        for j, lam in enumerate(self.lambdas):
            N[j, n + j] = float(lam)
            N[n + j, j] = -float(lam)
        return N


def antisymmetric_normal_form(L, threshold: float = RANK_THRESHOLD) -> AntisymmetricNormalForm:
    """Eigen-structure of antisymmetric L via Jacobi on the PSD matrix -L^2.

    Columns of O: o_1..o_n, then o_{n+j} = -L o_j / lambda_j, then an
    orthonormal kernel basis.  Vectors within one eigenvalue cluster are
    re-orthonormalized so that the pairing closes up.
    """
    Lf = np.array([[float(x) for x in row] for row in L], dtype=float) if len(L) else np.zeros((0, 0))
    d = Lf.shape[0]
    if d == 0:
        return AntisymmetricNormalForm((), np.zeros((0, 0)), 0)
    S = Lf.T @ Lf  # = -L^2
    w, V = jacobi_eigh(S)
    fro2 = float(np.sum(Lf * Lf))
    cut = threshold * fro2
    # descending order
    w = w[::-1]
    V = V[:, ::-1]
    nonzero = [i for i in range(d) if w[i] > cut] if fro2 > 0 else []
    m = len(nonzero)
    if m % 2:
        raise ConvergenceError("odd number of nonzero eigenvalues of -L^2; matrix not antisymmetric")
    n = m // 2
    # cluster nonzero eigenvalues
    clusters: list[list[int]] = []
    for i in nonzero:
        if clusters and abs(w[clusters[-1][0]] - w[i]) <= 1e-8 * w[nonzero[0]]:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    firsts, seconds, lams = [], [], []
    for cl in clusters:
        if len(cl) % 2:
            raise ConvergenceError("eigenvalue cluster of odd size; increase precision")
        lam = math.sqrt(float(np.mean(w[cl])))
        space = V[:, cl]
        chosen: list[np.ndarray] = []
        partners: list[np.ndarray] = []
        for col in space.T:
            v = col.copy()
            for u in chosen + partners:
                v -= (u @ v) * u
            nv = np.linalg.norm(v)
            if nv < 1e-6:
                continue
            v /= nv
            p = -(Lf @ v) / lam
            for u in chosen + partners:
                p -= (u @ p) * u
            p /= np.linalg.norm(p)
            chosen.append(v)
            partners.append(p)
            if len(chosen) * 2 == len(cl):
                break
        if len(chosen) * 2 != len(cl):
            raise ConvergenceError("failed to pair eigenvectors of -L^2")
        firsts += chosen
        seconds += partners
        lams += [lam] * len(chosen)
    kernel = V[:, m:]
    O = np.column_stack(firsts + seconds + [kernel[:, i] for i in range(kernel.shape[1])]) if d else np.zeros((0, 0))
    # polish kernel block orthonormality
    if kernel.shape[1]:
        Q, _ = np.linalg.qr(O)
        # keep signs of the nondegenerate columns
        for i in range(d):
            if Q[:, i] @ O[:, i] < 0:
                Q[:, i] = -Q[:, i]
        O = Q
    return AntisymmetricNormalForm(tuple(lams), O, 2 * n)


def rationalize_lambdas(L_exact, lambdas, max_den: int = 10**6):
    """Try to replace float lambdas by exact rationals.

    Each candidate r is accepted only if -L^2 - r^2 I is exactly singular,
    and multiplicities match the float clustering.
    """
    d = len(L_exact)
    Lq = _frac_matrix(L_exact)
    S = [[sum(Lq[k][i] * Lq[k][j] for k in range(d)) for j in range(d)] for i in range(d)]
    out = []
    for lam in lambdas:
        r = Fraction(lam).limit_denominator(max_den)
        M = [[S[i][j] - (r * r if i == j else 0) for j in range(d)] for i in range(d)]
        if exact_rank(M) == d:
            return None
        out.append(r)
    return tuple(out)


def as_float_matrix(M) -> np.ndarray:
    return np.array([[float(x) for x in row] for row in M], dtype=float)


def is_exact(M) -> bool:
    return all(isinstance(x, (int, Fraction)) for row in M for x in row)


def matmul_exact(A: Sequence[Sequence], B: Sequence[Sequence]):
    return [
        [sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))]
        for i in range(len(A))
    ]
