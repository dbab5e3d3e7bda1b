"""The tangent group at a point: group law, dilations, pseudo-norm, the
isomorphism onto a standard Heisenberg group times R^k, and irreducible
representation descriptors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .geometry import LeviData, levi_from_matrix

__all__ = [
    "TangentGroup", "GroupIsomorphism", "OperatorTerm", "RepDescriptor",
    "tangent_group", "product", "inverse", "dilate", "pseudo_norm",
    "standard_isomorphism", "representations", "one_dimensional_image",
]


@dataclass(frozen=True)
class TangentGroup:
    levi: LeviData

    @property
    def dim(self) -> int:
        return self.levi.d + 1

    @property
    def L(self):
        return self.levi.L

    def product(self, x, y):
        return product(self.L, x, y)

    def inverse(self, x):
        return inverse(x)

    def dilate(self, t, x):
        return dilate(t, x)

    def pseudo_norm(self, x):
        return pseudo_norm(x)

    def product_array(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Vectorized product for float arrays of shape (..., d+1)."""
        Lf = self.levi.L_float
        out = x + y
        out[..., 0] += 0.5 * np.einsum("...j,jk,...k->...", x[..., 1:], Lf, y[..., 1:])
        return out


def tangent_group(levi_or_L) -> TangentGroup:
    if isinstance(levi_or_L, LeviData):
        return TangentGroup(levi_or_L)
    return TangentGroup(levi_from_matrix(levi_or_L))


def product(L, x, y):
    """x.y = (x0 + y0 + 1/2 sum L_jk x_j y_k, x' + y')."""
    d = len(L)
    if len(x) != d + 1 or len(y) != d + 1:
        raise ValueError(f"points must have {d + 1} coordinates")
    s = 0
    for j in range(d):
        if x[j + 1] == 0:
            continue
        row = L[j]
        for k in range(d):
            if row[k] != 0:
                s += row[k] * x[j + 1] * y[k + 1]
    half = Fraction(1, 2) if isinstance(s, (int, Fraction)) else 0.5
    return (x[0] + y[0] + half * s,) + tuple(a + b for a, b in zip(x[1:], y[1:]))


def inverse(x):
    return tuple(-v for v in x)


def dilate(t, x):
    return (t * t * x[0],) + tuple(t * v for v in x[1:])


def pseudo_norm(x) -> float:
    s = sum(float(v) ** 2 for v in x[1:])
    return (float(x[0]) ** 2 + s * s) ** 0.25


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupIsomorphism:
    """Phi(x) = (x0, M x') from the standard group onto G.

    The standard group has [e_j, e_{n+j}] = -2 e_0 for j = 1..n and an
    abelian R^(d-2n) factor.
    """

    M: np.ndarray
    M_inv: np.ndarray
    L_source: np.ndarray  # Levi matrix of the standard group
    L_target: np.ndarray

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        return np.concatenate([[x[0]], self.M @ x[1:]])

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        return np.concatenate([[y[0]], self.M_inv @ y[1:]])

    def homomorphism_defect(self, pairs) -> float:
        worst = 0.0
        for x, y in pairs:
            lhs = self.forward(np.asarray(product(self.L_source, tuple(x), tuple(y)), dtype=float))
            rhs = np.asarray(
                product(self.L_target, tuple(self.forward(x)), tuple(self.forward(y))), dtype=float
            )
            scale = 1.0 + np.abs(lhs).max()
            worst = max(worst, float(np.abs(lhs - rhs).max() / scale))
        return worst


def standard_levi(n: int, d: int) -> np.ndarray:
    L = np.zeros((d, d))
    for j in range(n):
        L[j, n + j] = -2.0
        L[n + j, j] = 2.0
    return L


def standard_isomorphism(G: TangentGroup) -> GroupIsomorphism:
    """Orthogonal normal-form change composed with scalings sqrt(2/lambda_j)."""
    lv = G.levi
    d = lv.d
    n = lv.n
    Lt = lv.L_float
    if n == 0:
        eye = np.eye(d)
        return GroupIsomorphism(eye, eye, np.zeros((d, d)), Lt)
    lam = np.array(lv.lambdas_float)
    s = np.sqrt(2.0 / lam)
    scal = np.ones(d)
    scal[:n] = s
    scal[n: 2 * n] = -s
    M = lv.O @ np.diag(scal)
    M_inv = np.diag(1.0 / scal) @ lv.O.T
    return GroupIsomorphism(M, M_inv, standard_levi(n, d), Lt)


# ---------------------------------------------------------------------------
# representations


@dataclass(frozen=True)
class OperatorTerm:
    """``kind``: "const" (scalar), "mult" (multiplication by coefficient * xi_index)
    or "deriv" (coefficient * d/dxi_index).  Coefficients are complex."""

    kind: str
    coefficient: complex
    index: int | None = None

    def as_dict(self) -> dict:
        c = complex(self.coefficient)
        return {"kind": self.kind, "coefficient": [c.real, c.imag], "index": self.index}


@dataclass(frozen=True)
class RepDescriptor:
    """Generator of a family of irreducible representations.

    ``images`` are the verbatim constants in the standard-group basis,
    ``normalized_images`` act on the normal-form frame of G and satisfy
    the homomorphism property exactly.  ``defect_ratio`` is
    [dpi X_j, dpi X_{n+j}] / dpi([X_j, X_{n+j}]) for the verbatim images.
    """

    kind: str  # "infinite" or "one-dimensional"
    sign: int  # +1 / -1 for infinite kind, 0 otherwise
    n: int
    free_params: int
    lambdas: tuple
    images: dict = field(default_factory=dict)
    normalized_images: dict = field(default_factory=dict)
    defect_ratio: complex | None = None

    def normalized_defect(self) -> complex:
        """dpi([X_j,X_{n+j}]) - [dpi X_j, dpi X_{n+j}] for the normalized images (0)."""
        if self.kind != "infinite" or self.n == 0:
            return 0j
        worst = 0j
        for j in range(self.n):
            a = self.normalized_images[j + 1]
            b = self.normalized_images[self.n + j + 1]
            comm = _commutator_const(a, b)
            target = self.lambdas[j] * self.normalized_images[0].coefficient
            if abs(comm - target) > abs(worst):
                worst = comm - target
        return worst

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sign": self.sign,
            "free_params": self.free_params,
            "images": {str(k): v.as_dict() for k, v in self.images.items()},
            "normalized_images": {str(k): v.as_dict() for k, v in self.normalized_images.items()},
            "defect_ratio": None
            if self.defect_ratio is None
            else [complex(self.defect_ratio).real, complex(self.defect_ratio).imag],
        }


def _commutator_const(a: OperatorTerm, b: OperatorTerm) -> complex:
    """[a, b] for a = alpha d/dxi_i, b = beta xi_i (mult): alpha*beta."""
    if a.kind == "deriv" and b.kind == "mult" and a.index == b.index:
        return complex(a.coefficient) * complex(b.coefficient)
    if a.kind == "mult" and b.kind == "deriv" and a.index == b.index:
        return -complex(a.coefficient) * complex(b.coefficient)
    return 0j


def representations(G: TangentGroup) -> list[RepDescriptor]:
    lv = G.levi
    d, n = lv.d, lv.n
    lam = lv.lambdas_float
    out = []
    if n > 0:
        for sign in (1, -1):
            # verbatim constants in the standard basis, with lambda = sign
            lam_abs = 1.0
            images = {0: OperatorTerm("const", 1j * sign * lam_abs)}
            for j in range(n):
                images[j + 1] = OperatorTerm("deriv", lam_abs, j)
                images[n + j + 1] = OperatorTerm("mult", 1j * sign, j)
            for k in range(2 * n, d):
                images[k + 1] = OperatorTerm("mult", 1j * sign, k)
            comm = _commutator_const(images[1], images[n + 1])
            # standard basis: [X_j, X_{n+j}] = -2 X_0
            defect_ratio = comm / (-2 * images[0].coefficient)
            norm = {0: OperatorTerm("const", 1j * sign)}
            for j in range(n):
                r = math.sqrt(lam[j])
                norm[j + 1] = OperatorTerm("deriv", r, j)
                norm[n + j + 1] = OperatorTerm("mult", 1j * sign * r, j)
            for k in range(2 * n, d):
                norm[k + 1] = OperatorTerm("mult", 1j * sign, k)
            out.append(
                RepDescriptor("infinite", sign, n, d - 2 * n, tuple(lam), images, norm, defect_ratio)
            )
    one = {0: OperatorTerm("const", 0j)}
    for k in range(d):
        one[k + 1] = OperatorTerm("mult", 1j, k)
    out.append(RepDescriptor("one-dimensional", 0, n, d, tuple(lam), one, dict(one), None))
    return out


def one_dimensional_image(symbol, xi_prime: Sequence[float]):
    """pi^xi applied to a homogeneous symbol: p(0, xi')."""
    return symbol(np.concatenate([[0.0], np.asarray(xi_prime, dtype=float)]))
