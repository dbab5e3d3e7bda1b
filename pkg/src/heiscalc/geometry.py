"""H-frames, the Levi form, privileged and Heisenberg coordinates, model frames."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import exprparse as ep
from .errors import InputError, SingularFrameError
from .jets import PolyVectorField, WeightedJet, bracket, pushforward
from .linalg import (
    AntisymmetricNormalForm,
    antisymmetric_normal_form,
    as_float_matrix,
    exact_det,
    exact_inverse,
    exact_solve,
    rationalize_lambdas,
)

__all__ = [
    "HFrame", "LeviData", "PrivilegedChart", "HeisenbergChart",
    "load_frame", "frame_from_strings", "levi_matrix", "levi_from_matrix",
    "privileged_chart", "heisenberg_chart", "verify_model_approximation",
    "model_frame", "ApproximationReport",
]

DEFAULT_ORDER = 4


def _to_number(v, exact: bool):
    """Manifest scalar -> Fraction (exact) or float."""
    if isinstance(v, Fraction):
        return v if exact else float(v)
    if isinstance(v, bool):
        raise InputError("boolean is not a coordinate value")
    if isinstance(v, int):
        return Fraction(v) if exact else float(v)
    if isinstance(v, float):
        return Fraction(v) if exact else v
    if isinstance(v, str):
        try:
            return Fraction(v.strip()) if exact else float(Fraction(v.strip()))
        except (ValueError, ZeroDivisionError):
            e = ep.parse(v, 1)
            return ep.evaluate(e, [0], "rational" if exact else "float")
    raise InputError(f"cannot interpret {v!r} as a number")


def as_point(p: Sequence, exact: bool = True) -> tuple:
    return tuple(_to_number(x, exact) for x in p)


@dataclass(frozen=True)
class HFrame:
    """Frame X_0..X_d; ``rows[j][k]`` is the coefficient of d/dx_k in X_j."""

    dim: int
    rows: tuple
    sources: tuple
    lower: tuple | None = None
    upper: tuple | None = None
    sample_points: tuple = ()
    mode: str = "rational"

    @property
    def d(self) -> int:
        return self.dim - 1

    @property
    def exact(self) -> bool:
        return self.mode == "rational"

    def center(self) -> tuple:
        if self.lower is not None and self.upper is not None:
            return tuple((a + b) / 2 for a, b in zip(self.lower, self.upper))
        zero = Fraction(0) if self.exact else 0.0
        return (zero,) * self.dim

    def point(self, p) -> tuple:
        return as_point(p, self.exact)

    def in_domain(self, p) -> bool:
        if self.lower is None or self.upper is None:
            return True
        return all(lo <= x <= hi for x, lo, hi in zip(p, self.lower, self.upper))

    def coeff_matrix(self, x) -> list:
        """B(x) with row j = coefficients of X_j; exact where possible."""
        mode = "rational" if self.exact else "float"
        return [[ep.evaluate(e, x, mode) for e in row] for row in self.rows]

    def check_frame(self, x) -> None:
        B = self.coeff_matrix(x)
        if all(isinstance(v, Fraction) for row in B for v in row):
            if exact_det(B) == 0:
                raise SingularFrameError(f"frame matrix B(x) is singular at x = {_fmt(x)}")
            return
        Bf = as_float_matrix(B)
        s = np.linalg.svd(Bf, compute_uv=False)
        if s[-1] <= 1e-12 * max(s[0], 1.0):
            raise SingularFrameError(f"frame matrix B(x) is numerically singular at x = {_fmt(x)}")

    def jets(self, u, order: int = DEFAULT_ORDER, A_inv=None) -> list:
        """Coefficient jets in the displacement variables y, with x = u + A_inv y."""
        n = self.dim
        exact_u = all(isinstance(c, Fraction) for c in u)
        if A_inv is None:
            A_inv = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        exact_map = exact_u and all(isinstance(v, (int, Fraction)) for r in A_inv for v in r)

        def var_jets(exact):
            out = []
            for i in range(n):
                c = {(0,) * n: u[i] if exact else float(u[i])}
                for k in range(n):
                    e = [0] * n
                    e[k] = 1
                    c[tuple(e)] = A_inv[i][k] if exact else float(A_inv[i][k])
                out.append(WeightedJet(n, order, c))
            return out

        vj_exact = var_jets(True) if exact_map else None
        vj_float = var_jets(False)
        table = []
        for row in self.rows:
            jrow = []
            for e in row:
                if vj_exact is not None and self.exact and ep.is_rational(e):
                    jrow.append(ep.eval_jet_at(e, vj_exact, True).truncate(order))
                else:
                    jrow.append(ep.eval_jet_at(e, vj_float, False).truncate(order))
            table.append(jrow)
        return table

    def vector_fields(self, u, order: int = DEFAULT_ORDER) -> list[PolyVectorField]:
        """X_0..X_d as jets around u in displacement coordinates."""
        return [PolyVectorField(row) for row in self.jets(u, order)]


def _fmt(x) -> str:
    return "(" + ", ".join(str(v) for v in x) + ")"


def frame_from_strings(
    rows: Sequence[Sequence[str]],
    mode: str = "rational",
    lower=None,
    upper=None,
    points: Sequence = (),
) -> HFrame:
    dim = len(rows)
    if dim < 2:
        raise InputError("a Heisenberg frame needs at least two fields (d >= 1)")
    exprs, srcs = [], []
    for j, row in enumerate(rows):
        if len(row) != dim:
            raise InputError(f"frame row X{j} has {len(row)} entries, expected {dim}")
        er, sr = [], []
        for k, s in enumerate(row):
            text = str(s)
            try:
                er.append(ep.parse(text, dim))
            except InputError as exc:
                if hasattr(exc, "message"):
                    raise type(exc)(f"X{j}[{k}]: {exc.message}", exc.line, exc.column, text) from exc
                raise type(exc)(f"X{j}[{k}]: {exc}") from exc
            sr.append(text)
        exprs.append(tuple(er))
        srcs.append(tuple(sr))
    if mode not in ("rational", "float"):
        raise InputError(f"unknown mode {mode!r}")
    exact = mode == "rational"
    lo = as_point(lower, exact) if lower is not None else None
    hi = as_point(upper, exact) if upper is not None else None
    for b, name in ((lo, "lower"), (hi, "upper")):
        if b is not None and len(b) != dim:
            raise InputError(f"domain {name} bound must have {dim} entries")
    pts = tuple(as_point(p, exact) for p in points)
    for p in pts:
        if len(p) != dim:
            raise InputError(f"point {p} must have {dim} coordinates")
    frame = HFrame(dim, tuple(exprs), tuple(srcs), lo, hi, pts, mode)
    frame.check_frame(frame.center())
    for p in pts:
        frame.check_frame(p)
    return frame


def load_frame(manifest: Mapping) -> HFrame:
    """Build and validate an HFrame from a parsed manifest mapping.

    Recognized keys: ``dim`` (number of coordinates, d+1), ``frame``
    (table ``X0..Xd`` of coefficient-string lists, or a list of lists),
    optional ``mode``, ``points``, ``domain.lower`` / ``domain.upper``.
    """
    try:
        dim = int(manifest["dim"])
        fr = manifest["frame"]
    except KeyError as exc:
        raise InputError(f"manifest is missing required key {exc.args[0]!r}") from None
    if isinstance(fr, Mapping):
        try:
            rows = [fr[f"X{j}"] for j in range(dim)]
        except KeyError as exc:
            raise InputError(f"frame is missing field {exc.args[0]}") from None
        extra = set(fr) - {f"X{j}" for j in range(dim)}
        if extra:
            raise InputError(f"frame has unexpected fields {sorted(extra)}")
    else:
        rows = list(fr)
    if len(rows) != dim:
        raise InputError(f"frame has {len(rows)} rows, expected dim = {dim}")
    dom = manifest.get("domain", {}) or {}
    return frame_from_strings(
        rows,
        mode=manifest.get("mode", "rational"),
        lower=dom.get("lower"),
        upper=dom.get("upper"),
        points=manifest.get("points", ()),
    )


# ---------------------------------------------------------------------------
# Levi form


@dataclass(frozen=True)
class LeviData:
    point: tuple
    L: tuple  # d x d, Fraction entries when exact
    lambdas: tuple  # descending positive; Fractions when exactly rational
    rank: int
    trace_abs: object
    O: np.ndarray
    exact: bool

    @property
    def d(self) -> int:
        return len(self.L)

    @property
    def n(self) -> int:
        return self.rank // 2

    @property
    def L_float(self) -> np.ndarray:
        return as_float_matrix(self.L) if self.L else np.zeros((0, 0))

    @property
    def lambdas_float(self) -> tuple:
        return tuple(float(x) for x in self.lambdas)

    @property
    def half_trace(self):
        return self.trace_abs / 2

    def normal_form_matrix(self) -> np.ndarray:
        nf = AntisymmetricNormalForm(self.lambdas_float, self.O, self.rank)
        return nf.normal_matrix(self.d)

    def normal_form_residual(self) -> float:
        if self.d == 0:
            return 0.0
        return float(np.abs(self.O.T @ self.L_float @ self.O - self.normal_form_matrix()).max())

    def summary(self) -> dict:
        return {
            "point": [str(x) for x in self.point],
            "L": [[str(x) for x in row] for row in self.L],
            "lambdas": [str(x) for x in self.lambdas],
            "rank": self.rank,
            "trace_abs": str(self.trace_abs),
            "exact": self.exact,
        }


def levi_from_matrix(L, point=(), exact=None) -> LeviData:
    """Eigen-data for a given antisymmetric Levi matrix."""
    d = len(L)
    if exact is None:
        exact = all(isinstance(v, (int, Fraction)) for row in L for v in row)
    if exact:
        Lt = tuple(tuple(Fraction(v) for v in row) for row in L)
        for i in range(d):
            for j in range(d):
                if Lt[i][j] + Lt[j][i] != 0:
                    raise InputError("Levi matrix is not antisymmetric")
    else:
        Lt = tuple(tuple(float(v) for v in row) for row in L)
        Lf = np.array(Lt) if d else np.zeros((0, 0))
        if d and np.abs(Lf + Lf.T).max() > 1e-12 * max(1.0, np.abs(Lf).max()):
            raise InputError("Levi matrix is not antisymmetric")
    nf = antisymmetric_normal_form(Lt)
    lams = nf.lambdas
    if exact and lams:
        rat = rationalize_lambdas(Lt, lams)
        if rat is not None:
            lams = rat
    if exact and all(isinstance(x, Fraction) for x in lams):
        trace = 2 * sum(lams, Fraction(0))
    else:
        trace = 2.0 * float(sum(float(x) for x in lams))
    return LeviData(tuple(point), Lt, tuple(lams), nf.rank, trace, nf.O, exact)


def levi_matrix(frame: HFrame, a=None) -> LeviData:
    """L_jk with [X_j, X_k] = L_jk X_0 mod H at a."""
    a = frame.center() if a is None else frame.point(a)
    frame.check_frame(a)
    X = frame.vector_fields(a, order=2)
    B = frame.coeff_matrix(a)
    Bt = [[B[r][c] for r in range(frame.dim)] for c in range(frame.dim)]
    exact = all(isinstance(v, Fraction) for row in B for v in row)
    d = frame.d
    L = [[0] * d for _ in range(d)]
    for j in range(1, d + 1):
        for k in range(j + 1, d + 1):
            vec = bracket(X[j], X[k]).at_origin()
            if exact and all(isinstance(v, (int, Fraction)) for v in vec):
                coords = exact_solve(Bt, vec)
                c0 = coords[0]
            else:
                exact = False
                coords = np.linalg.solve(as_float_matrix(Bt), np.array([float(v) for v in vec]))
                c0 = float(coords[0])
            L[j - 1][k - 1] = c0
            L[k - 1][j - 1] = -c0
    if not exact:
        L = [[float(v) for v in row] for row in L]
    else:
        L = [[Fraction(v) for v in row] for row in L]
    return levi_from_matrix(L, a, exact)


# ---------------------------------------------------------------------------
# Coordinates


def model_frame(L) -> list[PolyVectorField]:
    """X_0^a = d0, X_j^a = d_j - 1/2 sum_k L_jk x_k d0 (exact polynomials)."""
    d = len(L)
    n = d + 1
    fields = [PolyVectorField.coordinate(n, 0)]
    half = Fraction(1, 2)
    for j in range(d):
        c0 = {}
        for k in range(d):
            v = L[j][k]
            if v != 0:
                e = [0] * n
                e[k + 1] = 1
                c0[tuple(e)] = -(half * v if isinstance(v, (int, Fraction)) else 0.5 * v)
        comps = [WeightedJet(n, None, c0)] + [
            WeightedJet.constant(n, None, 1 if i == j else 0) for i in range(d)
        ]
        fields.append(PolyVectorField(comps))
    return fields


@dataclass(frozen=True)
class PrivilegedChart:
    u: tuple
    A: tuple
    A_inv: tuple
    frame: HFrame = field(repr=False)

    def psi(self, x) -> tuple:
        diff = [xi - ui for xi, ui in zip(x, self.u)]
        return tuple(sum(a * v for a, v in zip(row, diff)) for row in self.A)

    def psi_inverse(self, y) -> tuple:
        return tuple(ui + sum(a * v for a, v in zip(row, y)) for ui, row in zip(self.u, self.A_inv))

    def frame_jets(self, order: int = DEFAULT_ORDER) -> list[PolyVectorField]:
        """The frame pushed forward by psi_u, as jets at the origin."""
        table = self.frame.jets(self.u, order, self.A_inv)
        n = self.frame.dim
        fields = []
        for row in table:
            comps = []
            for i in range(n):
                acc = WeightedJet.zero(n, None)
                for k in range(n):
                    if self.A[i][k] != 0:
                        acc = acc + row[k] * self.A[i][k]
                comps.append(acc.truncate(order))
            fields.append(PolyVectorField(comps))
        return fields


def privileged_chart(frame: HFrame, u=None) -> PrivilegedChart:
    """psi_u(x) = A(u)(x - u) with A(u) = (B(u)^T)^{-1}."""
    u = frame.center() if u is None else frame.point(u)
    frame.check_frame(u)
    B = frame.coeff_matrix(u)
    n = frame.dim
    Bt = [[B[r][c] for r in range(n)] for c in range(n)]
    if all(isinstance(v, Fraction) for row in B for v in row):
        A = exact_inverse(Bt)
        A_inv = [[Fraction(v) for v in row] for row in Bt]
    else:
        Bt_f = as_float_matrix(Bt)
        A = np.linalg.inv(Bt_f).tolist()
        A_inv = Bt_f.tolist()
    return PrivilegedChart(u, tuple(map(tuple, A)), tuple(map(tuple, A_inv)), frame)


@dataclass(frozen=True)
class HeisenbergChart:
    u: tuple
    privileged: PrivilegedChart = field(repr=False)
    b: tuple  # b[j-1][k-1] = b_jk for j, k = 1..d
    L: tuple
    order: int
    phi_forward: tuple = field(repr=False)
    phi_inverse: tuple = field(repr=False)

    @property
    def A(self):
        return self.privileged.A

    @property
    def dim(self) -> int:
        return len(self.u)

    def quadratic_form(self):
        """Coefficients s_jk = (b_jk + b_kj)/4 of the correction subtracted from x0."""
        d = len(self.b)
        return [[(self.b[j][k] + self.b[k][j]) / 4 for k in range(d)] for j in range(d)]

    def phi(self, y) -> tuple:
        s = self.quadratic_form()
        d = len(s)
        q = sum(s[j][k] * y[j + 1] * y[k + 1] for j in range(d) for k in range(d))
        return (y[0] - q,) + tuple(y[1:])

    def phi_inv(self, z) -> tuple:
        s = self.quadratic_form()
        d = len(s)
        q = sum(s[j][k] * z[j + 1] * z[k + 1] for j in range(d) for k in range(d))
        return (z[0] + q,) + tuple(z[1:])

    def epsilon(self, x) -> tuple:
        return self.phi(self.privileged.psi(x))

    def model_frame(self) -> list[PolyVectorField]:
        return model_frame(self.L)

    def privileged_frame(self) -> list[PolyVectorField]:
        return self.privileged.frame_jets(self.order)

    def leading_frame(self) -> list[PolyVectorField]:
        """X^(u): leading homogeneous parts of the privileged-coordinate frame."""
        Xp = self.privileged_frame()
        return [Xp[0].leading_part(-2)] + [X.leading_part(-1) for X in Xp[1:]]

    def heisenberg_frame(self) -> list[PolyVectorField]:
        """The frame in Heisenberg coordinates, eps_u_* X_j, as jets."""
        return [
            pushforward(X, self.phi_forward, self.phi_inverse).truncate(self.order)
            for X in self.privileged_frame()
        ]

    def pushforward_phi(self, X: PolyVectorField) -> PolyVectorField:
        return pushforward(X, self.phi_forward, self.phi_inverse)


def heisenberg_chart(frame: HFrame, u=None, order: int = DEFAULT_ORDER) -> HeisenbergChart:
    pc = privileged_chart(frame, u)
    Xp = pc.frame_jets(max(order, 2))
    n = frame.dim
    d = n - 1
    b = []
    for j in range(1, n):
        row = []
        for k in range(1, n):
            e = [0] * n
            e[k] = 1
            row.append(Xp[j].comps[0].coeff(tuple(e)))
        b.append(tuple(row))
    L = tuple(tuple(b[k][j] - b[j][k] for k in range(d)) for j in range(d))
    quarter = Fraction(1, 4)
    exact = all(isinstance(v, (int, Fraction)) for r in b for v in r)
    q_coeffs = {}
    for j in range(d):
        for k in range(d):
            s = b[j][k] + b[k][j]
            if s == 0:
                continue
            e = [0] * n
            e[j + 1] += 1
            e[k + 1] += 1
            key = tuple(e)
            q_coeffs[key] = q_coeffs.get(key, 0) + (s * quarter if exact else s / 4)
    Q = WeightedJet(n, None, q_coeffs)
    ident = [WeightedJet.variable(n, None, i) for i in range(n)]
    fwd = (ident[0] - Q,) + tuple(ident[1:])
    inv = (ident[0] + Q,) + tuple(ident[1:])
    return HeisenbergChart(pc.u, pc, tuple(b), L, order, fwd, inv)


@dataclass(frozen=True)
class ApproximationReport:
    t_values: tuple
    residual_x0: tuple
    residual_h: tuple
    slope_x0: float | None
    slope_h: float | None

    @property
    def residuals(self) -> tuple:
        return tuple(max(a, b) for a, b in zip(self.residual_x0, self.residual_h))

    def as_dict(self) -> dict:
        return {
            "t": list(self.t_values),
            "residual_x0": list(self.residual_x0),
            "residual_h": list(self.residual_h),
            "slope_x0": self.slope_x0,
            "slope_h": self.slope_h,
        }


def _slope(ts, rs):
    pts = [(math.log(t), math.log(r)) for t, r in zip(ts, rs) if r > 0 and t > 0]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    if np.ptp(x) == 0:
        return None
    return float(np.polyfit(x, y, 1)[0])


def verify_model_approximation(
    frame: HFrame, u=None, t_list: Sequence = (1.0, 0.5, 0.25, 0.125), order: int = DEFAULT_ORDER
) -> ApproximationReport:
    """Residuals of t^2 delta_t^* eps_* X_0 - X_0^a and t delta_t^* eps_* X_j - X_j^a."""
    chart = heisenberg_chart(frame, u, order)
    Xh = chart.heisenberg_frame()
    Xa = chart.model_frame()
    r0, rh = [], []
    for t in t_list:
        tq = Fraction(t) if isinstance(t, (int, Fraction)) else t
        D0 = Xh[0].dilate_pullback(tq).scale(tq * tq)
        r0.append(float(D0.max_abs_diff(Xa[0])))
        rj = 0.0
        for j in range(1, frame.dim):
            Dj = Xh[j].dilate_pullback(tq).scale(tq)
            rj = max(rj, float(Dj.max_abs_diff(Xa[j])))
        rh.append(rj)
    ts = tuple(float(t) for t in t_list)
    return ApproximationReport(ts, tuple(r0), tuple(rh), _slope(ts, r0), _slope(ts, rh))
