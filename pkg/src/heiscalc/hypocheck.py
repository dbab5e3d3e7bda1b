"""Hypoellipticity criteria: the singular set, the sublaplacian condition and
its representation-theoretic counterpart, the degree-wise conditions for
Kohn and horizontal Laplacians, and the contact-Laplacian profile."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, InputError
from .geometry import LeviData
from .linalg import exact_det

__all__ = [
    "SingularSet", "SublaplacianData", "CRSignature", "ConditionReport",
    "OscillatorSpectrum", "singular_set", "check_sublaplacian", "oscillator_spectrum",
    "oscillator_levels", "rockland_sublaplacian", "y_q", "x_k", "horizontal_mu_spectrum",
    "y_pq", "contact_profile", "mu_eigenvalues", "membership_tolerance",
]

MAX_MU_SIZE = 64
MAX_SUBSET_N = 16


def _is_exact(v) -> bool:
    return isinstance(v, (int, Fraction))


def membership_tolerance(trace_abs) -> float:
    return 1e-9 * (1.0 + 0.5 * float(trace_abs))


def _num(v):
    """JSON-friendly scalar: exact rationals as strings, complex as [re, im]."""
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v.numerator)
    if isinstance(v, complex):
        if v.imag == 0:
            return float(v.real)
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionReport:
    criterion: str
    passed: bool
    witnesses: tuple = ()
    margin: float | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.passed and not self.witnesses:
            raise ValueError("a failing report must carry a witness")

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def as_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "verdict": self.verdict,
            "witnesses": [{k: _jsonify(v) for k, v in w.items()} for w in self.witnesses],
            "margin": None if self.margin is None else float(self.margin),
            "details": {k: _jsonify(v) for k, v in self.details.items()},
        }


def _jsonify(v):
    if isinstance(v, dict):
        return {str(k): _jsonify(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonify(x) for x in v]
    return _num(v)


@dataclass(frozen=True)
class SingularSet:
    """Lambda: closed rays beyond +-T (2n < d) or the lattice +-(T + 2 sum alpha_j lambda_j)."""

    kind: str  # "rays" or "lattice"
    lambdas: tuple
    trace_abs: object

    @property
    def threshold(self):
        return self.trace_abs / 2

    @property
    def exact(self) -> bool:
        return _is_exact(self.trace_abs) and all(_is_exact(x) for x in self.lambdas)

    @property
    def tolerance(self) -> float:
        return 0.0 if self.exact else membership_tolerance(self.trace_abs)

    def lattice_values(self, bound) -> list:
        """Positive lattice values T + 2 sum alpha_j lambda_j <= bound (sorted, distinct)."""
        T = self.threshold
        out = set()
        lams = self.lambdas

        def rec(i, acc):
            if T + acc > bound:
                return
            if i == len(lams):
                out.add(T + acc)
                return
            step = 2 * lams[i]
            a = 0
            while T + acc + a * step <= bound:
                rec(i + 1, acc + a * step)
                a += 1
                if a > 10**6:
                    raise ConvergenceError("lattice enumeration too large")

        rec(0, 0 if self.exact else 0.0)
        return sorted(out)

    def elements(self, count: int) -> list:
        """Lowest ``count`` positive lattice elements (lattice kind only)."""
        if self.kind != "lattice":
            raise ValueError("rays kind has no discrete elements")
        if not self.lambdas:
            return [self.threshold]
        bound = self.threshold + 2 * min(self.lambdas) * count
        vals = self.lattice_values(bound)
        return vals[:count]

    def nearest(self, m) -> tuple:
        """(distance, nearest element) for a complex or exact real m."""
        if _is_exact(m):
            re, im = m, 0
        else:
            c = complex(m)
            re, im = c.real, c.imag
        T = self.threshold
        if self.kind == "rays":
            if abs(re) >= T:
                return abs(float(im)), (re if not _is_exact(re) else re)
            edge = T if re >= 0 else -T
            return math.hypot(float(abs(re) - T), float(im)), edge
        a = abs(re)
        vals = self.lattice_values(a + 2 * max(self.lambdas, default=0) + T)
        best = min(vals, key=lambda v: abs(v - a))
        el = best if re >= 0 else -best
        return math.hypot(float(abs(a - best)), float(im)), el

    def contains(self, m) -> tuple:
        """(member?, nearest element).  Exact for rational m and data."""
        dist, el = self.nearest(m)
        if self.exact and _is_exact(m):
            return dist == 0, el
        return dist <= membership_tolerance(self.trace_abs), el

    def as_dict(self, count: int = 6) -> dict:
        out = {
            "kind": self.kind,
            "lambdas": [_num(x) for x in self.lambdas],
            "trace_abs": _num(self.trace_abs),
            "threshold": _num(self.threshold),
        }
        if self.kind == "lattice":
            out["lowest_positive"] = [_num(x) for x in self.elements(count)]
        return out


def singular_set(levi: LeviData, d: int | None = None) -> SingularSet:
    d = levi.d if d is None else d
    if levi.rank > d:
        raise InputError("Levi rank exceeds d")
    kind = "lattice" if levi.rank == d else "rays"
    return SingularSet(kind, tuple(levi.lambdas), levi.trace_abs)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SublaplacianData:
    """Delta = -sum X_j^2 - i mu X_0 + lower order, with mu an r x r matrix."""

    levi: LeviData
    mu: tuple  # r x r, entries Fraction / float / complex
    d: int | None = None
    provenance: str = "user"

    def __post_init__(self):
        r = len(self.mu)
        if r < 1 or any(len(row) != r for row in self.mu):
            raise InputError("mu must be a nonempty square matrix")
        if r > MAX_MU_SIZE:
            raise InputError(f"mu larger than {MAX_MU_SIZE} x {MAX_MU_SIZE}")
        for row in self.mu:
            for v in row:
                if not _is_exact(v) and not np.isfinite(complex(v)):
                    raise InputError("mu has non-finite entries")

    @property
    def dim_d(self) -> int:
        return self.levi.d if self.d is None else self.d

    @property
    def size(self) -> int:
        return len(self.mu)

    @classmethod
    def scalar(cls, levi: LeviData, mu, d=None, provenance="user"):
        return cls(levi, ((mu,),), d, provenance)

    def mu_array(self) -> np.ndarray:
        return np.array([[complex(v) for v in row] for row in self.mu], dtype=complex)

    def exact(self) -> bool:
        return all(_is_exact(v) for row in self.mu for v in row)


def _charpoly_exact(M) -> list:
    """Coefficients of det(t I - M) (highest first) by Faddeev-LeVerrier."""
    n = len(M)
    A = [[Fraction(v) for v in row] for row in M]
    coeffs = [Fraction(1)]
    Mk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        # Mk = A (M_{k-1} + c_{k-1} I)
        prev = [[Mk[i][j] + (coeffs[-1] if i == j else 0) for j in range(n)] for i in range(n)]
        Mk = [[sum(A[i][l] * prev[l][j] for l in range(n)) for j in range(n)] for i in range(n)]
        c = -sum(Mk[i][i] for i in range(n)) / k
        coeffs.append(c)
    return coeffs


def _poly_at(coeffs, x):
    acc = 0
    for c in coeffs:
        acc = acc * x + c
    return acc


def mu_eigenvalues(mu) -> list:
    """Eigenvalues of mu: closed form for r <= 2, LAPACK Hessenberg-QR beyond."""
    r = len(mu)
    if r == 1:
        return [mu[0][0]]
    if r == 2:
        a, b = mu[0]
        c, e = mu[1]
        tr = a + e
        det = a * e - b * c
        disc = tr * tr - 4 * det
        if all(_is_exact(v) for v in (a, b, c, e)):
            if disc >= 0:
                num, den = disc.numerator, disc.denominator
                rn, rd = math.isqrt(num), math.isqrt(den)
                if rn * rn == num and rd * rd == den:
                    s = Fraction(rn, rd)
                    return [(tr - s) / 2, (tr + s) / 2]
        s = np.sqrt(complex(disc))
        return [complex(tr) / 2 - s / 2, complex(tr) / 2 + s / 2]
    M = np.array([[complex(v) for v in row] for row in mu], dtype=complex)
    try:
        return list(np.linalg.eigvals(M))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from exc


def _clean(v):
    if isinstance(v, complex) and abs(v.imag) <= 1e-14 * max(1.0, abs(v.real)):
        return float(v.real)
    if isinstance(v, (np.complexfloating,)):
        return _clean(complex(v))
    return v


def _spectrum_hits_exact(mu, targets: Iterable) -> list:
    """Targets t (exact) with det(t - mu) = 0."""
    cp = _charpoly_exact(mu)
    return [t for t in targets if _poly_at(cp, t) == 0]


def check_sublaplacian(data: SublaplacianData) -> ConditionReport:
    """Sp mu(a) against Lambda_a with the documented tolerance."""
    S = singular_set(data.levi, data.dim_d)
    eigs = [_clean(v) for v in mu_eigenvalues(data.mu)]
    witnesses = []
    margin = math.inf
    exact = S.exact and data.exact()
    if exact:
        # exact eigen-membership via the characteristic polynomial
        bound = sum(abs(v) for row in data.mu for v in row) + S.threshold + 1
        if S.kind == "lattice":
            cands = [s * v for v in S.lattice_values(bound) for s in (1, -1)]
            for t in _spectrum_hits_exact(data.mu, cands):
                witnesses.append({"eigenvalue": t, "lambda_element": t})
        else:
            for t in _spectrum_hits_exact(data.mu, [S.threshold, -S.threshold]):
                witnesses.append({"eigenvalue": t, "lambda_element": t})
    for m in eigs:
        dist, el = S.nearest(m)
        margin = min(margin, dist)
        if exact and _is_exact(m):
            hit = dist == 0
        elif exact and S.kind == "lattice":
            hit = False  # decided exactly above
        else:
            hit = dist <= membership_tolerance(S.trace_abs)
        if hit and not any(w["eigenvalue"] == m for w in witnesses):
            witnesses.append({"eigenvalue": m, "lambda_element": el})
    passed = not witnesses
    return ConditionReport(
        "sublaplacian",
        passed,
        tuple(witnesses),
        margin,
        {"singular_set": S.as_dict(), "spectrum": eigs},
    )


# ---------------------------------------------------------------------------
# oscillator


@dataclass(frozen=True)
class OscillatorSpectrum:
    values: np.ndarray  # Richardson-extrapolated lowest eigenvalues
    coarse: np.ndarray  # raw second-order values on the N-point grid
    fine: np.ndarray  # raw values on the refined grid (2N+1 points)
    h: float
    levels: tuple  # multi-index alpha attached to each value


def _fd_levels(N: int, Lbox: float, count: int):
    """Lowest eigenvalues of -d^2 + xi^2 on N interior points of [-Lbox, Lbox]."""
    h = 2.0 * Lbox / (N + 1)
    xi = -Lbox + h * np.arange(1, N + 1)
    diag = 2.0 / h**2 + xi**2
    off = np.full(N - 1, -1.0 / h**2)
    w = eigh_tridiagonal(
        diag, off, eigvals_only=True, select="i", select_range=(0, count - 1), lapack_driver="stebz"
    )
    return np.sort(w), h


def oscillator_spectrum(
    lambdas: Sequence, count: int = 4, N: int = 512, Lbox: float = 10.0
) -> OscillatorSpectrum:
    """Lowest ``count`` eigenvalues of sum_j lambda_j (-d^2/dxi_j^2 + xi_j^2).

    Each 1-D factor is a second-order finite-difference matrix solved by
    tridiagonal bisection; the tensor-sum spectrum is the set of sums.  The
    returned ``values`` combine the N-point grid and a grid with the step
    halved (2N+1 points) by Richardson extrapolation; the raw second-order
    values of both grids are kept for convergence studies.
    """
    lams = [float(x) for x in lambdas]
    if not lams:
        return OscillatorSpectrum(np.zeros(1), np.zeros(1), np.zeros(1), 0.0, ((),))
    if any(x <= 0 for x in lams):
        raise InputError("oscillator frequencies must be positive")
    per_axis = min(count, N)
    c1, h = _fd_levels(N, Lbox, per_axis)
    f1, _ = _fd_levels(2 * N + 1, Lbox, per_axis)
    e1 = (4.0 * f1 - c1) / 3.0
    combos = []
    for alpha in itertools.product(range(per_axis), repeat=len(lams)):
        combos.append(
            (
                sum(l * e1[a] for l, a in zip(lams, alpha)),
                sum(l * c1[a] for l, a in zip(lams, alpha)),
                sum(l * f1[a] for l, a in zip(lams, alpha)),
                alpha,
            )
        )
    combos.sort(key=lambda c: (c[0], c[3]))
    combos = combos[:count]
    return OscillatorSpectrum(
        np.array([c[0] for c in combos]),
        np.array([c[1] for c in combos]),
        np.array([c[2] for c in combos]),
        h,
        tuple(c[3] for c in combos),
    )


def oscillator_levels(lambdas: Sequence, bound) -> list:
    """Exact levels sum lambda_j (1 + 2 alpha_j) <= bound with their alpha."""
    lams = list(lambdas)
    base = sum(lams, Fraction(0) if all(_is_exact(x) for x in lams) else 0.0)
    out = []

    def rec(i, acc, alpha):
        if acc > bound:
            return
        if i == len(lams):
            out.append((acc, tuple(alpha)))
            return
        a = 0
        while acc + 2 * a * lams[i] <= bound:
            rec(i + 1, acc + 2 * a * lams[i], alpha + [a])
            a += 1

    rec(0, base, [])
    out.sort()
    return out


def rockland_sublaplacian(data: SublaplacianData, crosscheck: bool = True) -> ConditionReport:
    """Rockland condition for the model sublaplacian.

    Condition (ii): the restricted symbol |xi'|^2 on xi' != 0 is invertible.
    Condition (i): for each eigenvalue m of mu and sign s = +-1 the operator
    sum lambda_j(-d^2 + xi^2) + |xi''|^2 + s m must be injective, which fails
    iff -s m lies in the oscillator spectrum (shifted by [0, inf) when the
    Levi form has a kernel).
    """
    lv = data.levi
    d = data.dim_d
    n = lv.n
    kernel = d > 2 * n
    lams = list(lv.lambdas)
    exact = all(_is_exact(x) for x in lams) and data.exact()
    tol = 0.0 if exact else membership_tolerance(lv.trace_abs)

    # (ii): restricted symbol at xi0 = 0 on sample directions
    r = data.size
    rng = np.random.default_rng(0)
    dirs = np.vstack([np.eye(d), rng.standard_normal((8, d))]) if d else np.zeros((0, 0))
    smin = math.inf
    for v in dirs:
        sym = float(v @ v) * np.eye(r)
        smin = min(smin, float(np.linalg.svd(sym, compute_uv=False).min()) / float(v @ v))
    cond_ii = smin > 0

    eigs = [_clean(v) for v in mu_eigenvalues(data.mu)]
    witnesses = []
    base = sum(lams, Fraction(0) if exact else 0.0)
    margin = math.inf
    levels_cache = {}
    for m in eigs:
        for s in (1, -1):
            v = -s * m
            if _is_exact(v):
                vr, vi = v, 0
            else:
                c = complex(v)
                vr, vi = c.real, c.imag
            if kernel:
                gap = base - vr  # > 0 means below the continuous spectrum
                dist = math.hypot(max(float(gap), 0.0), float(vi))
                hit = (vi == 0 and gap <= 0) if (exact and _is_exact(v)) else dist <= tol
                margin = min(margin, dist)
                if hit:
                    witnesses.append(
                        {"eigenvalue": m, "sign": s, "value": v, "level": "continuum", "alpha": None}
                    )
            else:
                bound = (abs(vr) if _is_exact(vr) else abs(float(vr))) + 2 * float(max(lams, default=1)) + float(base)
                key = bound
                if key not in levels_cache:
                    levels_cache[key] = oscillator_levels(lams, bound)
                levs = levels_cache[key]
                best = min(levs, key=lambda t: abs(t[0] - vr)) if levs else (base, ())
                dist = math.hypot(float(abs(best[0] - vr)), float(vi))
                margin = min(margin, dist)
                hit = (vi == 0 and best[0] == vr) if (exact and _is_exact(v)) else dist <= tol
                if hit:
                    witnesses.append(
                        {"eigenvalue": m, "sign": s, "value": best[0], "level": "discrete", "alpha": best[1]}
                    )
    if exact and r > 1 and not kernel:
        # exact check of non-rational eigenvalues against levels
        bound = sum(abs(x) for row in data.mu for x in row) + base + 1
        levs = oscillator_levels(lams, bound)
        cands = [(s, lev) for lev in levs for s in (1, -1)]
        cp = _charpoly_exact(data.mu)
        for s, (val, alpha) in cands:
            m = -s * val
            if _poly_at(cp, m) == 0 and not any(
                w["eigenvalue"] == m and w["sign"] == s for w in witnesses
            ):
                witnesses.append({"eigenvalue": m, "sign": s, "value": val, "level": "discrete", "alpha": alpha})
    if not cond_ii:
        witnesses.append({"condition": "ii", "min_singular_value": smin})

    details = {"condition_ii_min_singular": smin, "spectrum": eigs, "kernel_dim": d - 2 * n}
    if crosscheck and witnesses and n > 0:
        checks = []
        for w in witnesses:
            alpha = w.get("alpha")
            if alpha is None:
                alpha = (0,) * n
            if max(alpha, default=0) >= 32:
                continue
            spec = oscillator_spectrum(
                [float(x) for x in lams], count=max(1, _rank_of(alpha, lams)), N=512, Lbox=10.0
            )
            idx = [i for i, a in enumerate(spec.levels) if tuple(a) == tuple(alpha)]
            if idx:
                exact_val = float(sum(l * (1 + 2 * a) for l, a in zip(lams, alpha)))
                diff = abs(float(spec.values[idx[0]]) - exact_val)
                checks.append({"alpha": list(alpha), "grid": float(spec.values[idx[0]]), "exact": exact_val, "diff": diff})
                if diff > 1e-4:
                    raise ConvergenceError(f"oscillator cross-check failed: {diff:.2e}")
        details["oscillator_crosscheck"] = checks
    return ConditionReport("rockland", not witnesses, tuple(witnesses), margin, details)


def _rank_of(alpha, lams) -> int:
    """How many tensor-sum levels lie at or below the level of alpha (upper bound)."""
    target = sum(float(l) * (1 + 2 * a) for l, a in zip(lams, alpha))
    return len(oscillator_levels([float(l) for l in lams], target + 1e-9))


# ---------------------------------------------------------------------------
# degree-wise conditions


@dataclass(frozen=True)
class CRSignature:
    n: int
    r: int
    kappa: int

    def __post_init__(self):
        if not (0 <= self.kappa <= self.r <= self.n):
            raise InputError("CR signature requires 0 <= kappa <= r <= n")


def y_q(sig: CRSignature, q: int) -> ConditionReport:
    n, r, k = sig.n, sig.r, sig.kappa
    if not 0 <= q <= n:
        raise InputError(f"q must lie in [0, {n}]")
    forbidden = set(range(k, k + n - r + 1)) | set(range(r - k, n - k + 1))
    bad = q in forbidden
    margin = min(abs(q - f) for f in forbidden) if forbidden else None
    wit = ({"degree": q, "forbidden": sorted(forbidden)},) if bad else ()
    return ConditionReport("Y(q)", not bad, wit, margin, {"n": n, "r": r, "kappa": k, "q": q})


def x_k(levi: LeviData, d: int | None, k: int) -> ConditionReport:
    d = levi.d if d is None else d
    r = levi.rank // 2
    if not 0 <= k <= d:
        raise InputError(f"k must lie in [0, {d}]")
    forbidden = range(r, d - r + 1)
    bad = k in forbidden
    wit = ({"degree": k, "forbidden": [r, d - r]},) if bad else ()
    margin = min((abs(k - f) for f in forbidden), default=None)
    return ConditionReport("X(k)", not bad, wit, margin, {"d": d, "r": r, "k": k})


def horizontal_mu_spectrum(levi: LeviData, d: int | None, k: int):
    """Spectrum {sum_J lambda - sum_K lambda} of mu on horizontal k-forms.

    J, K range over subsets of {1..n} with |J| + |K| <= k and
    k - |J| - |K| <= d - 2n.  Returns (sorted list of (value, count), report).
    """
    d = levi.d if d is None else d
    n = levi.n
    if n > MAX_SUBSET_N:
        raise InputError(f"subset enumeration limited to n <= {MAX_SUBSET_N}")
    if not 0 <= k <= d:
        raise InputError(f"k must lie in [0, {d}]")
    lams = list(levi.lambdas)
    exact = all(_is_exact(x) for x in lams)
    zero = Fraction(0) if exact else 0.0
    counts: dict = {}
    idx = range(n)
    for a in range(0, min(n, k) + 1):
        for b in range(0, min(n, k - a) + 1):
            if k - a - b > d - 2 * n:
                continue
            for J in itertools.combinations(idx, a):
                sJ = sum((lams[j] for j in J), zero)
                for K in itertools.combinations(idx, b):
                    val = sJ - sum((lams[j] for j in K), zero)
                    key = val if exact else round(val, 12)
                    counts[key] = counts.get(key, 0) + 1
    spec = sorted(counts.items())
    half = levi.trace_abs / 2
    tol = 0.0 if exact else membership_tolerance(levi.trace_abs)
    wit = []
    for val, _ in spec:
        for target in (half, -half):
            if (val == target) if exact else abs(val - target) <= tol:
                wit.append({"eigenvalue": val, "lambda_element": target, "degree": k})
    margin = min((float(abs(abs(v) - half)) for v, _ in spec), default=None)
    rep = ConditionReport(
        "horizontal_mu", not wit, tuple(wit), margin, {"d": d, "k": k, "spectrum": [v for v, _ in spec]}
    )
    xk = x_k(levi, d, k)
    if xk.passed != rep.passed:
        raise AssertionError(f"horizontal spectrum verdict disagrees with X({k})")
    return spec, rep


def y_pq(sig: CRSignature, p: int, q: int) -> ConditionReport:
    n, r, kap = sig.n, sig.r, sig.kappa
    if not (0 <= p <= n and 0 <= q <= n):
        raise InputError(f"p, q must lie in [0, {n}]")
    bad_set = {(kap + j, r - kap + k) for j in range(n - r + 1) for k in range(n - r + 1)}
    hits = [pq for pq in ((p, q), (q, p)) if pq in bad_set]
    wit = ({"bidegree": [p, q], "forbidden_hit": list(hits[0])},) if hits else ()
    return ConditionReport("Y(p,q)", not hits, wit, None, {"n": n, "r": r, "kappa": kap, "p": p, "q": q})


def contact_profile(n: int, k: int) -> tuple:
    """(order, invertible principal symbol) of the contact Laplacian on k-forms."""
    if not 0 <= k <= 2 * n:
        raise InputError(f"k must lie in [0, {2 * n}]")
    return (4 if k == n else 2, True)


def contact_report(n: int, k: int) -> ConditionReport:
    order, inv = contact_profile(n, k)
    wit = () if inv else ({"degree": k},)
    return ConditionReport("contact", inv, wit, None, {"n": n, "k": k, "order": order})
