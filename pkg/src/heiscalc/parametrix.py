"""Evaluation of the degree -2 inverse symbol q_mu of a model sublaplacian.

For xi = (xi0, xi') with eta = O^T xi' split into conjugate pairs
r_j^2 = eta_j^2 + eta_{n+j}^2 and a kernel part k2 = |eta''|^2,

    G(xi, t) = prod_j sech(t lam_j |xi0|)
               * exp(-sum_j tanh(t lam_j |xi0|)/(lam_j |xi0|) r_j^2 - t k2),
    q_mu(xi) = int_0^inf exp(-t mu xi0) G(xi, t) dt.

The integral converges for |Re mu| < lam_1 + ... + lam_n.  It is continued
analytically by rotating the ray t = e^{i theta} s.  Where no admissible
ray exists (nondegenerate Levi form, real mu past the strip) the xi' = 0
values come from the alternating series over oscillator levels.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import psi

from .errors import CapabilityError, ConditionFailure, ConvergenceError, InputError
from .geometry import LeviData
from .hypocheck import ConditionReport, SublaplacianData, check_sublaplacian, mu_eigenvalues, singular_set
from .quadrature import adaptive_gk
from .quantize.symbols import HomogeneousSymbol, RadialProfile

__all__ = [
    "ParametrixEngine", "ParametrixSymbol", "build_parametrix_symbol", "cvz_alternating",
    "alternating_level_sum",
]

_LOG2 = math.log(2.0)
THETA_SERIES_SWITCH = 1.35  # beyond this rotation the series is preferred when available


def cvz_alternating(terms: np.ndarray) -> complex:
    """sum_k (-1)^k a_k from a_0..a_{N-1} (Cohen-Rodriguez Villegas-Zagier)."""
    N = len(terms)
    d = (3.0 + math.sqrt(8.0)) ** N
    d = 0.5 * (d + 1.0 / d)
    b = -1.0
    c = -d
    s = 0.0
    for k in range(N):
        c = b - c
        s = s + c * terms[k]
        b = (k + N) * (k - N) * b / ((k + 0.5) * (k + 1.0))
    return s / d


def _alt_closed(c, lam: float):
    """sum_{a>=0} (-1)^a / (c + (2a+1) lam) via the digamma function."""
    b = (np.asarray(c, dtype=complex) + lam) / (2.0 * lam)
    return 0.5 * (psi((b + 1.0) / 2.0) - psi(b / 2.0)) / (2.0 * lam)


def alternating_level_sum(c: complex, lams: Sequence[float], cvz_terms: int = 40) -> complex:
    """sum_alpha (-1)^|alpha| / (c + sum_j (2 alpha_j + 1) lam_j)."""
    lams = list(lams)
    if len(lams) == 1:
        return complex(_alt_closed(c, lams[0]))
    head_lam = lams[0]
    rest = lams[1:]
    # sum the first terms directly until the shifted argument is safely positive
    K = max(0, int(math.ceil((-complex(c).real - head_lam) / (2.0 * head_lam)))) + 2
    head = sum(
        (-1) ** a * alternating_level_sum(c + (2 * a + 1) * head_lam, rest, cvz_terms) for a in range(K)
    )
    tail_terms = np.array(
        [alternating_level_sum(c + (2 * (K + k) + 1) * head_lam, rest, cvz_terms) for k in range(cvz_terms)]
    )
    return head + (-1) ** K * cvz_alternating(tail_terms)


@dataclass
class ParametrixEngine:
    levi: LeviData
    d: int | None = None
    epsrel: float = 1e-13
    epsabs: float = 1e-16
    limit: int = 4000
    strip_guard: float = 1e-6
    cvz_terms: int = 40
    lams: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d is None:
            self.d = self.levi.d
        self.lams = np.array(self.levi.lambdas_float, dtype=float)
        self.n = len(self.lams)
        self.O = np.asarray(self.levi.O, dtype=float) if self.d else np.zeros((0, 0))
        self.half_trace = float(self.lams.sum())
        self.singular = singular_set(self.levi, self.d)
        self.lattice = self.singular.kind == "lattice"

    # -- integrand ------------------------------------------------------------
    def split(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.d + 1,):
            raise InputError(f"covector must have {self.d + 1} components")
        eta = self.O.T @ xi[1:] if self.d else np.zeros(0)
        n = self.n
        r2 = eta[:n] ** 2 + eta[n: 2 * n] ** 2
        k2 = float(np.sum(eta[2 * n:] ** 2))
        return float(xi[0]), r2, k2

    def _log_g(self, xi0: float, r2: np.ndarray, k2: np.ndarray, t: np.ndarray) -> np.ndarray:
        """log G at nodes t (shape (m,)) for points r2 (P, n), k2 (P,) -> (m, P)."""
        t = np.asarray(t)
        a = abs(xi0)
        out = -t[:, None] * k2[None, :]
        if self.n:
            z = t[:, None] * (self.lams * a)[None, :]  # (m, n), Re z >= 0
            em = np.exp(-2.0 * z)
            logcosh = z + np.log1p(em) - _LOG2
            small = np.abs(z) < 1e-3
            zs = np.where(small, 1.0, z)
            tanhc = np.where(small, 1.0 - z * z / 3.0 + 2.0 * z**4 / 15.0, (1.0 - em) / ((1.0 + em) * zs))
            quad = (t[:, None] * tanhc) @ r2.T  # (m, P)
            out = out - logcosh.sum(axis=1)[:, None] - quad
        return out

    def g_integrand(self, xi, t):
        """G(xi, t) for real or complex t (scalar or array)."""
        xi0, r2, k2 = self.split(xi)
        ts = np.atleast_1d(np.asarray(t))
        if np.any(np.real(ts) < 0):
            raise InputError("t must have nonnegative real part")
        val = np.exp(self._log_g(xi0, r2[None, :], np.array([k2]), ts))[:, 0]
        if np.isrealobj(ts):
            val = val.real
        return val if np.ndim(t) else val[0]

    def decay_constant(self, mu: complex, xi0: float, r2sum: float, k2: float) -> complex:
        """W with |integrand(t)| ~ exp(-Re(t W)) for large real-part t."""
        if xi0 == 0.0:
            return complex(k2 + r2sum)
        return complex(mu) * xi0 + self.half_trace * abs(xi0) + k2

    def _ray_integral(self, mu: complex, xi0: float, r2: np.ndarray, k2: np.ndarray, theta: float,
                      weight: np.ndarray | None = None):
        """int over t = e^{i theta} s of exp(-t mu xi0) G for P points at once."""
        e = cmath.exp(1j * theta)
        W = np.array([self.decay_constant(mu, xi0, float(r.sum()), float(k)) for r, k in zip(r2, k2)])
        kappa = float(np.min((e * W).real))
        if not kappa > 0:
            raise CapabilityError(f"ray angle {theta:.4f} gives no decay (Re e^(i theta) W = {kappa:.3e})")
        amu = complex(mu) * xi0
        scales = [1.0 / kappa]
        if self.n and xi0 != 0.0:
            scales.append(1.0 / (float(self.lams.max()) * abs(xi0) * max(math.cos(theta), 1e-3)))
        gmax = float(np.max(r2.sum(axis=1) + k2)) if len(k2) else 0.0
        if gmax > 0:
            scales.append(1.0 / gmax)
        tail_const = self.n * _LOG2 + 40.0
        s_end = (tail_const + max(0.0, math.log(1.0 / kappa))) / kappa
        s_end = max(s_end, 50.0 * max(scales[1:] or [0.0]))
        s_min = min(scales) / 64.0
        nb = max(2, int(math.ceil(math.log(s_end / s_min) / math.log(4.0))) + 1)
        bps = [0.0] + list(np.geomspace(s_min, s_end, nb))
        w = np.ones(len(k2)) if weight is None else weight

        def f(s):
            t = e * s
            lg = self._log_g(xi0, r2, k2, t)
            return np.exp(-t[:, None] * amu + lg) * e * w[None, :]

        res = adaptive_gk(f, bps, epsabs=self.epsabs, epsrel=self.epsrel, limit=self.limit)
        return res.value, res.error

    # -- scalar evaluation -------------------------------------------------------
    @staticmethod
    def _normalize(xi):
        xi = np.asarray(xi, dtype=float)
        s = float(np.sum(xi[1:] ** 2))
        nu = (xi[0] ** 2 + s * s) ** 0.25
        if nu == 0.0:
            raise InputError("symbols are evaluated only at xi != 0")
        return np.concatenate([[xi[0] / nu**2], xi[1:] / nu]), nu

    def _check_mu(self, mu):
        member, el = self.singular.contains(mu)
        if member:
            rep = ConditionReport(
                "sublaplacian", False, ({"eigenvalue": mu, "lambda_element": el},), 0.0, {}
            )
            raise ConditionFailure(f"mu = {mu} lies in the singular set (element {el})", rep)

    def q_strip(self, mu, xi) -> complex:
        """Direct quadrature on the real half-line (strip |Re mu| < half trace)."""
        xt, nu = self._normalize(xi)
        xi0, r2, k2 = self.split(xt)
        mu = complex(mu)
        if xi0 != 0.0 and not abs(mu.real) < self.half_trace - self.strip_guard:
            raise InputError(
                f"mu = {mu} outside the strip |Re mu| < {self.half_trace - self.strip_guard:g}"
            )
        val, _ = self._ray_integral(mu, xi0, r2[None, :], np.array([k2]), 0.0)
        return complex(val[0]) / nu**2

    def balanced_angle(self, mu, xi) -> float:
        xt, _ = self._normalize(xi)
        xi0, r2, k2 = self.split(xt)
        W = self.decay_constant(mu, xi0, float(r2.sum()), k2)
        return -cmath.phase(W) / 2.0

    def series_applicable(self, xi) -> bool:
        xi = np.asarray(xi, dtype=float)
        scale = float(np.max(np.abs(xi)))
        return self.lattice and xi[0] != 0.0 and float(np.max(np.abs(xi[1:]), initial=0.0)) <= 1e-14 * scale

    def q_series(self, mu, xi) -> complex:
        """Alternating oscillator-level series; lattice case with xi' = 0 only."""
        if not self.series_applicable(xi):
            raise CapabilityError("the level series needs a nondegenerate Levi form and xi' = 0")
        self._check_mu(mu)
        xi0 = float(np.asarray(xi, dtype=float)[0])
        c = complex(mu) * math.copysign(1.0, xi0)
        s = alternating_level_sum(c, self.lams, self.cvz_terms)
        return (2.0 ** self.n) * s / abs(xi0)

    def q_continued(self, mu, xi, theta: float | None = None) -> complex:
        """Analytic continuation in mu by contour rotation (series fallback)."""
        mu = complex(mu)
        xt, nu = self._normalize(xi)
        xi0, r2, k2 = self.split(xt)
        if xi0 == 0.0:
            val, _ = self._ray_integral(mu, xi0, r2[None, :], np.array([k2]), 0.0 if theta is None else theta)
            return complex(val[0]) / nu**2
        self._check_mu(mu.real if mu.imag == 0 else mu)
        W = self.decay_constant(mu, xi0, float(r2.sum()), k2)
        on_cut = abs(W.imag) <= 1e-14 * max(1.0, abs(W)) and W.real <= 0.0
        if theta is None:
            if not on_cut:
                theta = -cmath.phase(W) / 2.0
                if abs(theta) > THETA_SERIES_SWITCH and self.series_applicable(xt):
                    return self.q_series(mu, xt) / nu**2
        else:
            if not abs(theta) < math.pi / 2:
                raise InputError("rotation angle must lie in (-pi/2, pi/2)")
        if on_cut:
            if self.series_applicable(xt):
                return self.q_series(mu, xt) / nu**2
            raise CapabilityError(
                f"mu = {mu} at this covector lies on the real ray past the strip; "
                "continuation is only available at xi' = 0 for a nondegenerate Levi form"
            )
        val, _ = self._ray_integral(mu, xi0, r2[None, :], np.array([k2]), theta)
        return complex(val[0]) / nu**2

    q = q_continued

    # -- matrix case -----------------------------------------------------------------
    def _forbidden_distance(self, z: complex, xi) -> float:
        """Distance from z to Lambda and to the real ray unreachable at this xi."""
        dist, _ = self.singular.nearest(z)
        xt, _ = self._normalize(xi)
        xi0, r2, k2 = self.split(xt)
        if xi0 != 0.0 and not self.series_applicable(xt):
            # unreachable: z * sgn(xi0) <= -(half_trace + k2/|xi0|)
            edge = -(self.half_trace + k2 / abs(xi0)) * math.copysign(1.0, xi0)
            zr = z.real * math.copysign(1.0, xi0)
            er = edge * math.copysign(1.0, xi0)
            if zr <= er:
                dray = abs(z.imag)
            else:
                dray = math.hypot(zr - er, z.imag)
            dist = min(dist, dray)
        return dist

    def contour(self, mu: np.ndarray, xi):
        """Circles (center, radius) enclosing Sp mu and avoiding the forbidden set."""
        eigs = [complex(v) for v in np.linalg.eigvals(mu)]
        dists = [self._forbidden_distance(z, xi) for z in eigs]
        gap = min(dists)
        if not gap > 1e-9 * (1.0 + self.half_trace):
            raise ConditionFailure("spectrum of mu touches the singular or unreachable set")
        # single-linkage clustering of eigenvalues
        thresh = 0.25 * gap
        clusters: list[list[complex]] = []
        for z in eigs:
            hit = [c for c in clusters if min(abs(z - w) for w in c) < thresh]
            merged = [z]
            for c in hit:
                merged += c
                clusters.remove(c)
            clusters.append(merged)
        circles = []
        for c in clusters:
            center = sum(c) / len(c)
            spread = max(abs(z - center) for z in c)
            D = self._forbidden_distance(center, xi)
            if not spread < D:
                raise CapabilityError("eigenvalue cluster too wide for a circular contour")
            circles.append([center, spread, D])
        out = []
        for i, (c, spread, D) in enumerate(circles):
            room = D - spread
            for j, (c2, s2, _) in enumerate(circles):
                if j != i:
                    room = min(room, abs(c - c2) - spread - s2)
            if not room > 0:
                raise CapabilityError("eigenvalue clusters too close for disjoint circles")
            out.append((c, spread + 0.45 * room))
        return out

    def q_matrix(self, mu, xi, tol: float = 1e-8, max_nodes: int = 1024) -> np.ndarray:
        """q_mu for a matrix mu via (1/2 pi i) int_Gamma q_gamma (gamma - mu)^{-1} d gamma."""
        M = np.atleast_2d(np.asarray(mu, dtype=complex))
        r = M.shape[0]
        if M.shape != (r, r):
            raise InputError("mu must be square")
        if r == 1:
            return np.array([[self.q_continued(M[0, 0], xi)]])
        for z in mu_eigenvalues(M.tolist()):
            self._check_mu(z)
        circles = self.contour(M, xi)
        eye = np.eye(r)
        total = np.zeros((r, r), dtype=complex)
        for center, radius in circles:
            cache: dict = {}

            def node_value(k, N):
                key = (k * (max_nodes // N)) % max_nodes
                if key not in cache:
                    phi = 2.0 * math.pi * (key + 0.5) / max_nodes
                    gamma = center + radius * cmath.exp(1j * phi)
                    R = gamma * eye - M
                    if np.linalg.cond(R) > 1e12:
                        raise ConvergenceError("resolvent ill-conditioned on the contour")
                    qg = self.q_continued(gamma, xi)
                    cache[key] = qg * (gamma - center) * np.linalg.inv(R)
                return cache[key]

            prev = None
            N = 8
            while True:
                # nodes at phi = 2 pi (key + 1/2)/max_nodes with key = k * max_nodes/N
                acc = sum(node_value(k, N) for k in range(N)) / N
                if prev is not None and np.max(np.abs(acc - prev)) <= tol * max(1.0, np.max(np.abs(acc))):
                    break
                if 2 * N > max_nodes:
                    raise ConvergenceError("contour quadrature did not converge")
                prev = acc
                N *= 2
            total += acc
        return total

    # -- tables for quantization -----------------------------------------------------
    def radial_ok(self, mu) -> bool:
        if self.n == 0 or self.d != 2 * self.n:
            return False
        if np.ptp(self.lams) > 1e-12 * self.lams.max():
            return False
        return np.ndim(mu) == 0

    def radial_table(self, mu, M: int = 8192) -> RadialProfile:
        """Tables g_pm(tau) = H_pm(s) (1 + s) with H_pm(s) = q(+-1, |xi'|^2 = s)."""
        if not self.radial_ok(mu):
            raise CapabilityError("radial tables need equal Levi eigenvalues and no kernel")
        mu = complex(mu)
        self._check_mu(mu.real if mu.imag == 0 else mu)
        tau = np.arange(M) / M
        s = tau / (1.0 - tau)
        r2 = np.zeros((M, self.n))
        r2[:, 0] = s
        k2 = np.zeros(M)
        tables = []
        for sign in (1.0, -1.0):
            W = self.decay_constant(mu, sign, 0.0, 0.0)
            if abs(W.imag) <= 1e-14 * max(1.0, abs(W)) and W.real <= 0:
                raise CapabilityError("radial table unavailable: mu on the unreachable ray")
            theta = -cmath.phase(W) / 2.0
            vals, _ = self._ray_integral(mu, sign, r2, k2, theta, weight=1.0 + s)
            tables.append(np.concatenate([vals, [1.0 + 0j]]))
        return RadialProfile(tables[0], tables[1])


class ParametrixSymbol(HomogeneousSymbol):
    def __init__(self, engine: ParametrixEngine, mu, table_size: int = 8192):
        self.engine = engine
        self.mu = mu
        self.degree = -2
        self.dim = engine.d + 1
        self.size = 1 if np.ndim(mu) == 0 else np.asarray(mu).shape[0]
        self.origin = "parametrix"
        self.table_size = table_size
        self._profile = None

    def __call__(self, xi):
        if self.size == 1:
            return self.engine.q_continued(complex(self.mu), xi)
        return self.engine.q_matrix(self.mu, xi)

    def radial_profile(self):
        if self.size != 1 or not self.engine.radial_ok(self.mu):
            return None
        if self._profile is None:
            self._profile = self.engine.radial_table(self.mu, self.table_size)
        return self._profile

    def evaluate(self, xi):
        prof = self.radial_profile()
        if prof is not None:
            xi = np.asarray(xi, dtype=float)
            return prof.value(xi[..., 0], np.sum(xi[..., 1:] ** 2, axis=-1))
        return super().evaluate(xi)


def build_parametrix_symbol(engine: ParametrixEngine, mu, table_size: int = 8192) -> ParametrixSymbol:
    """Wrap q_mu as a degree -2 symbol after checking Sp mu against Lambda."""
    mu_m = ((mu,),) if np.ndim(mu) == 0 else tuple(tuple(row) for row in mu)
    rep = check_sublaplacian(SublaplacianData(engine.levi, mu_m, engine.d))
    if not rep.passed:
        raise ConditionFailure("sublaplacian condition fails; no parametrix symbol", rep)
    return ParametrixSymbol(engine, mu, table_size)
