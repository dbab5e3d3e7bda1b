"""Weighted truncated polynomial algebra and polynomial vector fields.

Coordinates are ``x0..x_d`` with weights ``(2, 1, ..., 1)``; the weighted
degree of ``x^alpha`` is ``2*alpha_0 + alpha_1 + ... + alpha_d``.

A jet carries an ``order``: every coefficient of weighted degree <= order is
correct, higher ones are unknown and not stored.  ``order=None`` marks an
exact polynomial (nothing truncated).  Products use the valuation-aware rule
``order(a*b) = min(order(a) + val(b), order(b) + val(a))`` so that exact
zeros and high-valuation factors do not degrade the reliable order.
"""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import product as _iproduct
from typing import Callable, Iterable, Mapping, Sequence

from .errors import DomainError

__all__ = ["WeightedJet", "PolyVectorField", "weights", "weighted_degree"]

_INF = math.inf


def weights(dim: int) -> tuple[int, ...]:
    return (2,) + (1,) * (dim - 1)


def weighted_degree(alpha: Sequence[int]) -> int:
    return 2 * alpha[0] + sum(alpha[1:])


def _ord(o):
    return _INF if o is None else o


def _unord(o):
    return None if o == _INF else int(o)


def _is_zero(c) -> bool:
    return c == 0


class WeightedJet:
    """Sparse weighted jet.  Immutable by convention."""

    __slots__ = ("dim", "order", "coeffs")

    def __init__(self, dim: int, order, coeffs: Mapping[tuple, object] | None = None):
        self.dim = dim
        self.order = order
        lim = _ord(order)
        clean = {}
        if coeffs:
            for a, c in coeffs.items():
                if len(a) != dim:
                    raise ValueError("multi-index length does not match dim")
                if weighted_degree(a) <= lim and not _is_zero(c):
                    clean[tuple(a)] = c
        self.coeffs = clean

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, dim: int, order, value) -> "WeightedJet":
        return cls(dim, order, {(0,) * dim: value})

    @classmethod
    def zero(cls, dim: int, order=None) -> "WeightedJet":
        return cls(dim, order, {})

    @classmethod
    def variable(cls, dim: int, order, index: int, center=0) -> "WeightedJet":
        """The coordinate function ``center + y_index``."""
        e = [0] * dim
        e[index] = 1
        return cls(dim, order, {(0,) * dim: center, tuple(e): 1})

    @classmethod
    def monomial(cls, dim: int, alpha: Sequence[int], coeff=1, order=None) -> "WeightedJet":
        return cls(dim, order, {tuple(alpha): coeff})

    # -- basic queries ------------------------------------------------------
    def valuation(self):
        """Lowest weighted degree present; ``order + 1`` for a truncated zero."""
        if self.coeffs:
            return min(weighted_degree(a) for a in self.coeffs)
        return _ord(self.order) + 1

    def degree(self) -> int:
        return max((weighted_degree(a) for a in self.coeffs), default=-1)

    def coeff(self, alpha: Sequence[int]):
        return self.coeffs.get(tuple(alpha), 0)

    def constant_term(self):
        return self.coeffs.get((0,) * self.dim, 0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def homogeneous_part(self, deg: int) -> "WeightedJet":
        return WeightedJet(
            self.dim, None, {a: c for a, c in self.coeffs.items() if weighted_degree(a) == deg}
        )

    def truncate(self, order) -> "WeightedJet":
        new = min(_ord(order), _ord(self.order))
        return WeightedJet(self.dim, _unord(new), self.coeffs)

    def map_coeffs(self, fn: Callable) -> "WeightedJet":
        return WeightedJet(self.dim, self.order, {a: fn(c) for a, c in self.coeffs.items()})

    def is_exact_rational(self) -> bool:
        return all(isinstance(c, (int, Fraction)) for c in self.coeffs.values())

    def __repr__(self):
        terms = sorted(self.coeffs.items(), key=lambda t: (weighted_degree(t[0]), t[0]))
        body = " + ".join(f"{c}*x^{a}" for a, c in terms) or "0"
        return f"WeightedJet(dim={self.dim}, order={self.order}, {body})"

    def __eq__(self, other):
        if isinstance(other, (int, float, complex, Fraction)):
            other = WeightedJet.constant(self.dim, self.order, other)
        if not isinstance(other, WeightedJet):
            return NotImplemented
        if self.dim != other.dim:
            return False
        lim = min(_ord(self.order), _ord(other.order))
        keys = set(self.coeffs) | set(other.coeffs)
        return all(
            self.coeffs.get(a, 0) == other.coeffs.get(a, 0)
            for a in keys
            if weighted_degree(a) <= lim
        )

    __hash__ = None

    def max_abs_diff(self, other: "WeightedJet") -> float:
        lim = min(_ord(self.order), _ord(other.order))
        keys = set(self.coeffs) | set(other.coeffs)
        return max(
            (
                abs(complex(self.coeffs.get(a, 0)) - complex(other.coeffs.get(a, 0)))
                for a in keys
                if weighted_degree(a) <= lim
            ),
            default=0.0,
        )

    # -- arithmetic ----------------------------------------------------------
    def _coerce(self, other) -> "WeightedJet":
        if isinstance(other, WeightedJet):
            if other.dim != self.dim:
                raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other
        return WeightedJet.constant(self.dim, None, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, 0) + c
        order = min(_ord(self.order), _ord(other.order))
        return WeightedJet(self.dim, _unord(order), out)

    __radd__ = __add__

    def __neg__(self):
        return WeightedJet(self.dim, self.order, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, WeightedJet):
            if _is_zero(other):
                return WeightedJet(self.dim, self.order, {})
            return WeightedJet(self.dim, self.order, {a: c * other for a, c in self.coeffs.items()})
        other = self._coerce(other)
        order = min(_ord(self.order) + other.valuation(), _ord(other.order) + self.valuation())
        lim = order
        out: dict = {}
        for a, c in self.coeffs.items():
            da = weighted_degree(a)
            for b, e in other.coeffs.items():
                if da + weighted_degree(b) > lim:
                    continue
                k = tuple(x + y for x, y in zip(a, b))
                out[k] = out.get(k, 0) + c * e
        return WeightedJet(self.dim, _unord(order), out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, WeightedJet):
            return self * other.reciprocal()
        if _is_zero(other):
            raise DomainError("division of a jet by zero")
        if isinstance(other, int):
            other = Fraction(other)
        return self * (1 / other)

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("jets support integer powers only")
        if k < 0:
            return self.reciprocal() ** (-k)
        result = WeightedJet.constant(self.dim, None, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # -- series composition --------------------------------------------------
    def _split(self):
        c0 = self.constant_term()
        rest = WeightedJet(self.dim, self.order, {a: c for a, c in self.coeffs.items() if any(a)})
        return c0, rest

    def compose_series(self, taylor: Sequence) -> "WeightedJet":
        """Return ``sum_k taylor[k] * (self - c0)^k``.

        ``taylor[k]`` is ``f^{(k)}(c0)/k!``; it must have enough terms for
        the jet order (every nonconstant term has weight >= 1).
        """
        _, rest = self._split()
        order = self.order
        if order is None:
            raise ValueError("series composition needs a finite order")
        out = WeightedJet.constant(self.dim, order, taylor[0])
        power = WeightedJet.constant(self.dim, order, 1)
        for k in range(1, order + 1):
            power = power * rest
            if power.is_zero() and power.order is not None and power.valuation() > order:
                break
            out = out + power * taylor[k]
        return out.truncate(order)

    def _series_len(self) -> int:
        if self.order is None:
            raise ValueError("series composition needs a finite order")
        return self.order + 1

    def reciprocal(self) -> "WeightedJet":
        c0, rest = self._split()
        if _is_zero(c0):
            raise DomainError("reciprocal of a jet with zero constant term")
        if rest.is_zero() and self.order is None:
            return WeightedJet.constant(self.dim, None, _inv(c0))
        if self.order is None:
            raise ValueError("reciprocal of a non-constant exact polynomial needs an order")
        n = self._series_len()
        inv = _inv(c0)
        taylor = [inv * (-inv) ** k for k in range(n)]
        return self.compose_series(taylor)

    def apply(self, name: str) -> "WeightedJet":
        """Compose with an elementary function (sin, cos, exp, log, sqrt)."""
        c0, rest = self._split()
        if rest.is_zero() and self.order is None:
            return WeightedJet.constant(self.dim, None, _scalar_fn(name, c0))
        n = self._series_len()
        c = _to_float(c0)
        if name == "exp":
            e = math.exp(c)
            taylor = [e / math.factorial(k) for k in range(n)]
        elif name == "sin":
            s, co = math.sin(c), math.cos(c)
            cyc = [s, co, -s, -co]
            taylor = [cyc[k % 4] / math.factorial(k) for k in range(n)]
        elif name == "cos":
            s, co = math.sin(c), math.cos(c)
            cyc = [co, -s, -co, s]
            taylor = [cyc[k % 4] / math.factorial(k) for k in range(n)]
        elif name == "log":
            if c <= 0:
                raise DomainError(f"log of non-positive value {c!r}")
            taylor = [math.log(c)] + [(-1) ** (k + 1) / (k * c**k) for k in range(1, n)]
        elif name == "sqrt":
            if c <= 0:
                raise DomainError(f"sqrt jet at non-positive value {c!r}")
            taylor = [math.sqrt(c) * _binom_half(k) / c**k for k in range(n)]
        else:
            raise ValueError(f"unknown function {name!r}")
        return self.compose_series(taylor)

    # -- calculus ------------------------------------------------------------
    def partial(self, i: int) -> "WeightedJet":
        w = weights(self.dim)[i]
        out = {}
        for a, c in self.coeffs.items():
            if a[i]:
                b = list(a)
                b[i] -= 1
                out[tuple(b)] = c * a[i]
        order = None if self.order is None else self.order - w
        return WeightedJet(self.dim, order, out)

    def dilate(self, t) -> "WeightedJet":
        """Pullback ``f(delta_t y)``: monomial x^alpha scales by t^<alpha>."""
        return WeightedJet(
            self.dim, self.order, {a: c * t ** weighted_degree(a) for a, c in self.coeffs.items()}
        )

    def substitute(self, jets: Sequence["WeightedJet"]) -> "WeightedJet":
        """Composition ``self(jets[0], ..., jets[d])``.

        Each substituted jet must have zero constant term unless ``self`` is
        an exact polynomial.
        """
        if len(jets) != self.dim:
            raise ValueError("substitute needs one jet per variable")
        dim = jets[0].dim
        out = WeightedJet.zero(dim, None)
        cache: dict = {}

        def pw(i, k):
            key = (i, k)
            if key not in cache:
                cache[key] = (
                    WeightedJet.constant(dim, None, 1) if k == 0 else pw(i, k - 1) * jets[i]
                )
            return cache[key]

        for a, c in self.coeffs.items():
            term = WeightedJet.constant(dim, None, c)
            for i, k in enumerate(a):
                if k:
                    term = term * pw(i, k)
            out = out + term
        if self.order is not None:
            # coefficients above self.order are unknown; their images start at
            # weighted degree >= (order + 1) * min valuation of the substitutes
            minval = min(j.valuation() for j in jets)
            out = out.truncate(_unord((self.order + 1) * minval - 1))
        return out

    def evaluate(self, point: Sequence):
        total = 0
        for a, c in self.coeffs.items():
            term = c
            for p, k in zip(point, a):
                if k:
                    term = term * p**k
            total = total + term
        return total


def _to_float(c):
    if isinstance(c, complex):
        raise DomainError("elementary functions of complex jets are not supported")
    return float(c)


def _inv(c):
    if isinstance(c, int):
        return Fraction(1, c)
    return 1 / c


def _binom_half(k: int) -> float:
    # binomial(1/2, k)
    out = 1.0
    for j in range(k):
        out *= (0.5 - j) / (j + 1)
    return out


def _scalar_fn(name, c):
    c = _to_float(c)
    if name == "log" and c <= 0:
        raise DomainError(f"log of non-positive value {c!r}")
    if name == "sqrt" and c < 0:
        raise DomainError(f"sqrt of negative value {c!r}")
    return getattr(math, name)(c)


# ---------------------------------------------------------------------------


class PolyVectorField:
    """Vector field ``sum_k comps[k] * d/dx_k`` with jet coefficients."""

    __slots__ = ("dim", "comps")

    def __init__(self, comps: Sequence[WeightedJet]):
        comps = tuple(comps)
        if not comps:
            raise ValueError("empty vector field")
        dim = comps[0].dim
        if len(comps) != dim or any(c.dim != dim for c in comps):
            raise ValueError("vector field needs dim components of matching dim")
        self.dim = dim
        self.comps = comps

    @classmethod
    def coordinate(cls, dim: int, k: int) -> "PolyVectorField":
        """The exact field d/dx_k."""
        return cls(
            [WeightedJet.constant(dim, None, 1 if i == k else 0) for i in range(dim)]
        )

    @classmethod
    def from_coeffs(cls, dim: int, table: Mapping[int, Mapping[tuple, object]], order=None):
        """Build from ``{component: {alpha: coeff}}``."""
        return cls([WeightedJet(dim, order, table.get(k, {})) for k in range(dim)])

    @property
    def order(self):
        """Reliable order: the minimum over components (None if all exact)."""
        return _unord(min(_ord(c.order) for c in self.comps))

    def __repr__(self):
        return f"PolyVectorField({list(self.comps)!r})"

    def __eq__(self, other):
        if not isinstance(other, PolyVectorField) or other.dim != self.dim:
            return NotImplemented
        return all(a == b for a, b in zip(self.comps, other.comps))

    __hash__ = None

    def max_abs_diff(self, other: "PolyVectorField") -> float:
        return max(a.max_abs_diff(b) for a, b in zip(self.comps, other.comps))

    def __add__(self, other):
        self._check(other)
        return PolyVectorField([a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other):
        self._check(other)
        return PolyVectorField([a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self):
        return PolyVectorField([-a for a in self.comps])

    def scale(self, s) -> "PolyVectorField":
        return PolyVectorField([a * s for a in self.comps])

    def mul_jet(self, f: WeightedJet) -> "PolyVectorField":
        return PolyVectorField([f * a for a in self.comps])

    __mul__ = scale
    __rmul__ = scale

    def _check(self, other):
        if not isinstance(other, PolyVectorField):
            raise TypeError("expected a PolyVectorField")
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def truncate(self, order) -> "PolyVectorField":
        return PolyVectorField([c.truncate(order) for c in self.comps])

    def apply(self, f: WeightedJet) -> WeightedJet:
        """Directional derivative X(f)."""
        out = WeightedJet.zero(self.dim, None)
        for k, c in enumerate(self.comps):
            if c.is_zero() and c.order is None:
                continue
            out = out + c * f.partial(k)
        return out

    def at_origin(self) -> tuple:
        return tuple(c.constant_term() for c in self.comps)

    def dilate_pullback(self, t) -> "PolyVectorField":
        """delta_t^* X with delta_t(x) = (t^2 x0, t x').

        The d/dx0 coefficient monomial x^alpha picks up t^(<alpha>-2), the
        d/dx_j coefficient t^(<alpha>-1).
        """
        if t == 0:
            raise ValueError("t must be nonzero")
        if isinstance(t, int):
            t = Fraction(t)
        ws = weights(self.dim)
        comps = []
        for k, c in enumerate(self.comps):
            comps.append(
                WeightedJet(
                    self.dim,
                    c.order,
                    {a: v * t ** (weighted_degree(a) - ws[k]) for a, v in c.coeffs.items()},
                )
            )
        return PolyVectorField(comps)

    def homogeneity_terms(self) -> dict:
        """Map homogeneity -> PolyVectorField part of exactly that homogeneity.

        The term x^alpha d/dx_k has homogeneity <alpha> - w_k.
        """
        ws = weights(self.dim)
        parts: dict = {}
        for k, c in enumerate(self.comps):
            for a, v in c.coeffs.items():
                h = weighted_degree(a) - ws[k]
                parts.setdefault(h, {}).setdefault(k, {})[a] = v
        return {h: PolyVectorField.from_coeffs(self.dim, tab) for h, tab in parts.items()}

    def leading_part(self, weight: int) -> "PolyVectorField":
        """Homogeneous part of homogeneity ``weight`` (the t->0 dilation limit)."""
        if weight not in (-1, -2):
            raise ValueError("weight must be -1 or -2")
        parts = self.homogeneity_terms()
        low = [h for h, p in parts.items() if h < weight]
        if low:
            raise ValueError(
                f"field has terms of homogeneity {min(low)} < {weight}; not in privileged form"
            )
        ws = weights(self.dim)
        needed = max(weight + w for w in ws)
        if self.order is not None and self.order < needed:
            raise ValueError(f"jet order {self.order} too small for leading part of weight {weight}")
        if weight in parts:
            return parts[weight]
        return PolyVectorField([WeightedJet.zero(self.dim, None) for _ in range(self.dim)])


def bracket(X: PolyVectorField, Y: PolyVectorField) -> PolyVectorField:
    """Lie bracket ``[X, Y]_k = X(Y_k) - Y(X_k)`` with tracked reliable order."""
    X._check(Y)
    return PolyVectorField([X.apply(Y.comps[k]) - Y.apply(X.comps[k]) for k in range(X.dim)])


def pushforward(
    X: PolyVectorField, forward: Sequence[WeightedJet], inverse: Sequence[WeightedJet]
) -> PolyVectorField:
    """Pushforward of X under a polynomial map F with polynomial inverse G.

    ``(F_* X)(z) = DF(G(z)) X(G(z))``; both maps are lists of exact jets in
    the displacement variables and must fix the origin.
    """
    dim = X.dim
    comps = []
    for i in range(dim):
        acc = WeightedJet.zero(dim, None)
        for k in range(dim):
            if X.comps[k].is_zero() and X.comps[k].order is None:
                continue
            acc = acc + forward[i].partial(k) * X.comps[k]
        comps.append(acc)
    return PolyVectorField([c.substitute(list(inverse)) for c in comps])


def jacobi_identity_residual(X, Y, Z) -> PolyVectorField:
    return bracket(X, bracket(Y, Z)) + bracket(Y, bracket(Z, X)) + bracket(Z, bracket(X, Y))


def linear_map(A: Sequence[Sequence], shift: Iterable = None, dim: int | None = None) -> list:
    """Exact jets for the affine map ``y -> A y + shift``."""
    n = len(A) if dim is None else dim
    shift = list(shift) if shift is not None else [0] * n
    out = []
    for i in range(n):
        coeffs = {(0,) * n: shift[i]}
        for k in range(n):
            e = [0] * n
            e[k] = 1
            coeffs[tuple(e)] = A[i][k]
        out.append(WeightedJet(n, None, coeffs))
    return out


def all_multi_indices(dim: int, order: int):
    """All alpha with weighted degree <= order (for tests and dense dumps)."""
    ranges = [range(order // 2 + 1)] + [range(order + 1)] * (dim - 1)
    for a in _iproduct(*ranges):
        if weighted_degree(a) <= order:
            yield a
