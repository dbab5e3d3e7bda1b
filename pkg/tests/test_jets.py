import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heiscalc.jets import (
    PolyVectorField,
    WeightedJet,
    all_multi_indices,
    bracket,
    jacobi_identity_residual,
    weighted_degree,
)

from conftest import rational


def _random_field(rng, dim, order=None, max_deg=2, density=0.4):
    table = {}
    for k in range(dim):
        coeffs = {}
        for a in all_multi_indices(dim, max_deg):
            if rng.random() < density:
                coeffs[a] = rational(rng)
        table[k] = coeffs
    return PolyVectorField.from_coeffs(dim, table, order)


def _d(dim, k):
    return PolyVectorField.coordinate(dim, k)


def _x(dim, k):
    return WeightedJet.variable(dim, None, k)


def _eval_field(X, p):
    return np.array([float(c.evaluate(p)) for c in X.comps])


def test_weighted_degree():
    assert weighted_degree((1, 0, 0)) == 2
    assert weighted_degree((1, 2, 1)) == 5


def test_truncation_rule():
    x0 = WeightedJet.variable(3, 2, 0)
    assert (x0 * x0).truncate(2).is_zero()
    assert (x0 * x0).truncate(4).coeff((2, 0, 0)) == 1
    x1 = WeightedJet.variable(3, 3, 1)
    assert (x1 ** 3).truncate(3).coeff((0, 3, 0)) == 1
    assert (x1 ** 4).truncate(3).is_zero()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_ring_associativity(seed):
    rng = random.Random(seed)
    jets = []
    for _ in range(3):
        coeffs = {a: rational(rng) for a in all_multi_indices(3, 4) if rng.random() < 0.4}
        jets.append(WeightedJet(3, 4, coeffs))
    a, b, c = jets
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


def test_h3_bracket():
    X1 = _d(3, 1) + _d(3, 0).mul_jet(_x(3, 2))
    X2 = _d(3, 2) - _d(3, 0).mul_jet(_x(3, 1))
    assert bracket(X1, X2) == _d(3, 0).scale(-2)


def test_bracket_antisymmetry_and_self():
    rng = random.Random(1)
    X = _random_field(rng, 3)
    Y = _random_field(rng, 3)
    assert bracket(X, X) == PolyVectorField([WeightedJet.zero(3, None)] * 3)
    assert bracket(X, Y) == -bracket(Y, X)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_bracket_tracks_reduced_order(seed):
    """Truncated inputs give the exact bracket up to the reported order."""
    rng = random.Random(seed)
    X = _random_field(rng, 3, max_deg=4)
    Y = _random_field(rng, 3, max_deg=4)
    B = bracket(X.truncate(3), Y.truncate(3))
    assert B.order is not None and B.order < 3
    assert B.truncate(B.order) == bracket(X, Y).truncate(B.order)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        bracket(_d(3, 0), _d(4, 0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_jacobi_identity(seed):
    rng = random.Random(seed)
    X, Y, Z = (_random_field(rng, 3) for _ in range(3))
    res = jacobi_identity_residual(X, Y, Z)
    assert all(c.is_zero() for c in res.comps)


def _rk4_flow(X, p, s, steps=8):
    h = s / steps
    p = np.array(p, dtype=float)
    for _ in range(steps):
        k1 = _eval_field(X, p)
        k2 = _eval_field(X, p + 0.5 * h * k1)
        k3 = _eval_field(X, p + 0.5 * h * k2)
        k4 = _eval_field(X, p + h * k3)
        p = p + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def _commutator_displacement(X, Y, p, s):
    q = _rk4_flow(X, p, s)
    q = _rk4_flow(Y, q, s)
    q = _rk4_flow(X, q, -s)
    q = _rk4_flow(Y, q, -s)
    return (q - np.asarray(p, dtype=float)) / s**2


def test_bracket_matches_flow_commutator():
    """(phi_Y^-s phi_X^-s phi_Y^s phi_X^s (p) - p) / s^2 = [X, Y](p) + O(s)."""
    rng = random.Random(3)
    nprng = np.random.default_rng(3)
    for _ in range(20):
        X = _random_field(rng, 3)
        Y = _random_field(rng, 3)
        p = nprng.uniform(-0.5, 0.5, 3)
        want = _eval_field(bracket(X, Y), p)
        errs = [np.abs(_commutator_displacement(X, Y, p, s) - want).max() for s in (2e-2, 1e-2)]
        # first-order convergence: halving s roughly halves the error
        assert errs[1] < 0.2 * (1 + np.abs(want).max())
        assert errs[1] <= 0.6 * errs[0] + 1e-9


def test_dilation_examples():
    t = Fraction(3)
    assert _d(3, 0).dilate_pullback(t) == _d(3, 0).scale(t ** -2)
    X = _d(3, 1) + _d(3, 0).mul_jet(_x(3, 2))
    assert X.dilate_pullback(t) == X.scale(1 / t)
    Z = _d(3, 2).mul_jet(_x(3, 1) ** 2)
    assert Z.dilate_pullback(t) == Z.scale(t)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.fractions(Fraction(1, 5), 5), st.fractions(Fraction(-5), Fraction(-1, 5)))
def test_dilation_composition(seed, s, t):
    X = _random_field(random.Random(seed), 3, max_deg=3)
    assert X.dilate_pullback(t).dilate_pullback(s) == X.dilate_pullback(s * t)


def test_leading_part_examples():
    X1 = _d(3, 1) + _d(3, 0).mul_jet(_x(3, 2))
    assert X1.leading_part(-1) == X1
    P = _d(3, 0) + _d(3, 0).mul_jet(_x(3, 1) ** 3)
    assert P.leading_part(-2) == _d(3, 0)
    X2 = _d(3, 2) + _d(3, 0).mul_jet(_x(3, 1))
    assert X2.leading_part(-1) == X2
    with pytest.raises(ValueError):
        _d(3, 0).leading_part(-1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.fractions(Fraction(1, 7), 7))
def test_leading_part_is_dilation_fixed(seed, t):
    rng = random.Random(seed)
    for j, w in ((0, -2), (1, -1), (2, -1)):
        X = _d(3, j) + _random_field(rng, 3, max_deg=3)
        # drop the terms below the target homogeneity so the field is privileged
        parts = X.homogeneity_terms()
        X = sum((p for h, p in parts.items() if h >= w), PolyVectorField([WeightedJet.zero(3, None)] * 3))
        lead = X.leading_part(w)
        assert lead.dilate_pullback(t).scale(t ** (-w)) == lead


def test_model_brackets_from_b():
    """[lead X_j, lead X_k] = (b_kj - b_jk) d/dx0 for privileged fields."""
    rng = random.Random(5)
    for _ in range(10):
        b = [[rational(rng) for _ in range(2)] for _ in range(2)]
        leads = []
        for j in (1, 2):
            X = _d(3, j)
            for k in (1, 2):
                X = X + _d(3, 0).mul_jet(_x(3, k).map_coeffs(lambda c, v=b[j - 1][k - 1]: c * v))
            X = X + _random_field(rng, 3, max_deg=3).homogeneity_terms().get(0, _d(3, 0).scale(0))
            leads.append(X.leading_part(-1))
        want = _d(3, 0).scale(b[1][0] - b[0][1])
        assert bracket(leads[0], leads[1]) == want
