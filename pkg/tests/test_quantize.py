import json
import warnings

import numpy as np
import pytest

from heiscalc.errors import InputError
from heiscalc.geometry import frame_from_strings, heisenberg_chart, levi_from_matrix
from heiscalc.parametrix import ParametrixEngine, build_parametrix_symbol
from heiscalc.quantize import (
    FunctionSymbol,
    GridSpec,
    MultiplierSymbol,
    PolynomialSymbol,
    available_backends,
    backend,
    load_grid_function,
    make_s0,
    model_full_symbols,
    quantize_apply,
    relative_error,
    save_grid_function,
    set_backend,
    sublaplacian_symbol,
    verify_inverse,
)
from heiscalc.quantize.s0 import hole_radius

from conftest import H3_ROWS

H3 = np.array([[0.0, -2.0], [2.0, 0.0]])

# small grids used for algebraic identities are deliberately under-resolved
coarse_ok = pytest.mark.filterwarnings("ignore:grid may be too coarse")

# 8th-order central difference weights for the first derivative
_D1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


def _fd(f, axis, h):
    out = np.zeros_like(f)
    for s, w in zip(range(-4, 5), _D1):
        if w:
            out += w * np.roll(f, -s, axis=axis)
    return out / h


def _fd_sublaplacian(f, grid, L):
    """-sum_j (X_j^a)^2 f with X_j^a = d_j - 1/2 sum_k L_jk x_k d_0, by finite differences."""
    X = grid.mesh()
    h = grid.spacing
    d = grid.dim - 1
    out = np.zeros_like(f)

    def Xj(g, j):
        res = _fd(g, j + 1, h[j + 1])
        for k in range(d):
            if L[j, k]:
                res = res - 0.5 * L[j, k] * X[k + 1] * _fd(g, 0, h[0])
        return res

    for j in range(d):
        out -= Xj(Xj(f, j), j)
    return out


def test_gridspec_validation():
    with pytest.raises(InputError):
        GridSpec.cube(3, 12, 4.0)
    with pytest.raises(InputError):
        GridSpec.cube(3, 4, 4.0)
    g = GridSpec.cube(2, 8, 4.0)
    assert g.shape == (8, 8) and g.spacing == (1.0, 1.0)
    assert g.axis(0)[0] == -4.0
    np.testing.assert_allclose(g.freq_axis(0), 2 * np.pi * np.fft.fftfreq(8, 1.0))


def test_full_symbols():
    ch = heisenberg_chart(frame_from_strings(H3_ROWS))
    s = model_full_symbols(ch)
    x = np.array([0.3, 1.5, -0.7])
    xi = np.array([2.0, 0.4, -1.1])
    assert s[0](x, xi) == 2.0
    assert s[1](x, xi) == pytest.approx(0.4 + x[2] * 2.0)
    assert s[2](x, xi) == pytest.approx(-1.1 - x[1] * 2.0)
    ab = model_full_symbols(levi_from_matrix(np.zeros((2, 2))))
    assert ab[1](x, xi) == 0.4 and ab[2](x, xi) == -1.1
    x0 = np.zeros(3)
    assert sum(si(x0, xi) ** 2 for si in s[1:]) == pytest.approx(0.4**2 + 1.1**2)


@pytest.mark.parametrize("seed", range(10))
def test_s0_invariant(seed):
    g = GridSpec.cube(3, 16, 8.0)
    f = make_s0(g, seed)
    assert f.check() and f.zero_jet() <= 1e-10
    assert f.norm > 0
    assert np.isrealobj(f.samples)
    assert f.hole == pytest.approx(hole_radius(g))


def test_zero_input():
    g = GridSpec.cube(3, 8, 4.0)
    out = quantize_apply(sublaplacian_symbol(2), H3, g, np.zeros(g.shape))
    assert not np.any(out)


@coarse_ok
def test_linearity():
    g = GridSpec.cube(3, 16, 8.0)
    f1, f2 = make_s0(g, 1).samples, make_s0(g, 2).samples
    sym = build_parametrix_symbol(ParametrixEngine(levi_from_matrix(H3)), 0.0, table_size=2048)
    a, b = 0.7 - 0.2j, -1.3
    for p in (sym, sublaplacian_symbol(2, 0.5)):
        lhs = quantize_apply(p, H3, g, a * f1 + b * f2)
        rhs = a * quantize_apply(p, H3, g, f1) + b * quantize_apply(p, H3, g, f2)
        assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()


@coarse_ok
def test_multiplier_symbol():
    g = GridSpec.cube(3, 16, 8.0)
    f = make_s0(g, 3).samples
    p = lambda X: np.cos(X[0]) + X[1] * X[2]  # noqa: E731
    out = quantize_apply(MultiplierSymbol(p), H3, g, f)
    assert np.abs(out - p(g.mesh()) * f).max() <= 1e-12 * np.abs(f).max()


def test_abelian_laplacian_spectral():
    g = GridSpec.cube(3, 32, 8.0)
    f = make_s0(g, 4).samples
    out = quantize_apply(sublaplacian_symbol(2), np.zeros((2, 2)), g, f)
    want = np.zeros_like(f, dtype=complex)
    for ax in (1, 2):
        k = g.freq_axis(ax)
        shape = [1, 1, 1]
        shape[ax] = -1
        want += np.fft.ifft(k.reshape(shape) ** 2 * np.fft.fft(f, axis=ax), axis=ax)
    assert np.abs(out - want).max() <= 1e-8 * np.abs(want).max()


def test_sublaplacian_matches_finite_differences():
    g = GridSpec.cube(3, 64, 8.0)
    for seed in (0, 1):
        f = make_s0(g, seed).samples
        q = quantize_apply(sublaplacian_symbol(2), H3, g, f)
        fd = _fd_sublaplacian(f, g, H3)
        assert relative_error(q, fd, g.interior(0.5)) <= 1e-3


@coarse_ok
def test_generic_path_matches_separable():
    g = GridSpec.cube(3, 8, 4.0)
    f = make_s0(g, 5).samples
    poly = sublaplacian_symbol(2, 0.3)
    fn = FunctionSymbol(lambda xi: poly.evaluate(xi), 2, 3, vectorized=True)
    a = quantize_apply(poly, H3, g, f)
    b = quantize_apply(fn, H3, g, f, path="generic")
    assert np.abs(a - b).max() <= 1e-10 * np.abs(a).max()


@coarse_ok
def test_radial_path_matches_generic():
    g = GridSpec.cube(3, 8, 4.0)
    f = make_s0(g, 6).samples
    eng = ParametrixEngine(levi_from_matrix(H3))
    sym = build_parametrix_symbol(eng, 0.5, table_size=4096)
    a = quantize_apply(sym, H3, g, f, path="radial")
    prof = sym.radial_profile()
    fn = FunctionSymbol(lambda xi: prof.value(xi[..., 0], np.sum(xi[..., 1:] ** 2, axis=-1)), -2, 3, vectorized=True)
    b = quantize_apply(fn, H3, g, f, path="generic")
    assert np.abs(a - b).max() <= 1e-10 * np.abs(a).max()


@coarse_ok
@pytest.mark.skipif(len(available_backends()) < 2, reason="compiled kernel not built")
def test_backends_agree():
    g = GridSpec.cube(3, 16, 8.0)
    f = np.stack([make_s0(g, s).samples for s in (0, 1)])
    sym = build_parametrix_symbol(ParametrixEngine(levi_from_matrix(H3)), 0.0, table_size=2048)
    prev = backend()
    try:
        set_backend("compiled")
        a = quantize_apply(sym, H3, g, f, batch=True)
        set_backend("numpy")
        b = quantize_apply(sym, H3, g, f, batch=True)
    finally:
        set_backend(prev)
    assert np.abs(a - b).max() <= 1e-12 * np.abs(a).max()


def test_unknown_backend():
    with pytest.raises(InputError):
        set_backend("gpu")


def test_nyquist_warning():
    g = GridSpec.cube(3, 8, 4.0)
    f = np.random.default_rng(0).standard_normal(g.shape)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        quantize_apply(sublaplacian_symbol(2), H3, g, f)
    assert any("Nyquist" in str(w.message) or "grid" in str(w.message) for w in rec)


def test_shape_mismatch():
    g = GridSpec.cube(3, 8, 4.0)
    with pytest.raises(InputError):
        quantize_apply(sublaplacian_symbol(2), H3, g, np.ones((8, 8)))


@coarse_ok
def test_verify_inverse_small_grid():
    g = GridSpec.cube(3, 16, 8.0)
    sym = build_parametrix_symbol(ParametrixEngine(levi_from_matrix(H3)), 0.0, table_size=2048)
    rep = verify_inverse(sym, 0.0, H3, g, seeds=(0,))
    assert np.isfinite(rep.max_error) and rep.max_error < 0.5
    neg = verify_inverse(sublaplacian_symbol(2), 0.0, H3, g, seeds=(0,))
    assert neg.max_error > 0.5
    d = rep.as_dict()
    assert d["max_error"] == rep.max_error and len(d["e1"]) == 1


def test_grid_io_round_trip(tmp_path):
    g = GridSpec((8.0, 4.0), (16, 8))
    rng = np.random.default_rng(1)
    for vals in (rng.standard_normal(g.shape), rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)):
        path = tmp_path / "f.bin"
        save_grid_function(path, vals, g, {"seed": 3})
        back, grid, meta = load_grid_function(path)
        np.testing.assert_array_equal(back, vals)
        assert grid == g and meta["seed"] == 3
        side = json.loads((tmp_path / "f.bin.json").read_text())
        assert side["byte_order"] == "little" and side["order"] == "C" and side["dtype"] == "float64"
        raw = np.fromfile(path, dtype="<f8")
        assert raw.size == vals.size * (2 if np.iscomplexobj(vals) else 1)
