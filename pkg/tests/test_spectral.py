import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beltrami_torus.spectral import (
    InvalidInputError,
    PeriodicField,
    PeriodicGrid,
    SpectralField,
    Symbol,
    apply_symbol,
    l2_norm,
    multiply_dealiased,
    sobolev_norm,
    to_physical,
    to_spectral,
    trig_eval,
    trig_eval_tensor,
)

from conftest import random_field


def test_grid_invariants():
    for bad in (3, 5, 2, 0, -4):
        with pytest.raises(InvalidInputError):
            PeriodicGrid(bad)
    with pytest.raises(InvalidInputError):
        PeriodicGrid(8, 0.0)
    g = PeriodicGrid(8)
    assert g.spacing == pytest.approx(2 * np.pi / 8)


def test_field_rejects_bad_samples():
    g = PeriodicGrid(4)
    with pytest.raises(InvalidInputError):
        PeriodicField(g, np.ones(15))
    v = np.ones((4, 4), dtype=complex)
    v[1, 2] = np.nan
    with pytest.raises(InvalidInputError):
        PeriodicField(g, v)


def test_constant_field_spectrum():
    g = PeriodicGrid(8)
    s = to_spectral(PeriodicField.constant(g, 1.0))
    expected = np.zeros((8, 8))
    expected[0, 0] = 1
    assert np.allclose(s.coeffs, expected, atol=1e-15)


def test_single_eigenfunction():
    g = PeriodicGrid(8)
    s = to_spectral(PeriodicField.from_function(g, lambda x1, x2: np.exp(1j * x1)))
    assert abs(s.coeff(1, 0) - 1) < 1e-14
    rest = s.coeffs.copy()
    rest[1, 0] = 0
    assert np.abs(rest).max() < 1e-14


def test_delta_modes_to_physical():
    g = PeriodicGrid(8)
    c = np.zeros((8, 8), dtype=complex)
    c[0, 0] = 2 - 1j
    assert np.allclose(to_physical(SpectralField(g, c)).values, 2 - 1j)
    c = np.zeros((8, 8), dtype=complex)
    c[0, 1] = 1
    x1, x2 = g.mesh()
    assert np.allclose(to_physical(SpectralField(g, c)).values, np.exp(1j * x2), atol=1e-14)


def test_to_physical_grid_mismatch():
    s = SpectralField(PeriodicGrid(8), np.zeros((8, 8)))
    with pytest.raises(InvalidInputError):
        to_physical(s, PeriodicGrid(8, 1.0))


def test_roundtrip_and_parseval(rng):
    g = PeriodicGrid(32)
    for _ in range(10):
        v = PeriodicField(g, random_field(g, rng, band_limited=False))
        s = to_spectral(v)
        back = to_physical(s)
        assert l2_norm(back - v) <= 1e-12 * l2_norm(v)
        assert abs(s.l2() - l2_norm(v)) <= 1e-12 * l2_norm(v)


def test_symbol_examples():
    g = PeriodicGrid(8)
    dz = Symbol.DZ.multiplier(g)
    u = Symbol.U.multiplier(g)
    assert dz[1, 0] == 0.5j
    assert u[0, 1] == -1
    assert u[0, 0] == 1
    const = to_spectral(PeriodicField.constant(g, 3.0))
    assert np.abs(apply_symbol(const, Symbol.DZBAR).coeffs).max() == 0


def test_period_rescales_multipliers():
    g = PeriodicGrid(8, period=np.pi)
    assert Symbol.DZ.multiplier(g)[1, 0] == pytest.approx(1j)


def test_symbol_table_identities():
    for n in (8, 10, 64):
        g = PeriodicGrid(n)
        lam = Symbol.DZ.multiplier(g)
        lamp = Symbol.DZBAR.multiplier(g)
        u = Symbol.U.multiplier(g)
        assert np.array_equal(lamp, -np.conj(lam))
        assert np.max(np.abs(np.abs(u) - 1)) < 1e-15
        # derivatives skip the Nyquist modes
        assert np.all(lam[g.nyquist_mask()] == 0)


def test_intertwining_within_two_ulps(rng):
    g = PeriodicGrid(16)
    c = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    s = SpectralField(g, c)
    lhs = apply_symbol(apply_symbol(s, Symbol.DZBAR), Symbol.U).coeffs
    rhs = apply_symbol(s, Symbol.DZ).coeffs
    assert np.all(np.abs(lhs - rhs) <= 2 * np.spacing(np.abs(rhs)))


def test_multiply_by_one_truncates():
    g = PeriodicGrid(12)
    one = PeriodicField.constant(g, 1.0)
    b = PeriodicField.from_function(g, lambda x1, x2: np.cos(2 * x1) + np.exp(1j * 4 * x2))
    out = multiply_dealiased(one, b)
    # mode 4 is outside 3|m| < 12, mode 3 would stay
    expected = PeriodicField.from_function(g, lambda x1, x2: np.cos(2 * x1) + 0 * x2)
    assert l2_norm(out - expected) < 1e-14


def test_multiply_exponentials():
    g = PeriodicGrid(16)
    a = PeriodicField.from_function(g, lambda x1, x2: np.exp(1j * x1) + 0 * x2)
    b = PeriodicField.from_function(g, lambda x1, x2: np.exp(1j * x2) + 0 * x1)
    expected = PeriodicField.from_function(g, lambda x1, x2: np.exp(1j * (x1 + x2)))
    assert l2_norm(multiply_dealiased(a, b) - expected) < 1e-14


def _fine_grid_product(a_coeffs, b_coeffs, n):
    """Oracle: evaluate both trig polynomials on a 2n grid by explicit sums, multiply, restrict."""
    fine = 2 * n
    x = 2 * np.pi * np.arange(fine) / fine
    m = np.fft.fftfreq(n, 1.0 / n)
    e = np.exp(1j * np.outer(x, m))
    av = e @ a_coeffs @ e.T
    bv = e @ b_coeffs @ e.T
    prod = np.fft.fft2(av * bv) / fine ** 2
    out = np.zeros((n, n), dtype=complex)
    for i, mi in enumerate(m):
        for j, mj in enumerate(m):
            if 3 * max(abs(mi), abs(mj)) < n:
                out[i, j] = prod[int(mi) % fine, int(mj) % fine]
    return out


@pytest.mark.parametrize("n", [12, 16, 32])
def test_dealiased_product_matches_fine_grid(rng, n):
    g = PeriodicGrid(n)
    keep = g.dealias_mask()
    # concentrate energy near the band edge
    m1, m2 = g.modes()
    weight = keep * (1 + np.maximum(np.abs(m1), np.abs(m2)))
    ac = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * weight
    bc = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * weight
    a = to_physical(SpectralField(g, ac))
    b = to_physical(SpectralField(g, bc))
    got = to_spectral(multiply_dealiased(a, b)).coeffs
    want = _fine_grid_product(ac, bc, n)
    assert np.abs(got - want).max() <= 1e-10 * np.abs(want).max()


def test_multiply_grid_mismatch():
    with pytest.raises(InvalidInputError):
        multiply_dealiased(PeriodicField.constant(PeriodicGrid(8), 1), PeriodicField.constant(PeriodicGrid(10), 1))


def test_sobolev_examples():
    g = PeriodicGrid(16)
    one = PeriodicField.constant(g, 1.0)
    for j in range(9):
        assert sobolev_norm(one, j) == pytest.approx(1.0, abs=1e-15)
    e1 = PeriodicField.from_function(g, lambda x1, x2: np.exp(1j * x1) + 0 * x2)
    assert sobolev_norm(e1, 1) == pytest.approx(np.sqrt(2), rel=1e-14)
    with pytest.raises(InvalidInputError):
        sobolev_norm(one, 9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), j=st.integers(0, 8))
def test_sobolev_triangle_inequality(seed, j):
    rng = np.random.default_rng(seed)
    g = PeriodicGrid(8)
    a = PeriodicField(g, random_field(g, rng, band_limited=False))
    b = PeriodicField(g, random_field(g, rng, band_limited=False))
    assert sobolev_norm(a + b, j) <= (sobolev_norm(a, j) + sobolev_norm(b, j)) * (1 + 1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), j=st.integers(0, 8))
def test_u_is_unitary_in_every_sobolev_space(seed, j):
    rng = np.random.default_rng(seed)
    g = PeriodicGrid(16)
    v = PeriodicField(g, random_field(g, rng, band_limited=False))
    uv = to_physical(apply_symbol(to_spectral(v), Symbol.U))
    a, b = sobolev_norm(uv, j), sobolev_norm(v, j)
    assert abs(a - b) <= 1e-12 * b


def test_trig_eval_reproduces_samples_and_shifts(rng):
    g = PeriodicGrid(16, period=3.0)
    v = random_field(g, rng)
    c = to_spectral(PeriodicField(g, v)).coeffs
    z = g.z()
    assert np.allclose(trig_eval(c, g, z), v, atol=1e-12)
    assert np.allclose(trig_eval(c, g, z + 3.0 + 6j), v, atol=1e-12)
    x = rng.random(5) * 3
    y = rng.random(4) * 3
    tensor = trig_eval_tensor(c, g, x, y)
    pointwise = trig_eval(c, g, x[:, None] + 1j * y[None, :])
    assert np.allclose(tensor, pointwise, atol=1e-12)


def test_thread_override_does_not_change_results(monkeypatch, rng):
    from beltrami_torus.spectral import fft_workers

    g = PeriodicGrid(32)
    v = PeriodicField(g, random_field(g, rng, band_limited=False))
    monkeypatch.setenv("BELTRAMI_THREADS", "1")
    one = to_spectral(v).coeffs
    monkeypatch.setenv("BELTRAMI_THREADS", "4")
    assert fft_workers() == 4
    assert np.array_equal(to_spectral(v).coeffs, one)
    monkeypatch.setenv("BELTRAMI_THREADS", "many")
    assert fft_workers() == 1
