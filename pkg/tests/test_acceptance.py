"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line in the summary."""
import math
import time
import warnings

import numpy as np
import pytest

from beltrami_torus.cli import perturbed_identity
from beltrami_torus.corpus import bump, constant, two_mode
from beltrami_torus.plane import (
    PlanarProblem,
    normalized_map,
    periodize,
    planar_bump,
    plane_solve_sequence,
)
from beltrami_torus.qc import (
    Annulus,
    CylinderMapSamples,
    annulus_modulus,
    grotzsch_area_certify,
    map_dilatation_field,
)
from beltrami_torus.solver import (
    BeltramiCoefficient,
    HomotopyConfig,
    beltrami_residual,
    dense_oracle_solve,
    neumann_tail_check,
    parameter_analyticity_check,
    solve_homotopy,
    solve_neumann,
)
from beltrami_torus.spectral import (
    PeriodicField,
    PeriodicGrid,
    SpectralField,
    Symbol,
    apply_symbol,
    l2_norm,
    sobolev_norm,
    to_physical,
    to_spectral,
)
from beltrami_torus.uniformize import build_uniformizing_form, jacobian_min, lattice

from conftest import record_acceptance

# the C-infinity bump is not band-limited; its small aliased tail is expected here
pytestmark = pytest.mark.filterwarnings("ignore::beltrami_torus.solver.AliasingWarning")

CORPUS = {"two_mode": two_mode, "bump": bump}
DELTAS = (0.3, 0.5, 0.7)


def _check(number, title, conditions, detail=""):
    passed = all(conditions)
    record_acceptance(number, title, passed, detail)
    assert passed, f"criterion {number} failed: {detail}"


def _random_band_mu(grid, rng, delta):
    m1, m2 = grid.modes()
    c = (rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n)))
    c *= grid.dealias_mask() / (1 + m1 ** 2 + m2 ** 2) ** 2
    v = np.fft.ifft2(c)
    v *= delta / np.abs(v).max()
    return BeltramiCoefficient.from_values(grid, v)


def test_criterion_01_operator_identities():
    t0 = time.perf_counter()
    grid = PeriodicGrid(64)
    rng = np.random.default_rng(1)
    worst_l2 = worst_h1 = worst_ulps = 0.0
    for _ in range(200):
        v = PeriodicField(grid, rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64)))
        s = to_spectral(v)
        uv = to_physical(apply_symbol(s, Symbol.U))
        for j in (0, 1):
            a, b = sobolev_norm(uv, j), sobolev_norm(v, j)
            d = abs(a - b) / b
            if j == 0:
                worst_l2 = max(worst_l2, d)
            else:
                worst_h1 = max(worst_h1, d)
        lhs = apply_symbol(apply_symbol(s, Symbol.DZBAR), Symbol.U).coeffs
        rhs = apply_symbol(s, Symbol.DZ).coeffs
        nz = rhs != 0
        ulps = np.abs(lhs - rhs)[nz] / np.spacing(np.abs(rhs[nz]))
        assert np.all(lhs[~nz] == 0)
        worst_ulps = max(worst_ulps, float(ulps.max()))
    lam = Symbol.DZ.multiplier(grid)
    lamp = Symbol.DZBAR.multiplier(grid)
    conj_ok = bool(np.array_equal(lamp, -np.conj(lam)))
    elapsed = time.perf_counter() - t0
    _check(
        1,
        "operator identities",
        [worst_l2 <= 1e-12, worst_h1 <= 1e-12, worst_ulps <= 2, conj_ok, elapsed < 5],
        f"L2 {worst_l2:.2e}, H1 {worst_h1:.2e}, ulps {worst_ulps:.2f}, conj {conj_ok}, {elapsed:.2f}s",
    )


def test_criterion_02_constant_closed_forms():
    grid = PeriodicGrid(32)
    rng = np.random.default_rng(2)
    pts = (rng.random(100) * 4 - 2) + 1j * (rng.random(100) * 4 - 2)
    worst_f = worst_tau = worst_map = 0.0
    for k in range(1, 10):
        c = k / 10
        mu = constant(grid, c)
        rep = solve_neumann(mu, tol=1e-13)
        worst_f = max(worst_f, float(np.abs(rep.f.values - 1 / (1 - c)).max()))
        tau = lattice(build_uniformizing_form(rep.f, mu)).tau
        worst_tau = max(worst_tau, abs(tau - 1j * (1 - c) / (1 + c)))
        nmap = normalized_map(periodize(PlanarProblem.from_constant(c), 2 * np.pi, 0.5, 32), tol=1e-13)
        worst_map = max(worst_map, float(np.abs(nmap(pts) - (pts + c * np.conj(pts)) / (1 + c)).max()))
    _check(
        2,
        "constant-coefficient closed forms",
        [worst_f <= 1e-12, worst_tau <= 1e-12, worst_map <= 1e-10],
        f"f {worst_f:.2e}, tau {worst_tau:.2e}, map {worst_map:.2e}",
    )


def test_criterion_03_oracle_equivalence():
    rng = np.random.default_rng(3)
    worst = 0.0
    for n in (8, 16):
        grid = PeriodicGrid(n)
        for _ in range(10):
            mu = _random_band_mu(grid, rng, rng.uniform(0.05, 0.6))
            diff = l2_norm(solve_neumann(mu).f - dense_oracle_solve(mu))
            worst = max(worst, diff)
    _check(3, "oracle equivalence", [worst <= 1e-9], f"max L2 difference {worst:.2e}")


def test_criterion_04_residual_suite():
    grid = PeriodicGrid(128)
    worst_res, min_f, min_jac = 0.0, math.inf, math.inf
    for gen in CORPUS.values():
        for d in DELTAS:
            mu = gen(grid, d)
            rep = solve_neumann(mu)
            worst_res = max(worst_res, beltrami_residual(rep.f, mu))
            min_f = min(min_f, rep.min_abs_f)
            min_jac = min(min_jac, jacobian_min(build_uniformizing_form(rep.f, mu)))
    _check(
        4,
        "residual suite",
        [worst_res <= 1e-8, min_f > 1e-3, min_jac > 0],
        f"residual {worst_res:.2e}, min|f| {min_f:.3f}, min jac {min_jac:.3f}",
    )


def test_criterion_05_contraction_and_tail():
    worst_excess = -math.inf
    for n in (64, 128):
        grid = PeriodicGrid(n)
        for gen in CORPUS.values():
            for d in DELTAS:
                mu = gen(grid, d)
                ratios = solve_neumann(mu).contraction_ratios()
                worst_excess = max(worst_excess, float(np.max(ratios)) - mu.delta)
    grid = PeriodicGrid(32)
    tails = [neumann_tail_check(gen(grid, 0.5), 10, trials=100) for gen in CORPUS.values()]
    _check(
        5,
        "contraction and tail bounds",
        [worst_excess <= 1e-12] + [t.passed for t in tails],
        f"max ratio - delta {worst_excess:.3f}, tail ratios "
        + ", ".join(f"{t.max_l2_ratio:.2f}/{t.max_deriv_ratio:.2f}" for t in tails),
    )


def test_criterion_06_method_agreement():
    grid = PeriodicGrid(64)
    worst = 0.0
    for gen in CORPUS.values():
        for d in DELTAS:
            mu = gen(grid, d)
            diff = l2_norm(solve_neumann(mu).f - solve_homotopy(mu, HomotopyConfig(steps=64)).f)
            worst = max(worst, diff)
    _check(6, "method agreement", [worst <= 1e-6], f"max L2 difference {worst:.2e}")


def test_criterion_07_parameter_analyticity():
    mu = two_mode(PeriodicGrid(64), 0.5)
    d1 = parameter_analyticity_check(mu, 0.5, 1e-2)
    d2 = parameter_analyticity_check(mu, 0.5, 5e-3)
    ratio = d1 / d2
    _check(7, "parameter analyticity", [3.5 <= ratio <= 4.5], f"defects {d1:.3e}, {d2:.3e}, ratio {ratio:.4f}")


@pytest.mark.slow
def test_criterion_08_plane_pipeline():
    t0 = time.perf_counter()
    rep = plane_solve_sequence(planar_bump(0.5, 1.0), (8, 16, 32, 64), points_per_unit=8)
    elapsed = time.perf_counter() - t0
    d = rep.sup_diffs
    oracle_gap = d[2]
    decreasing = d[0] > d[1]
    _check(
        8,
        "plane pipeline",
        [decreasing, oracle_gap <= 2 * d[1], max(rep.grid_sizes) <= 512, elapsed < 120],
        f"diffs {d[0]:.2e}, {d[1]:.2e}; L=32 vs L=64 {oracle_gap:.2e}; n up to {max(rep.grid_sizes)}; {elapsed:.1f}s",
    )


def test_criterion_09_grotzsch_certificate():
    height, nx, nphi = 2 * np.pi, 257, 256
    reports = [grotzsch_area_certify(CylinderMapSamples.from_function(lambda z: z, height, nx, nphi), 1.0)]
    for c in (0.2, 0.5, 0.8):
        s = CylinderMapSamples.from_function(lambda z, c=c: z + c * np.conj(z), height, nx, nphi,
                                             phi_shift=2j * np.pi * (1 - c))
        reports.append(grotzsch_area_certify(s, (1 + c) / (1 - c)))
    s = CylinderMapSamples.from_function(lambda z: perturbed_identity(z, 0.3, height), height, nx, nphi)
    _, measured = map_dilatation_field(s)
    reports.append(grotzsch_area_certify(s, measured))
    m_round = annulus_modulus(Annulus.round(math.exp(-2 * math.pi)))
    m_cyl = annulus_modulus(Annulus.cylinder(2 * math.pi))
    _check(
        9,
        "length-area certificate",
        [r.passed for r in reports] + [max(r.slack for r in reports) <= 1e-3, measured <= 2,
                                       m_round == 1.0, m_cyl == 1.0],
        f"{len(reports)} maps certified, perturbation K {measured:.3f}, max slack {max(r.slack for r in reports):.1e}, "
        f"moduli {m_round!r}/{m_cyl!r}",
    )


def test_criterion_10_performance():
    grid = PeriodicGrid(256)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        t0 = time.perf_counter()
        mu = two_mode(grid, 0.5)
        rep = solve_neumann(mu, tol=1e-10)
        form = build_uniformizing_form(rep.f, mu)
        lattice(form)
        elapsed = time.perf_counter() - t0
    limit = math.ceil(math.log(1e-10 * 0.5) / math.log(0.5)) + 16
    _check(
        10,
        "performance",
        [elapsed <= 5, rep.iterations <= limit],
        f"{elapsed:.2f}s, {rep.iterations} iterations (limit {limit})",
    )
