import numpy as np
import pytest

from helmlab.bessel import bessel_j, gauss_legendre
from helmlab.errors import RegionMismatch, SupportTouchesBox
from helmlab.fields import (BoundaryFunctional, BoundaryTrace, GridField,
                            field_from_radial, functional_norm,
                            hminus1_norm_fourier, lp_norm, mask_to_gamma, norm,
                            riesz_map, trace_norm)
from helmlab.geometry import DomainSpec, boundary_chart, build_grid
from helmlab.profiles import bump_profile

from helpers import disk_grid


def test_l2_constant_disk():
    g = disk_grid(0.05)
    f = GridField(g, np.ones(g.n_nodes))
    assert abs(norm(f, "L2") - np.sqrt(np.pi)) < 2e-3


def test_h1_semi_linear_field():
    g = build_grid(DomainSpec.rectangle((0, 0), (1, 1)), 1 / 32)
    f = GridField(g, g.nodes[:, 0])
    assert abs(norm(f, "H1_semi") - 1.0) < 1e-10
    assert abs(norm(f, "H1") - np.sqrt(1.0 + norm(f, "L2") ** 2)) < 1e-12


def test_radial_bessel_norm_against_quadrature():
    # midpoint quadrature is second order; Richardson across h, h/2 reaches
    # the 1e-6 agreement with the Gauss-Legendre reference
    spec = DomainSpec.annulus(0.5, 2.0)
    vals = []
    for h in (0.02, 0.01):
        g = build_grid(spec, h)
        f = field_from_radial(g, lambda r: np.asarray(bessel_j(0.0, 5.0 * r)))
        vals.append(norm(f, "L2") ** 2)
    extrapolated = (4 * vals[1] - vals[0]) / 3.0
    r, w = gauss_legendre(400, 0.5, 2.0)
    oracle = 2 * np.pi * np.sum(w * r * np.asarray(bessel_j(0.0, 5.0 * r)) ** 2)
    assert abs(extrapolated - oracle) < 1e-6 * oracle


def test_norm_axioms_random_fields():
    g = disk_grid(0.08)
    rng = np.random.default_rng(0)
    u = GridField(g, rng.standard_normal(g.n_nodes))
    v = GridField(g, rng.standard_normal(g.n_nodes))
    for which in ("L2", "H1"):
        assert abs(norm(u * 3.5, which) - 3.5 * norm(u, which)) < 1e-12
        assert norm(u + v, which) <= norm(u, which) + norm(v, which) + 1e-12


def test_region_mismatch():
    g = disk_grid(0.08)
    inner = np.linalg.norm(g.nodes, axis=1) < 0.5
    f = GridField(g, np.ones(g.n_nodes), inner)
    with pytest.raises(RegionMismatch):
        norm(f, "L2", ~inner)


def test_trace_norm_constant_and_mode():
    g = disk_grid(0.05)
    chart = boundary_chart(g)
    t = BoundaryTrace(chart, np.ones(chart.n))
    assert abs(trace_norm(t, 0.5) - np.sqrt(2 * np.pi)) < 1e-12
    errs = []
    for h in (0.05, 0.025):
        gg = disk_grid(h)
        ch = boundary_chart(gg)
        tm = BoundaryTrace(ch, np.cos(4 * gg.thetas))
        errs.append(abs(trace_norm(tm, 0.5) ** 2 - np.pi * np.sqrt(1 + 16)))
    assert errs[1] < errs[0]


def test_riesz_isometry_and_duality():
    g = disk_grid(0.05)
    chart = boundary_chart(g)
    rng = np.random.default_rng(1)
    ell = BoundaryFunctional(chart, rng.standard_normal(chart.n))
    r = riesz_map(ell)
    # <ell, R ell> = ||ell||^2 and trace_norm(+1/2) of the image matches
    n2 = functional_norm(ell) ** 2
    assert abs(ell.pair(r) - n2) < 1e-10 * n2
    assert abs(trace_norm(r, 0.5) - functional_norm(ell)) < 1e-10

    zero = BoundaryFunctional(chart, np.zeros(chart.n))
    assert np.allclose(riesz_map(zero).values, 0.0)

    # duality bound and sharpness
    for _ in range(5):
        t = BoundaryTrace(chart, rng.standard_normal(chart.n))
        assert abs(ell.pair(t)) <= functional_norm(ell) * trace_norm(t, 0.5) * (1 + 1e-12)
    unit = BoundaryTrace(chart, r.values / trace_norm(r, 0.5))
    assert abs(ell.pair(unit) - functional_norm(ell)) < 1e-8 * functional_norm(ell)


def test_riesz_gamma_restricted():
    g = disk_grid(0.05)
    chart = boundary_chart(g, {"angles": [(0.0, np.pi)]})
    rng = np.random.default_rng(2)
    ell = BoundaryFunctional(chart, rng.standard_normal(chart.n))
    r = riesz_map(ell, gamma=chart.gamma_mask)
    assert np.all(r.values[~chart.gamma_mask] == 0.0)
    n2 = functional_norm(ell, gamma=chart.gamma_mask) ** 2
    assert abs(ell.pair(r) - n2) < 1e-9 * max(n2, 1.0)


def test_trace_interlacing():
    g = disk_grid(0.06)
    chart = boundary_chart(g)
    rng = np.random.default_rng(3)
    for _ in range(5):
        t = BoundaryTrace(chart, rng.standard_normal(chart.n))
        l2 = np.sqrt(np.sum(chart.weights * t.values ** 2))
        assert trace_norm(t, -0.5) <= l2 * (1 + 1e-12)
        assert l2 <= trace_norm(t, 0.5) * (1 + 1e-12)


def test_gamma_masking():
    g = disk_grid(0.06)
    chart = boundary_chart(g, {"angles": [(0.0, 1.0)]})
    t = BoundaryTrace(chart, np.ones(chart.n))
    masked = mask_to_gamma(t)
    assert np.max(np.abs(masked.values[~chart.gamma_mask])) == 0.0


def test_hminus1_fourier():
    g = build_grid(DomainSpec.rectangle((0, 0), (2, 2)), 1 / 24)
    assert hminus1_norm_fourier(GridField(g, np.zeros(g.n_nodes))) == 0.0

    bump = bump_profile(1.0, (1.0, 1.0), 0.35)
    vals = bump(g.nodes)
    f = GridField(g, vals)
    assert hminus1_norm_fourier(f) <= norm(f, "L2") * (1 + 1e-12)

    # oscillatory bump: weight < 1 strictly
    osc = vals * np.cos(8 * g.nodes[:, 0])
    fo = GridField(g, osc)
    assert hminus1_norm_fourier(fo) < 0.5 * norm(fo, "L2")

    # self-convergence within 2%
    g2 = build_grid(DomainSpec.rectangle((0, 0), (2, 2)), 1 / 48)
    f2 = GridField(g2, bump(g2.nodes))
    a, b = hminus1_norm_fourier(f), hminus1_norm_fourier(f2)
    assert abs(a - b) / b < 0.02

    touching = GridField(g, np.ones(g.n_nodes))
    with pytest.raises(SupportTouchesBox):
        hminus1_norm_fourier(touching)


def test_lp_norm_matches_l2():
    g = disk_grid(0.08)
    rng = np.random.default_rng(4)
    f = GridField(g, rng.standard_normal(g.n_nodes))
    assert abs(lp_norm(f, 2.0) - norm(f, "L2")) < 1e-12
