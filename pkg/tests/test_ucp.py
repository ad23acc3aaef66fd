import numpy as np
import pytest

from helmlab.bessel import bessel_j, gauss_legendre
from helmlab.errors import ChainBlocked, DegenerateSamples, GeometryViolation
from helmlab.fields import BoundaryTrace, GridField, lp_norm, norm, trace_norm
from helmlab.geometry import DomainSpec, boundary_chart, build_grid
from helmlab.modes import mode_field, random_mode_superposition
from helmlab.ucp import (boundary_distance, boundary_three_ball,
                         caccioppoli_ratio, chain_propagate, estimate_exponent,
                         source_neumann_ratio, three_ball_ratio)

from helpers import disk_grid, disk_pair_svd, disk_setup


def _mode_samples(grid, k, rs=(0.16,), centers=None, ell_step=1):
    centers = centers or [(0.0, 0.0), (0.15, 0.05), (-0.2, 0.22), (0.3, 0.0)]
    out = []
    for ell in range(0, int(2 * k) + 9, ell_step):
        u = mode_field(grid, ell, k)
        for c in centers:
            for r in rs:
                t = three_ball_ratio(u, c, r, k, family=f"m{ell}")
                if not t.degenerate():
                    out.append(t)
    return out


def test_ball_norms_match_radial_quadrature():
    # mask quadrature vs the Gauss-Legendre reference on each grid's own
    # face-aligned radius: second-order error, Richardson residual <= 1e-6
    ell, k = 3, 5.0
    rel = []
    for h in (0.01, 0.005):
        g = disk_grid(h)
        u = mode_field(g, ell, k)
        m = int(round(0.4 / g.dr))
        rad = m * g.dr                       # cells tile [0, m dr] exactly
        v = norm(u, "L2", np.linalg.norm(g.nodes, axis=1) <= rad + 1e-12) ** 2
        r, w = gauss_legendre(600, 0.0, rad)
        prof = np.asarray(bessel_j(float(ell), k * r))
        oracle = np.pi * np.sum(w * r * prof ** 2)   # cos^2 integrates to pi
        rel.append((v - oracle) / oracle)
    assert 3.2 <= rel[0] / rel[1] <= 4.8
    assert abs(rel[1] - rel[0] / 4.0) <= 1e-6


def test_zero_solution_degenerate():
    g = disk_grid(0.01)
    z = GridField(g, np.zeros(g.n_nodes))
    t = three_ball_ratio(z, (0, 0), 0.16, 2.0)
    assert t.degenerate()


def test_geometry_guards():
    g = disk_grid(0.01)
    u = mode_field(g, 2, 4.0)
    with pytest.raises(GeometryViolation):
        three_ball_ratio(u, (0.5, 0.0), 0.16, 4.0)     # B_4r exits the disk
    with pytest.raises(GeometryViolation):
        three_ball_ratio(u, (0.0, 0.0), 0.05, 4.0)     # under 8 layers


def test_exponent_fit_properties():
    g = disk_grid(0.01)
    samples = _mode_samples(g, 4.0)
    fit = estimate_exponent(samples)
    assert 0.0 < fit.alpha_hat < 1.0
    # calibration margins are nonnegative by construction
    assert min(fit.margin(t) for t in samples) >= -1e-12
    # scale invariance: norms scale linearly, the fit inputs are ratios
    scaled = [three_ball_ratio(GridField(g, 10.0 * mode_field(g, 3, 4.0).values),
                               c, 0.16, 4.0) for c in [(0, 0), (0.2, 0.1)]]
    base = [three_ball_ratio(mode_field(g, 3, 4.0), c, 0.16, 4.0)
            for c in [(0, 0), (0.2, 0.1)]]
    for a, b in zip(scaled, base):
        fa = estimate_exponent(samples + [a])
        fb = estimate_exponent(samples + [b])
        assert abs(fa.alpha_hat - fb.alpha_hat) < 1e-12


def test_degenerate_samples_guard():
    g = disk_grid(0.01)
    u = mode_field(g, 2, 4.0)
    one = three_ball_ratio(u, (0, 0), 0.16, 4.0)
    with pytest.raises(DegenerateSamples):
        estimate_exponent([one] * 12)


def test_boundary_variant_fit():
    g = disk_grid(0.01)
    chart = boundary_chart(g)
    samples = []
    for ell in range(0, 13, 2):
        u = mode_field(g, ell, 4.0)
        eta = 2.0 * trace_norm(BoundaryTrace(chart, u.values[chart.node_ids]), 0.5)
        for th in (0.0, 1.3, 2.9):
            x0 = (np.cos(th), np.sin(th))
            t = boundary_three_ball(u, x0, 0.16, 4.0, eta)
            if not t.degenerate() and t.eta > 0:
                samples.append(t)
    fit = estimate_exponent(samples, boundary=True)
    assert 0.0 < fit.alpha_hat < 1.0
    assert min(fit.margin(t) for t in samples) >= -1e-12


def test_chain_growth_and_validity():
    grid, _, op, chart = disk_setup(4.0, h=0.02)
    cal = _mode_samples(disk_grid(0.01), 4.0)
    fit = estimate_exponent(cal)
    rng = np.random.default_rng(11)
    u = random_mode_superposition(grid, 4.0, 10, rng)
    eta = 2.0 * trace_norm(BoundaryTrace(chart, u.values[chart.node_ids]), 0.5)
    M = norm(u, "H1")
    c4 = 1.5 * lp_norm(u, 4) / M
    rows = []
    for eps in (0.2, 0.1, 0.05, 0.025):
        res = chain_propagate(op, chart, u, eta, M, eps, fit,
                              sobolev_constant=c4)
        assert res.covered
        assert res.bound >= norm(u, "L2")
        assert res.bound_log > 0
        rows.append((eps, res.n_balls))
    L = np.log(1.0 / np.array([r[0] for r in rows]))
    N = np.array([r[1] for r in rows], dtype=float)
    coef = np.polyfit(L, N, 1)
    pred = np.polyval(coef, L)
    r2 = 1 - np.sum((N - pred) ** 2) / np.sum((N - N.mean()) ** 2)
    assert coef[0] > 0
    assert r2 >= 0.95


def test_chain_zero_data():
    grid, _, op, chart = disk_setup(4.0, h=0.02)
    fit = estimate_exponent(_mode_samples(disk_grid(0.01), 4.0))
    z = GridField(grid, np.zeros(grid.n_nodes))
    res = chain_propagate(op, chart, z, 0.0, 0.0, 0.1, fit)
    assert res.bound == 0.0 and res.n_balls == 0


def test_chain_blocked_above_level_stack():
    grid, _, op, chart = disk_setup(4.0, h=0.02)
    fit = estimate_exponent(_mode_samples(disk_grid(0.01), 4.0))
    u = mode_field(grid, 0, 4.0)
    # a deep set above the top chain level cannot be reached
    with pytest.raises(ChainBlocked):
        chain_propagate(op, chart, u, 1.0, 10.0, 0.96, fit)
    # an empty deep set degrades gracefully to the layer bound
    res = chain_propagate(op, chart, u, 1.0, 10.0, 2.0, fit)
    assert res.covered and res.n_balls == 0 and res.bound == res.bound_layer


def test_boundary_distance_analytic():
    g = disk_grid(0.05)
    d = boundary_distance(g, np.array([[0.0, 0.0], [0.5, 0.0]]))
    assert np.allclose(d, [1.0, 0.5])
    ga = build_grid(DomainSpec.annulus(0.5, 2.0), 0.1)
    d2 = boundary_distance(ga, np.array([[1.0, 0.0], [1.8, 0.0]]))
    assert np.allclose(d2, [0.5, 0.2])


def test_caccioppoli_uniform_over_family():
    g = disk_grid(0.01)
    worst = {}
    for k in (2.0, 4.0, 8.0):
        ratios = [caccioppoli_ratio(mode_field(g, ell, k), 0.2, k)
                  for ell in range(0, int(2 * k) + 6, 2)]
        worst[k] = max(ratios)
    vals = np.array(list(worst.values()))
    assert np.all(vals < 10.0)
    assert vals.max() / max(vals.min(), 1e-300) < 5.0


def test_source_neumann_ratio_uniform():
    ratios = []
    for k in (2.0, 5.0):
        grid, _, op, chart = disk_setup(k)
        omega1 = np.linalg.norm(grid.nodes, axis=1) <= 0.5
        rng = np.random.default_rng(int(k))
        for _ in range(3):
            v = GridField(grid, np.where(omega1, rng.standard_normal(grid.n_nodes), 0.0),
                          omega1)
            ratios.append(source_neumann_ratio(op, chart, v, omega1))
    ratios = np.array(ratios)
    # a single constant bounds eta / (k^(n+2) ||v||) across the family
    assert ratios.max() < 1.0
