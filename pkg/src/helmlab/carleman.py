"""Weighted-inequality verification on the annulus 1 < |x| < 2.

For compactly supported u with a zero collar and a radially monotone profile
q, the inequality under test bounds

    tau ||e^phi u|| + ||e^phi |x| grad u|| + tau^(1/2) k ||q^(1/2) |x| e^phi u||

by the weighted data norms ||e^phi |x|^2 f|| + max(tau, k) sum_j ||e^phi |x| F^j||
with phi = tau log|x|, i.e. weight |x|^tau, and a constant depending only on
the dimension and the pinch kappa.  The module evaluates both sides with
quadrature; f defaults to the full discrete residual (Delta + k^2 q) u, and a
divergence-mode splitting routes part of the data through the F^j weights.

The improved-continuation probe manufactures high-degree solutions on the
annulus with small outer Cauchy data and records the quantities entering the
logarithmic and polynomial (in k^3 eta / M) envelopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import (DiscreteOperator, Medium, radial_derivative, solve_dirichlet,
                       stiffness, weak_neumann_trace)
from .errors import HypothesisViolated, SupportViolation
from .fields import GridField, functional_norm, masked_gradient, norm
from .geometry import Grid, annulus_mask


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------

@dataclass
class CarlemanSample:
    tau: float
    k: float
    lhs_terms: tuple          # (tau term, gradient term, large-k term)
    rhs_terms: tuple          # (f term, F term incl. max(tau,k))
    ratio: float
    divergence_mode: bool


def _weighted_l2(grid: Grid, values: np.ndarray) -> float:
    return float(np.sqrt(np.sum(grid.quad_weights * values ** 2)))


def _collar_mask(grid: Grid, layers: int = 2) -> np.ndarray:
    """Nodes at least ``layers`` rings away from both circles."""
    n_r, n_t = grid.lattice_shape
    ring = np.repeat(np.arange(n_r), n_t)
    return (ring >= layers) & (ring <= n_r - 1 - layers)


def check_support(u: GridField, layers: int = 2) -> None:
    inside = _collar_mask(u.grid, layers)
    mx = float(np.max(np.abs(u.values), initial=0.0))
    if mx == 0.0:
        return
    if np.max(np.abs(u.values[~inside]), initial=0.0) > 1e-14 * mx:
        raise SupportViolation(
            f"sample not zero on a {layers}-layer collar of the annulus")


def apply_principal(grid: Grid, medium: Medium, k: float,
                    values: np.ndarray) -> np.ndarray:
    """(Delta + k^2 q) u by direct differencing (the assembled stencil)."""
    K = stiffness(grid)
    w = grid.quad_weights
    return (-(K @ values) + w * (k * k * medium.q.values) * values) / w


def _polar_divergence(grid: Grid, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
    """div F for cartesian components sampled on the polar lattice."""
    n_r, n_t = grid.lattice_shape
    th = np.tile(grid.thetas, n_r)
    fr = fx * np.cos(th) + fy * np.sin(th)
    ft = -fx * np.sin(th) + fy * np.cos(th)
    r = np.repeat(grid.radii, n_t)
    full = np.ones(grid.n_nodes, dtype=bool)
    d_r = masked_gradient(grid, r * fr, full)[0]       # d/dr (r F_r)
    d_t = masked_gradient(grid, ft, full)[1]           # (1/r) dF_theta/dtheta
    return d_r / r + d_t


def carleman_check(u: GridField, medium: Medium, k: float, tau: float,
                   f: Optional[GridField] = None, F: Optional[tuple] = None,
                   tau0: float = 10.0) -> CarlemanSample:
    """Evaluate both sides of the weighted inequality for one sample.

    Default mode computes f = (Delta + k^2 q) u by direct differencing with
    F = 0; passing (f, F) uses the caller's splitting (the identity
    f + div F = (Delta + k^2 q) u is the caller's responsibility, see
    :func:`divergence_splitting`).  Requires the monotone flag and
    tau >= tau0.
    """
    if not medium.monotone_flag:
        raise HypothesisViolated("radially monotone profile required")
    if tau < tau0:
        raise HypothesisViolated(f"tau={tau:g} below tau0={tau0:g}")
    grid = u.grid
    check_support(u)

    r = np.linalg.norm(grid.nodes - np.asarray(grid.spec.center), axis=1)
    ephi = np.exp(tau * np.log(r))
    q = medium.q.values

    grads = masked_gradient(grid, u.values, np.ones(grid.n_nodes, bool))
    grad_mag = np.sqrt(sum(np.abs(g) ** 2 for g in grads))

    lhs1 = tau * _weighted_l2(grid, ephi * u.values)
    lhs2 = _weighted_l2(grid, ephi * r * grad_mag)
    lhs3 = math.sqrt(tau) * k * _weighted_l2(grid, np.sqrt(q) * r * ephi * u.values)

    if f is None:
        fv = apply_principal(grid, medium, k, u.values)
        Fx = Fy = np.zeros(grid.n_nodes)
        div_mode = False
    else:
        fv = f.values
        Fx, Fy = (c.values for c in F) if F is not None else (np.zeros(grid.n_nodes),) * 2
        div_mode = F is not None
    rhs1 = _weighted_l2(grid, ephi * r ** 2 * fv)
    rhs2 = max(tau, k) * (_weighted_l2(grid, ephi * r * Fx)
                          + _weighted_l2(grid, ephi * r * Fy))
    lhs = lhs1 + lhs2 + lhs3
    rhs = rhs1 + rhs2
    ratio = lhs / rhs if rhs > 0 else 0.0
    return CarlemanSample(tau=tau, k=k, lhs_terms=(lhs1, lhs2, lhs3),
                          rhs_terms=(rhs1, rhs2), ratio=ratio,
                          divergence_mode=div_mode)


def divergence_splitting(grid: Grid, medium: Medium, k: float,
                         u: GridField) -> tuple:
    """Split (Delta + k^2 q) u = f + div F with a gradient-potential F.

    Solves a Poisson problem for a potential p, takes F = chi grad p with a
    collar cutoff chi (keeps supp F inside the annulus), and folds the exact
    discrete remainder into f, so f + div_h F matches the residual by
    construction.
    """
    rho = apply_principal(grid, medium, k, u.values)
    K = stiffness(grid)
    I = grid.interior_index
    rhs = (grid.quad_weights * rho)[I]
    p = np.zeros(grid.n_nodes)
    p[I] = spla.splu(K[I][:, I].tocsc()).solve(rhs)
    grads = masked_gradient(grid, p, np.ones(grid.n_nodes, bool))
    n_r, n_t = grid.lattice_shape
    th = np.tile(grid.thetas, n_r)
    chi = _collar_mask(grid, 2).astype(float)
    fx = chi * (grads[0] * np.cos(th) - grads[1] * np.sin(th))
    fy = chi * (grads[0] * np.sin(th) + grads[1] * np.cos(th))
    fv = rho - _polar_divergence(grid, fx, fy)
    return (GridField(grid, fv),
            (GridField(grid, fx), GridField(grid, fy)))


def _radial_bump(grid: Grid, mid: float, halfwidth: float) -> np.ndarray:
    n_r, n_t = grid.lattice_shape
    r = np.repeat(grid.radii, n_t)
    s = np.zeros(grid.n_nodes)
    t = (r - mid) / halfwidth
    inside = np.abs(t) < 1.0
    s[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return s


def random_compact_sample(grid: Grid, rng: np.random.Generator,
                          layers: int = 3) -> GridField:
    """Smooth random field with exact compact support inside the annulus."""
    r_in, r_out = grid.radii[0], grid.radii[-1]
    pad = layers * grid.dr
    a = r_in + pad + rng.uniform(0.0, 0.25 * (r_out - r_in - 2 * pad))
    b = r_out - pad - rng.uniform(0.0, 0.25 * (r_out - r_in - 2 * pad))
    n_r, n_t = grid.lattice_shape
    r = np.repeat(grid.radii, n_t)
    th = np.tile(grid.thetas, n_r)
    s = _radial_bump(grid, 0.5 * (a + b), 0.5 * (b - a))
    m = int(rng.integers(0, 9))
    c1, c2 = rng.standard_normal(2)
    omega = rng.uniform(0.0, 12.0)
    phase = rng.uniform(0.0, 2 * np.pi)
    vals = s * (c1 * np.cos(m * th) + c2 * np.sin(m * th)) \
        * (1.0 + 0.5 * np.sin(omega * r + phase))
    return GridField(grid, vals)


def adapted_compact_sample(grid: Grid, medium: Medium,
                           rng: np.random.Generator, tau: float, k: float,
                           layers: int = 3) -> GridField:
    """Compactly supported sample concentrated where the weighted inequality
    is tight.

    The conjugated symbol vanishes at angular order m ~ sqrt(tau^2 + (kr)^2 q)
    with small radial frequency, and the weight turns a flat profile into
    r^-tau; generic bumps drift away from the sharp constant as tau or k
    double, so the uniformity scan draws most samples from this family.
    """
    r_in, r_out = grid.radii[0], grid.radii[-1]
    pad = layers * grid.dr
    a, b = r_in + pad, r_out - pad
    mid = rng.uniform(a + 0.25 * (b - a), b - 0.25 * (b - a))
    halfwidth = min(mid - a, b - mid) * rng.uniform(0.5, 1.0)
    n_r, n_t = grid.lattice_shape
    r = np.repeat(grid.radii, n_t)
    th = np.tile(grid.thetas, n_r)
    s = _radial_bump(grid, mid, halfwidth)

    ring = np.argmin(np.abs(grid.radii - mid))
    q_mid = float(medium.q.values[grid.lattice_id[ring, 0]])
    m_star = math.sqrt(tau * tau + k * k * q_mid * mid * mid)
    m = min(int(round(m_star * rng.uniform(0.85, 1.05))), n_t // 3)
    omega = math.sqrt(max(tau * tau + k * k * q_mid * mid * mid - m * m, 0.0))
    amp = np.exp(-tau * (np.log(r) - math.log(mid)))
    vals = amp * s * np.cos(omega * np.log(r) + rng.uniform(0, 2 * np.pi)) \
        * np.cos(m * th + rng.uniform(0, 2 * np.pi))
    return GridField(grid, vals)


def commutator_min(medium: Medium, tau: float, k: float) -> float:
    """Minimum over nodes of 2 (1+tau) k^2 r^2 (2 q + r dq/dr), the
    conjugated-operator commutator density; nonnegative for monotone q."""
    grid = medium.grid
    n_r, n_t = grid.lattice_shape
    q = medium.q.values.reshape(n_r, n_t)
    rd = radial_derivative(medium.q).reshape(n_r - 1, n_t)
    r = grid.radii[:-1][:, None]
    quantity = 2.0 * (1.0 + tau) * k * k * r ** 2 * (2.0 * q[:-1] + r * rd)
    return float(quantity.min())


# ---------------------------------------------------------------------------
# Improved-continuation probe on the annulus
# ---------------------------------------------------------------------------

@dataclass
class ImprovedProbe:
    k: float
    ell: int
    delta: float
    eta: float
    M: float
    lhs: float                 # ||u|| on the outer sub-annulus r >= 1+delta
    lhs_full: float            # ||u|| on the whole annulus
    rhs_log: float
    rhs_poly: float


def improved_ucp_probe(op: DiscreteOperator, k: float, delta: float,
                       ell: Optional[int] = None, spectrum=None,
                       mu_hat: float = 0.5, nu_hat: float = 0.5) -> ImprovedProbe:
    """Manufacture a high-degree solution with small outer Cauchy data and
    record the envelope quantities.

    The solve carries data cos(ell theta) on the inner circle and zero on the
    outer circle, so eta is the outer weak-Neumann norm alone; requires
    0 < k^3 eta <= M.
    """
    grid = op.grid
    if grid.spec.kind != "annulus":
        raise HypothesisViolated("probe requires an annulus domain")
    if not op.medium.monotone_flag:
        raise HypothesisViolated("radially monotone profile required")
    if ell is None:
        ell = int(round(k)) + 4

    n_r, n_t = grid.lattice_shape
    gb = np.zeros(grid.boundary_index.size)
    inner_ids = grid.lattice_id[0]
    pos = np.searchsorted(grid.boundary_index, inner_ids)
    gb[pos] = np.cos(ell * grid.thetas)
    u = solve_dirichlet(op, g=gb, spectrum=spectrum)

    ell_fun = weak_neumann_trace(op, u)
    eta = functional_norm(ell_fun)           # outer trace itself is zero
    M = norm(u, "H1")
    if not (0.0 < k ** 3 * eta <= M):
        raise HypothesisViolated(
            f"needs 0 < k^3 eta <= M (k^3 eta = {k ** 3 * eta:.3g}, M = {M:.3g})")

    r_in, r_out = grid.radii[0], grid.radii[-1]
    outer = annulus_mask(grid, r_in + delta, r_out)
    lhs = norm(u, "L2", outer)
    lhs_full = norm(u, "L2")
    x = k ** 3 * eta / M
    rhs_log = abs(math.log(x)) ** (-mu_hat) * M
    rhs_poly = (k ** 3 * eta) ** nu_hat * M ** (1 - nu_hat)
    return ImprovedProbe(k=k, ell=ell, delta=delta, eta=eta, M=M, lhs=lhs,
                         lhs_full=lhs_full, rhs_log=rhs_log, rhs_poly=rhs_poly)
