"""Weak-perspective fit: scale, shape coefficients, 2x3 rotation rows, 2D offset.

The weighted, Tikhonov-regularized cost is minimized by block coordinate
descent, initialized from a convex relaxation that fixes the shape to the
mean and replaces the row-orthonormality constraint with a spectral-norm
regularizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, InsufficientConstraintsError
from .geometry import hat, lift_stiefel, weighted_procrustes
from .shape_basis import compose_shape


@dataclass
class SolverOptions:
    """Shared options for the weak- and full-perspective solvers.

    ``lam`` (Tikhonov weight) and ``mu`` (spectral-norm weight for the convex
    initialization) default to data-scaled heuristics when left as None.
    """

    lam: float = None
    mu: float = None
    max_iterations: int = 500
    relative_tolerance: float = 1e-9
    record_block_costs: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.relative_tolerance <= 0.0:
            raise ValueError("relative_tolerance must be positive")
        if self.lam is not None and self.lam < 0.0:
            raise ValueError("lam must be nonnegative")


@dataclass
class WPEstimate:
    """Weak-perspective solution: scale s, coefficients c, rows rbar, offset tbar."""

    s: float
    c: np.ndarray
    rbar: np.ndarray
    tbar: np.ndarray
    final_cost: float
    iterations: int
    converged: bool
    block_costs: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.s <= 0.0:
            raise ValueError("weak-perspective scale must be positive")
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.rbar = np.asarray(self.rbar, dtype=float)
        self.tbar = np.asarray(self.tbar, dtype=float).reshape(2)

    def rotation(self):
        """Full rotation with the third row completed by the cross product."""
        return lift_stiefel(self.rbar)


def default_lambda(basis):
    """Tikhonov weight tied to the shape-variance scale (heuristic default)."""
    if basis.num_modes == 0:
        return 0.0
    mean_eig = float(np.mean(basis.eigenvalues))
    if mean_eig <= 0.0:
        return 0.0
    return 1e-2 / mean_eig


def default_mu(w, d):
    """Spectral-norm weight 0.01 * ||(W - mean) D^(1/2)||_F.

    Centering removes the principal-point offset, which would otherwise
    dominate the Frobenius norm and over-shrink the relaxed pose.
    """
    pos = d > 0.0
    centered = w[:, pos] - (w[:, pos] @ d[pos] / d[pos].sum())[:, None]
    return 0.01 * float(np.sqrt(np.sum(d[pos] * np.sum(centered**2, axis=0))))


def _cleaned_w(obs):
    """Copy of W with zero-confidence columns (possible sentinels) zeroed."""
    w = np.array(obs.w, dtype=float)
    w[:, obs.d <= 0.0] = 0.0
    return w


def cost_wp(obs, basis, s, c, rbar, tbar, lam):
    """Weighted weak-perspective cost with Tikhonov penalty on c."""
    c = np.asarray(c, dtype=float).reshape(-1)
    shape = compose_shape(basis, c)
    w = _cleaned_w(obs)
    tbar = np.asarray(tbar, dtype=float).reshape(2)
    resid = w - s * (np.asarray(rbar, dtype=float) @ shape) - tbar[:, None]
    return float(
        0.5 * np.sum(obs.d * np.sum(resid**2, axis=0)) + 0.5 * lam * np.sum(c**2)
    )


def wp_cost_gradient(obs, basis, s, c, rbar, tbar, lam):
    """Analytic gradient of cost_wp.

    Returns (g_s, g_c, g_tbar, g_omega) where g_omega is the gradient with
    respect to a right tangent perturbation rbar @ exp(hat(omega)).
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    rbar = np.asarray(rbar, dtype=float)
    tbar = np.asarray(tbar, dtype=float).reshape(2)
    shape = compose_shape(basis, c)
    w = _cleaned_w(obs)
    d = obs.d
    proj = rbar @ shape
    resid = w - s * proj - tbar[:, None]
    wr = resid * d

    g_s = -float(np.sum(wr * proj))
    g_tbar = -np.sum(wr, axis=1)
    g_c = np.array(
        [-s * float(np.sum(wr * (rbar @ mode))) for mode in basis.modes]
    ) + lam * c
    g_omega = np.array(
        [-s * float(np.sum(wr * (rbar @ hat(ek) @ shape))) for ek in np.eye(3)]
    )
    return g_s, g_c, g_tbar, g_omega


def _prox_spectral(m, t):
    """Proximal operator of t * (spectral norm) for a 2x3 matrix."""
    u, sv, vt = np.linalg.svd(m, full_matrices=False)
    s1, s2 = sv
    if s1 - t >= s2:
        new = np.array([s1 - t, s2])
    else:
        tied = max(0.0, (s1 + s2 - t) / 2.0)
        new = np.array([tied, tied])
    return (u * new) @ vt


def convex_init(obs, b0, mu, max_iterations=5000, tol=1e-10):
    """Globally solve the relaxed problem (c = 0, spectral-norm regularizer).

    Minimizes 0.5 ||(W - M B0 - tbar 1^T) D^(1/2)||_F^2 + mu ||M||_2 over the
    unconstrained 2x3 matrix M by proximal gradient with the offset eliminated
    in closed form, then factors M into scale and orthonormal rows. Returns
    both reflection-consistent candidates as a list of (s, rbar, tbar) tuples
    ranked by the unrelaxed cost at c = 0.
    """
    d = np.asarray(obs.d, dtype=float)
    dsum = d.sum()
    if dsum <= 0.0:
        raise InsufficientConstraintsError("all keypoint confidences are zero")
    if np.count_nonzero(d > 0.0) < 3:
        raise InsufficientConstraintsError("need at least 3 weighted keypoints")
    w = _cleaned_w(obs)
    b0 = np.asarray(b0, dtype=float)

    wbar = w @ d / dsum
    bbar = b0 @ d / dsum
    wc = w - wbar[:, None]
    bc = b0 - bbar[:, None]
    gram = bc @ (d[:, None] * bc.T)
    eigs = np.linalg.eigvalsh(gram)
    if eigs[-1] <= 0.0 or eigs[1] <= 1e-12 * eigs[-1]:
        raise DegenerateGeometryError("mean shape is (near-)collinear")
    step = 1.0 / eigs[-1]

    m = np.zeros((2, 3))

    def objective(mm):
        r = wc - mm @ bc
        return 0.5 * np.sum(d * np.sum(r**2, axis=0)) + mu * np.linalg.svd(
            mm, compute_uv=False
        )[0]

    prev = objective(m)
    for _ in range(max_iterations):
        grad = ((m @ bc - wc) * d) @ bc.T
        m = _prox_spectral(m - step * grad, step * mu)
        cur = objective(m)
        if prev - cur < tol * max(prev, 1e-300):
            break
        prev = cur

    u, sv, vt = np.linalg.svd(m, full_matrices=False)
    s_est = float((sv[0] + sv[1]) / 2.0)
    rbar_a = u @ vt
    rbar_b = rbar_a @ np.diag([1.0, 1.0, -1.0])

    candidates = []
    for rbar in (rbar_a, rbar_b):
        tbar = wbar - s_est * (rbar @ bbar)
        resid = wc - s_est * (rbar @ bc)  # offset eliminated at weighted means
        cost = 0.5 * np.sum(d * np.sum(resid**2, axis=0))
        candidates.append((cost, s_est, rbar, tbar))
    candidates.sort(key=lambda t: t[0])
    return [(s, rbar, tbar) for _, s, rbar, tbar in candidates]


def _update_rbar(w, d, s, shape, tbar, rbar, max_inner=50):
    """Exact-descent update of the orthonormal rows with everything else fixed.

    Alternates between completing the missing image-plane depth coordinate and
    a full weighted Procrustes solve; each pass cannot increase the 2D cost.
    """
    a = w - tbar[:, None]
    b = s * shape
    rot = lift_stiefel(rbar)
    prev = None
    for _ in range(max_inner):
        a3 = np.vstack([a, rot[2] @ b])
        rot = weighted_procrustes(a3, b, d)
        cost = np.sum(d * np.sum((a - rot[:2] @ b) ** 2, axis=0))
        if prev is not None and prev - cost <= 1e-14 * max(prev, 1.0):
            break
        prev = cost
    return rot[:2]


def _bcd_wp(w, d, obs, basis, s, rbar, tbar, lam, opts):
    dsum = d.sum()
    k = basis.num_modes
    c = np.zeros(k)
    s = max(float(s), 1e-12)

    def cost():
        return cost_wp(obs, basis, s, c, rbar, tbar, lam)

    block_costs = [cost()] if opts.record_block_costs else None
    current = cost()
    iterations = 0
    converged = False

    def record():
        if block_costs is not None:
            block_costs.append(cost())

    for iterations in range(1, opts.max_iterations + 1):
        prev = current
        shape = compose_shape(basis, c)

        # scale block (closed-form weighted least squares)
        proj = rbar @ shape
        den = float(np.sum(d * np.sum(proj**2, axis=0)))
        if den <= 0.0:
            raise DegenerateGeometryError("projected shape collapsed to a point")
        num = float(np.sum(d * np.sum((w - tbar[:, None]) * proj, axis=0)))
        s = max(num / den, 1e-12)
        record()

        # coefficient block (weighted ridge least squares)
        if k > 0:
            pmodes = s * np.stack([rbar @ mode for mode in basis.modes])  # k x 2 x p
            r0 = w - s * (rbar @ basis.b0) - tbar[:, None]
            gram = np.einsum("p,jap,lap->jl", d, pmodes, pmodes)
            rhs = np.einsum("p,jap,ap->j", d, pmodes, r0)
            c = np.linalg.solve(gram + lam * np.eye(k), rhs)
            shape = compose_shape(basis, c)
            record()

        # offset block (weighted mean of residuals)
        tbar = (w - s * (rbar @ shape)) @ d / dsum
        record()

        # rotation-rows block
        rbar = _update_rbar(w, d, s, shape, tbar, rbar)
        record()

        current = cost()
        if prev - current < opts.relative_tolerance * max(prev, 1e-300):
            converged = True
            break

    return WPEstimate(
        s=s,
        c=c,
        rbar=rbar,
        tbar=tbar,
        final_cost=current,
        iterations=iterations,
        converged=converged,
        block_costs=block_costs,
    )


def solve_wp(obs, basis, opts=None):
    """Fit the weak-perspective model to confidence-weighted keypoints.

    Runs block coordinate descent from both reflection candidates of the
    convex initialization and returns the lower-cost estimate.
    """
    opts = opts or SolverOptions()
    d = np.asarray(obs.d, dtype=float)
    if obs.num_keypoints != basis.num_keypoints:
        raise ValueError("observation and basis keypoint counts differ")
    if np.count_nonzero(d > 0.0) < 4:
        raise InsufficientConstraintsError(
            "need at least 4 keypoints with positive confidence"
        )
    w = _cleaned_w(obs)

    pos = d > 0.0
    wpos = w[:, pos]
    centered = wpos - (wpos @ d[pos] / d[pos].sum())[:, None]
    sv = np.linalg.svd(centered * np.sqrt(d[pos]), compute_uv=False)
    if sv[1] <= 1e-9 * max(sv[0], 1e-300):
        raise DegenerateGeometryError("weighted observed keypoints are collinear")

    lam = opts.lam if opts.lam is not None else default_lambda(basis)
    mu = opts.mu if opts.mu is not None else default_mu(w, d)

    results = []
    for s0, rbar0, tbar0 in convex_init(obs, basis.b0, mu):
        results.append(_bcd_wp(w, d, obs, basis, s0, rbar0, tbar0, lam, opts))

    best = results[0]
    for other in results[1:]:
        if other.final_cost < best.final_cost:
            best = other
        elif other.final_cost == best.final_cost:
            # exact tie: prefer the candidate whose implied third row looks at +z
            if np.cross(other.rbar[0], other.rbar[1])[2] > 0.0 >= np.cross(
                best.rbar[0], best.rbar[1]
            )[2]:
                best = other
    return best
