"""Full-perspective fit: rotation, translation, shape coefficients, depths.

Minimizes the weighted cost with the ray residual W~ Z - R S - T 1^T, where
W~ holds normalized homogeneous keypoint coordinates and Z per-point depths.
Every block (Z, joint R/T, c) has a closed-form update; the solve is
initialized from the weak-perspective solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCameraError, InsufficientConstraintsError
from .geometry import hat, normalize_keypoints, weighted_procrustes
from .observations import KeypointObservations
from .shape_basis import compose_shape
from .wp_solver import SolverOptions, default_lambda, solve_wp, _cleaned_w

DEPTH_FLOOR_FACTOR = 1e-6


@dataclass
class FPEstimate:
    """Full-perspective solution with per-keypoint depths and fit diagnostics."""

    rotation: np.ndarray
    translation: np.ndarray
    c: np.ndarray
    depths: np.ndarray
    final_cost: float
    iterations: int
    converged: bool
    diagnostic: str = ""
    block_costs: list = field(default=None, repr=False)

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = np.asarray(self.translation, dtype=float).reshape(3)
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.depths = np.asarray(self.depths, dtype=float).reshape(-1)


def cost_fp(obs, intrinsics, basis, rotation, translation, c, depths, lam):
    """Weighted ray-residual cost with Tikhonov penalty on c."""
    c = np.asarray(c, dtype=float).reshape(-1)
    shape = compose_shape(basis, c)
    wt = normalize_keypoints(_cleaned_w(obs), intrinsics)
    translation = np.asarray(translation, dtype=float).reshape(3)
    depths = np.asarray(depths, dtype=float).reshape(-1)
    resid = wt * depths - np.asarray(rotation, dtype=float) @ shape - translation[:, None]
    return float(
        0.5 * np.sum(obs.d * np.sum(resid**2, axis=0)) + 0.5 * lam * np.sum(c**2)
    )


def fp_cost_gradient(obs, intrinsics, basis, rotation, translation, c, depths, lam):
    """Analytic gradient of cost_fp.

    Returns (g_t, g_c, g_z, g_omega); g_omega is with respect to a right
    tangent perturbation rotation @ exp(hat(omega)).
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    rotation = np.asarray(rotation, dtype=float)
    translation = np.asarray(translation, dtype=float).reshape(3)
    depths = np.asarray(depths, dtype=float).reshape(-1)
    shape = compose_shape(basis, c)
    wt = normalize_keypoints(_cleaned_w(obs), intrinsics)
    d = obs.d
    resid = wt * depths - rotation @ shape - translation[:, None]
    wr = resid * d

    g_t = -np.sum(wr, axis=1)
    g_z = d * np.sum(resid * wt, axis=0)
    g_c = np.array(
        [-float(np.sum(wr * (rotation @ mode))) for mode in basis.modes]
    ) + lam * c
    g_omega = np.array(
        [-float(np.sum(wr * (rotation @ hat(ek) @ shape))) for ek in np.eye(3)]
    )
    return g_t, g_c, g_z, g_omega


def wp_to_fp_init(wp, intrinsics=None):
    """Rotation/translation seed from a weak-perspective estimate.

    The weak-perspective scale acts as an inverse depth. Pass ``intrinsics``
    when the weak-perspective fit was done in pixel units; leave it None when
    it was done in normalized coordinates.
    """
    rotation = wp.rotation()
    if intrinsics is None:
        s_n = wp.s
        tx, ty = wp.tbar
    else:
        s_n = wp.s / np.sqrt(intrinsics.fx * intrinsics.fy)
        ty = (wp.tbar[1] - intrinsics.cy) / intrinsics.fy
        tx = (wp.tbar[0] - intrinsics.cx - intrinsics.skew * ty) / intrinsics.fx
    translation = np.array([tx / s_n, ty / s_n, 1.0 / s_n])
    return rotation, translation


def _coplanarity_diagnostic(b0):
    centered = b0 - b0.mean(axis=1, keepdims=True)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[2] <= 1e-6 * max(sv[0], 1e-300):
        return "mean shape keypoints are (near-)coplanar; pose is ill-posed"
    return ""


def solve_fp(obs, intrinsics, basis, opts=None, init=None):
    """Fit the full-perspective model to confidence-weighted pixel keypoints.

    ``init`` may be a (rotation, translation) pair; otherwise the solver runs
    the weak-perspective solver on normalized coordinates to initialize.
    """
    opts = opts or SolverOptions()
    d = np.asarray(obs.d, dtype=float)
    if obs.num_keypoints != basis.num_keypoints:
        raise ValueError("observation and basis keypoint counts differ")
    if np.count_nonzero(d > 0.0) < 4:
        raise InsufficientConstraintsError(
            "need at least 4 keypoints with positive confidence"
        )
    lam = opts.lam if opts.lam is not None else default_lambda(basis)
    diagnostic = _coplanarity_diagnostic(basis.b0)

    w = _cleaned_w(obs)
    wt = normalize_keypoints(w, intrinsics)
    wt_sq = np.sum(wt**2, axis=0)
    dsum = d.sum()
    k = basis.num_modes

    if init is not None:
        rotation, translation = init
        rotation = np.asarray(rotation, dtype=float)
        translation = np.asarray(translation, dtype=float).reshape(3)
        c = np.zeros(k)
    else:
        obs_n = KeypointObservations(wt[:2], d, obs.keypoint_names)
        wp = solve_wp(obs_n, basis, opts)
        rotation, translation = wp_to_fp_init(wp)
        c = wp.c.copy()

    def cost(rot, t, cc, z):
        resid = wt * z - rot @ compose_shape(basis, cc) - t[:, None]
        return float(
            0.5 * np.sum(d * np.sum(resid**2, axis=0)) + 0.5 * lam * np.sum(cc**2)
        )

    shape = compose_shape(basis, c)
    depths = np.sum(wt * (rotation @ shape + translation[:, None]), axis=0) / wt_sq

    block_costs = (
        [cost(rotation, translation, c, depths)] if opts.record_block_costs else None
    )
    current = cost(rotation, translation, c, depths)
    iterations = 0
    converged = False

    def record():
        if block_costs is not None:
            block_costs.append(cost(rotation, translation, c, depths))

    for iterations in range(1, opts.max_iterations + 1):
        prev = current
        shape = compose_shape(basis, c)

        # depth block: per-point closed form, clamped to a positive floor
        floor = DEPTH_FLOOR_FACTOR * max(np.linalg.norm(translation), 1e-12)
        depths = np.sum(wt * (rotation @ shape + translation[:, None]), axis=0) / wt_sq
        depths = np.maximum(depths, floor)
        record()

        # joint rotation/translation block: weighted Procrustes about the
        # weighted centroids, then the exact translation
        target = wt * depths
        xbar = target @ d / dsum
        sbar = shape @ d / dsum
        rotation = weighted_procrustes(target - xbar[:, None], shape - sbar[:, None], d)
        translation = xbar - rotation @ sbar
        record()

        # coefficient block: weighted ridge least squares
        if k > 0:
            pmodes = np.stack([rotation @ mode for mode in basis.modes])  # k x 3 x p
            r0 = target - rotation @ basis.b0 - translation[:, None]
            gram = np.einsum("p,jap,lap->jl", d, pmodes, pmodes)
            rhs = np.einsum("p,jap,ap->j", d, pmodes, r0)
            c = np.linalg.solve(gram + lam * np.eye(k), rhs)
            record()

        current = cost(rotation, translation, c, depths)
        if prev - current < opts.relative_tolerance * max(prev, 1e-300):
            converged = True
            break

    floor = DEPTH_FLOOR_FACTOR * max(np.linalg.norm(translation), 1e-12)
    clamped = (d > 0.0) & (depths <= floor * (1.0 + 1e-9))
    if np.any(clamped):
        raise BehindCameraError(
            f"{int(np.count_nonzero(clamped))} keypoint depth(s) pinned at the "
            "positivity floor at convergence"
        )

    if diagnostic:
        converged = False
    return FPEstimate(
        rotation=rotation,
        translation=translation,
        c=c,
        depths=depths,
        final_cost=current,
        iterations=iterations,
        converged=converged,
        diagnostic=diagnostic,
        block_costs=block_costs,
    )
