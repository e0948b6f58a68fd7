"""Rigid-model PnP baseline: DLT initialization plus damped Gauss-Newton.

Mirrors the greedy comparison protocol: heatmap-peak keypoints, a fixed 3D
model, and no confidence weighting. Planar configurations are rejected
(a documented limitation relative to EPnP).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BehindCameraError,
    DegenerateGeometryError,
    InsufficientConstraintsError,
)
from .geometry import normalize_keypoints, project_to_so3, so3_exp


@dataclass
class PnPEstimate:
    rotation: np.ndarray
    translation: np.ndarray
    reprojection_rmse: float


def _dlt_pose(points3d, points2d_norm):
    """Pose from the direct linear transform on normalized coordinates."""
    p = points3d.shape[1]
    a = np.zeros((2 * p, 12))
    for i in range(p):
        xh = np.append(points3d[:, i], 1.0)
        x, y = points2d_norm[0, i], points2d_norm[1, i]
        a[2 * i, 0:4] = xh
        a[2 * i, 8:12] = -x * xh
        a[2 * i + 1, 4:8] = xh
        a[2 * i + 1, 8:12] = -y * xh
    _, _, vt = np.linalg.svd(a)
    proj = vt[-1].reshape(3, 4)
    # sign: most points should end up in front of the camera
    depths = proj[2, :3] @ points3d + proj[2, 3]
    if np.median(depths) < 0.0:
        proj = -proj
    m = proj[:, :3]
    sv = np.linalg.svd(m, compute_uv=False)
    scale = 1.0 / np.mean(sv)
    rotation = project_to_so3(m)
    translation = scale * proj[:, 3]
    return rotation, translation


def _reprojection_residuals(points3d, points2d, intrinsics, rotation, translation):
    cam = rotation @ points3d + translation[:, None]
    z = cam[2]
    if np.any(z <= 0.0):
        return None, None
    xn = cam[0] / z
    yn = cam[1] / z
    px = intrinsics.fx * xn + intrinsics.skew * yn + intrinsics.cx
    py = intrinsics.fy * yn + intrinsics.cy
    resid = np.vstack([px, py]) - points2d
    return resid.T.ravel(), cam


def _rmse(residuals, p):
    return float(np.sqrt(np.sum(residuals**2) / p))


def solve_pnp(points3d, points2d, intrinsics, max_iterations=100):
    """Estimate pose of a rigid 3xp model from 2xp pixel keypoints.

    DLT on normalized coordinates, projected to SO(3), then refined by
    Levenberg-damped Gauss-Newton on unweighted pixel reprojection error.
    """
    points3d = np.asarray(points3d, dtype=float)
    points2d = np.asarray(points2d, dtype=float)
    if points3d.ndim != 2 or points3d.shape[0] != 3:
        raise ValueError("points3d must be 3xp")
    if points2d.shape != (2, points3d.shape[1]):
        raise ValueError("points2d must be 2xp matching points3d")
    p = points3d.shape[1]
    if p < 6:
        raise InsufficientConstraintsError("PnP baseline needs at least 6 points")
    centered = points3d - points3d.mean(axis=1, keepdims=True)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[2] <= 1e-6 * max(sv[0], 1e-300):
        raise DegenerateGeometryError(
            "coplanar 3D points: the DLT baseline does not handle planar scenes"
        )

    norm2d = normalize_keypoints(points2d, intrinsics)[:2]
    rotation, translation = _dlt_pose(points3d, norm2d)

    residuals, cam = _reprojection_residuals(
        points3d, points2d, intrinsics, rotation, translation
    )
    if residuals is None:
        raise BehindCameraError("DLT initialization places points behind the camera")
    rmse = _rmse(residuals, p)

    damping = 1e-3
    for _ in range(max_iterations):
        z = cam[2]
        jac = np.zeros((2 * p, 6))
        for i in range(p):
            u = cam[:, i]
            dpi = np.array(
                [
                    [
                        intrinsics.fx / u[2],
                        intrinsics.skew / u[2],
                        -(intrinsics.fx * u[0] + intrinsics.skew * u[1]) / u[2] ** 2,
                    ],
                    [0.0, intrinsics.fy / u[2], -intrinsics.fy * u[1] / u[2] ** 2],
                ]
            )
            # rotation perturbed as R <- R exp(hat(omega))
            xi = points3d[:, i]
            du_domega = -rotation @ np.array(
                [[0.0, -xi[2], xi[1]], [xi[2], 0.0, -xi[0]], [-xi[1], xi[0], 0.0]]
            )
            jac[2 * i : 2 * i + 2, :3] = dpi @ du_domega
            jac[2 * i : 2 * i + 2, 3:] = dpi
        gradient = jac.T @ residuals
        if np.linalg.norm(gradient) < 1e-12:
            break
        hess = jac.T @ jac
        step = np.linalg.solve(hess + damping * np.eye(6), -gradient)
        cand_rot = rotation @ so3_exp(step[:3])
        cand_t = translation + step[3:]
        cand_res, cand_cam = _reprojection_residuals(
            points3d, points2d, intrinsics, cand_rot, cand_t
        )
        if cand_res is not None and _rmse(cand_res, p) < rmse:
            improvement = rmse - _rmse(cand_res, p)
            rotation, translation = cand_rot, cand_t
            residuals, cam = cand_res, cand_cam
            rmse = _rmse(residuals, p)
            damping = max(damping / 10.0, 1e-12)
            if improvement < 1e-14 * max(rmse, 1.0):
                break
        else:
            damping *= 10.0
            if damping > 1e12:
                break

    if np.any(cam[2] <= 0.0):
        raise BehindCameraError("refined pose places points behind the camera")
    return PnPEstimate(rotation=rotation, translation=translation, reprojection_rmse=rmse)
