"""Vectorised evaluation of kinematics and locked-inertia quantities over
many shape samples at once.

These kernels implement exactly the same formulas as the scalar routines in
``kinematics`` and ``dynamics`` (the test suite asserts agreement to
round-off); they exist because time-driven integrations and grid scans
evaluate the same small expressions tens of thousands of times, where numpy
per-call overhead dominates.  Batched Cholesky keeps the SPD failure gate of
the scalar path.
"""

from __future__ import annotations

import numpy as np

from .model import Model

__all__ = ["fk_batch", "com_batch", "locked_coupling_batch", "connection_batch"]

_EYE3 = np.eye(3)


def _hat_batch(p: np.ndarray) -> np.ndarray:
    out = np.zeros(p.shape[:-1] + (3, 3))
    out[..., 0, 1] = -p[..., 2]
    out[..., 0, 2] = p[..., 1]
    out[..., 1, 0] = p[..., 2]
    out[..., 1, 2] = -p[..., 0]
    out[..., 2, 0] = -p[..., 1]
    out[..., 2, 1] = p[..., 0]
    return out


def fk_batch(model: Model, S: np.ndarray):
    """Base-relative link poses for every row of S (shape (M, n_J)).

    Returns per-link rotation stacks (M, 3, 3) and origin stacks (M, 3),
    indexed like ``model.links``.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    m = S.shape[0]
    n_links = len(model.links)
    Rs: list[np.ndarray] = [None] * n_links  # type: ignore[list-item]
    ps: list[np.ndarray] = [None] * n_links  # type: ignore[list-item]
    Rs[model._base_idx] = np.broadcast_to(_EYE3, (m, 3, 3))
    ps[model._base_idx] = np.zeros((m, 3))
    for li in model.topo_order:
        pj = model.parent_joint[li]
        if pj is None:
            continue
        joint = model.joints[pj]
        th = S[:, pj]
        R0, p0 = joint.origin.rotation, joint.origin.origin
        if joint.joint_type == "revolute":
            Rj = (
                _EYE3
                + np.sin(th)[:, None, None] * joint._axis_hat
                + (1.0 - np.cos(th))[:, None, None] * joint._axis_hat2
            )
            local_R = R0 @ Rj
            local_p = np.broadcast_to(p0, (m, 3))
        else:
            local_R = np.broadcast_to(R0, (m, 3, 3))
            local_p = p0 + th[:, None] * (R0 @ joint.axis)
        pi = model._joint_parent[pj]
        Rs[li] = Rs[pi] @ local_R
        ps[li] = ps[pi] + (Rs[pi] @ local_p[..., None])[..., 0]
    return Rs, ps


def com_batch(model: Model, Rs, ps) -> np.ndarray:
    """Mechanism CoM in base coordinates for every sample, (M, 3)."""
    acc = np.zeros_like(ps[0])
    for i, link in enumerate(model.links):
        acc = acc + link.inertia.mass * ((Rs[i] @ link.inertia.com) + ps[i])
    return acc / model.total_mass


def locked_coupling_batch(model: Model, S: np.ndarray):
    """Locked inertia (M, 6, 6) and coupling (M, 6, n_J) in base coordinates,
    plus the FK stacks they were built from."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    m = S.shape[0]
    n = model.n_j
    Rs, ps = fk_batch(model, S)

    comp: list[np.ndarray] = [None] * len(model.links)  # type: ignore[list-item]
    for i in range(len(model.links)):
        F = np.zeros((m, 6, 6))
        F[:, :3, :3] = Rs[i]
        F[:, 3:, :3] = _hat_batch(ps[i]) @ Rs[i]
        F[:, 3:, 3:] = Rs[i]
        comp[i] = F @ model._inertia6[i] @ F.swapaxes(1, 2)
    for li in reversed(model.topo_order):
        pj = model.parent_joint[li]
        if pj is not None:
            comp[model._joint_parent[pj]] += comp[li]

    coupling = np.zeros((m, 6, n))
    for j, joint in enumerate(model.joints):
        ci = model._joint_child[j]
        phi_lin, phi_ang = joint._phi[:3], joint._phi[3:]
        zeta = np.zeros((m, 6))
        wa = Rs[ci] @ phi_ang
        zeta[:, :3] = Rs[ci] @ phi_lin + np.cross(ps[ci], wa)
        zeta[:, 3:] = wa
        coupling[:, :, j] = (comp[ci] @ zeta[..., None])[..., 0]
    return comp[model._base_idx], coupling, Rs, ps


def connection_batch(model: Model, S: np.ndarray) -> np.ndarray:
    """Connection matrices for every row of S, as (M, 6, n_J)."""
    locked, coupling, _, _ = locked_coupling_batch(model, S)
    L = np.linalg.cholesky(locked)
    y = np.linalg.solve(L, coupling)
    return np.linalg.solve(L.swapaxes(1, 2), y)


def cross6_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise 6D motion cross product for (M, 6) stacks."""
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., :3] = np.cross(a[..., 3:], b[..., :3]) + np.cross(a[..., :3], b[..., 3:])
    out[..., 3:] = np.cross(a[..., 3:], b[..., 3:])
    return out
