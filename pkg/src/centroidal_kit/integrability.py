"""Mechanical connection, its curvature, flatness of the centroidal frame,
and holonomy of shape-space loops.

The centroidal frame is a function of the configuration alone exactly when
the curvature

    B_ij = dA_i/ds_j - dA_j/ds_i + A_i x A_j

of the connection ``A(s) = locked_inertia(s)^-1 coupling(s)`` vanishes for
every joint pair.  When it does, the frame can be built constructively by
integrating the connection one joint axis at a time; when it does not,
closed shape loops leave a net frame drift behind, and for small coordinate
squares that drift is the curvature times the enclosed area.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._batch import connection_batch, cross6_batch
from .centroidal import CentroidalTrajectory, integrate_centroidal_frame
from .dynamics import mass_partition
from .kinematics import com_in_base
from .model import Model, State, VelocityState, serialize_model
from .spatial import SMALL_ANGLE, Transform, cross6, dexpinv, exp_se3, hat3, vee6

__all__ = [
    "connection",
    "curvature",
    "curvature_all_pairs",
    "FlatnessReport",
    "flatness_report",
    "FrameFunction",
    "construct_frame_function",
    "verify_frame_function",
    "HolonomyResult",
    "holonomy",
    "small_loop_check",
    "log_so3",
    "log_se3",
]


def log_so3(R) -> np.ndarray:
    """Rotation vector of a rotation matrix (inverse of the matrix exponential)."""
    R = np.asarray(R, dtype=float)
    cos_angle = float(np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0))
    angle = float(np.arccos(cos_angle))
    raw = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if angle < SMALL_ANGLE:
        return raw
    if np.pi - angle < 1e-6:
        # Near pi the off-diagonal difference degenerates; recover the axis
        # from the symmetric part instead.
        S = 0.5 * (R + np.eye(3))
        axis = np.sqrt(np.clip(np.diag(S), 0.0, None))
        k = int(np.argmax(axis))
        if axis[k] > 0.0:
            axis[(k + 1) % 3] = S[k, (k + 1) % 3] / axis[k]
            axis[(k + 2) % 3] = S[k, (k + 2) % 3] / axis[k]
        axis /= np.linalg.norm(axis)
        if raw @ axis < 0.0:
            axis = -axis
        return angle * axis
    return (angle / np.sin(angle)) * raw


def log_se3(H: Transform) -> np.ndarray:
    """Twist whose exponential is the given transform (linear part first)."""
    w = log_so3(H.rotation)
    theta = float(np.linalg.norm(w))
    K = hat3(w)
    K2 = K @ K
    if theta < SMALL_ANGLE:
        Vinv = np.eye(3) - 0.5 * K + (1.0 / 12.0) * K2
    else:
        coeff = (1.0 - theta * np.sin(theta) / (2.0 * (1.0 - np.cos(theta)))) / (theta * theta)
        Vinv = np.eye(3) - 0.5 * K + coeff * K2
    return np.concatenate((Vinv @ H.origin, w))


def connection(model: Model, s) -> np.ndarray:
    """Mechanical connection: 6 x n_J matrix solving locked @ A = coupling.

    Columns are the base-frame locked-velocity corrections per unit joint
    rate; the matrix depends on the shape only.
    """
    parts = mass_partition(model, s)
    if model.n_j == 0:
        return np.zeros((6, 0))
    return cho_solve(cho_factor(parts.locked, lower=True), parts.coupling)


def curvature(model: Model, s, i: int, j: int, h: float = 1e-4) -> np.ndarray:
    """Curvature entry B_ij of the connection at shape s (central differences)."""
    n = model.n_j
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"joint indices ({i}, {j}) out of range for n_J = {n}")
    if h <= 0.0:
        raise ValueError("h must be positive")
    s = np.asarray(s, dtype=float)
    ei = np.zeros(n)
    ei[i] = h
    ej = np.zeros(n)
    ej[j] = h
    dAi_dsj = (connection(model, s + ej)[:, i] - connection(model, s - ej)[:, i]) / (2.0 * h)
    dAj_dsi = (connection(model, s + ei)[:, j] - connection(model, s - ei)[:, j]) / (2.0 * h)
    A = connection(model, s)
    return dAi_dsj - dAj_dsi + cross6(A[:, i], A[:, j])


def _curvature_probes(n: int, shapes: np.ndarray, h: float) -> np.ndarray:
    """Stencil shapes per sample: the centre plus +-h along every axis."""
    p = shapes.shape[0]
    probes = np.empty((p, 2 * n + 1, n))
    probes[:, 0] = shapes
    for k in range(n):
        probes[:, 1 + 2 * k] = shapes
        probes[:, 1 + 2 * k, k] += h
        probes[:, 2 + 2 * k] = shapes
        probes[:, 2 + 2 * k, k] -= h
    return probes


def _pair_norms(model: Model, shapes: np.ndarray, h: float) -> dict[tuple[int, int], np.ndarray]:
    """Curvature norms for every i<j pair at every row of ``shapes``."""
    n = model.n_j
    probes = _curvature_probes(n, shapes, h)
    A = connection_batch(model, probes.reshape(-1, n)).reshape(probes.shape[0], 2 * n + 1, 6, n)
    A0 = A[:, 0]
    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            dAi_dsj = (A[:, 1 + 2 * j, :, i] - A[:, 2 + 2 * j, :, i]) / (2.0 * h)
            dAj_dsi = (A[:, 1 + 2 * i, :, j] - A[:, 2 + 2 * i, :, j]) / (2.0 * h)
            B = dAi_dsj - dAj_dsi + cross6_batch(A0[:, :, i], A0[:, :, j])
            out[(i, j)] = np.linalg.norm(B, axis=1)
    return out


def curvature_all_pairs(model: Model, s, h: float = 1e-4) -> np.ndarray:
    """All curvature entries at one shape, as an (n_J, n_J, 6) array.

    Shares the 2 n_J + 1 connection evaluations across the pairs, which is
    what grid scans want.
    """
    n = model.n_j
    s = np.asarray(s, dtype=float)
    probes = _curvature_probes(n, s[None, :], h)[0]
    A = connection_batch(model, probes)
    A0 = A[0]
    out = np.zeros((n, n, 6))
    for i in range(n):
        for j in range(i + 1, n):
            dAi_dsj = (A[1 + 2 * j, :, i] - A[2 + 2 * j, :, i]) / (2.0 * h)
            dAj_dsi = (A[1 + 2 * i, :, j] - A[2 + 2 * i, :, j]) / (2.0 * h)
            b = dAi_dsj - dAj_dsi + cross6(A0[:, i], A0[:, j])
            out[i, j] = b
            out[j, i] = -b
    return out


@dataclass(frozen=True, eq=False)
class FlatnessReport:
    """Outcome of a sampled flatness decision.

    The verdict is sampling-based, not a proof: it reports the largest
    curvature norm seen on the stated grid and compares it to ``tol``.
    """

    model_hash: str
    axes: tuple[tuple[float, float, int], ...]
    h: float
    tol: float
    max_norm: float
    flat: bool
    worst_pair: tuple[int, int] | None
    worst_shape: np.ndarray | None
    pair_max: dict[tuple[int, int], float]

    def to_json(self) -> str:
        payload = {
            "model_hash": self.model_hash,
            "grid": [{"lo": lo, "hi": hi, "count": c} for lo, hi, c in self.axes],
            "h": self.h,
            "tol": self.tol,
            "max_norm": self.max_norm,
            "verdict": "flat" if self.flat else "non-flat",
            "worst_pair": list(self.worst_pair) if self.worst_pair is not None else None,
            "worst_shape": [float(x) for x in self.worst_shape]
            if self.worst_shape is not None
            else None,
            "pair_max": {f"{i},{j}": v for (i, j), v in sorted(self.pair_max.items())},
            "note": "sampled verdict: max curvature norm over the stated grid vs tol",
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def model_hash(model: Model) -> str:
    return hashlib.sha256(serialize_model(model).encode("utf-8")).hexdigest()[:16]


def default_grid(model: Model, count: int = 20) -> tuple[tuple[float, float, int], ...]:
    """Per-axis (lo, hi, count): one turn for revolute joints, +-1 m prismatic."""
    axes = []
    for joint in model.joints:
        span = np.pi if joint.joint_type == "revolute" else 1.0
        axes.append((-span, span, count))
    return tuple(axes)


def flatness_report(
    model: Model,
    grid: Sequence[tuple[float, float, int]] | None = None,
    tol: float = 1e-7,
    h: float = 1e-4,
    n_threads: int | None = None,
) -> FlatnessReport:
    """Scan the shape grid and decide flatness at the given tolerance.

    Models with fewer than two joints have no curvature pairs and are flat
    by construction.  The reduction over grid points is a deterministic max
    (first occurrence wins ties), independent of how the scan is scheduled.
    """
    axes = tuple(grid) if grid is not None else default_grid(model)
    if model.n_j != len(axes):
        raise ValueError(f"grid has {len(axes)} axes, model has {model.n_j} joints")
    digest = model_hash(model)
    n = model.n_j
    if n <= 1:
        return FlatnessReport(digest, axes, h, tol, 0.0, True, None, None, {})

    points = [np.linspace(lo, hi, count) for lo, hi, count in axes]
    mesh = np.stack([g.ravel() for g in np.meshgrid(*points, indexing="ij")], axis=-1)

    if n_threads is None:
        n_threads = max(1, int(os.environ.get("CENTROIDAL_KIT_THREADS", "1")))
    if n_threads > 1:
        chunks = np.array_split(mesh, n_threads)
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            partials = list(pool.map(lambda c: _pair_norms(model, c, h), chunks))
        norms = {
            pair: np.concatenate([p[pair] for p in partials]) for pair in partials[0]
        }
    else:
        norms = _pair_norms(model, mesh, h)

    # Deterministic reduction: ties resolve to the first grid index in
    # lexicographic order, then to the lower pair.
    pair_max = {pair: float(values.max()) for pair, values in sorted(norms.items())}
    max_norm = 0.0
    worst_pair = None
    worst_shape = None
    for pair, values in sorted(norms.items()):
        k = int(np.argmax(values))
        if values[k] > max_norm:
            max_norm = float(values[k])
            worst_pair = pair
            worst_shape = np.array(mesh[k])
    return FlatnessReport(
        digest, axes, h, tol, max_norm, max_norm <= tol, worst_pair, worst_shape, pair_max
    )


def _advance_along_axis(
    model: Model, base_shape, column: int, delta: float, Y: Transform, n_steps: int
) -> Transform:
    """Advance Y by moving one shape coordinate: dY/dsigma = hat6(A_col) Y.

    The connection column is evaluated in one batch at every stage point
    (step endpoints and midpoints), then the Munthe-Kaas recursion runs over
    the cached values.
    """
    if delta == 0.0:
        return Y
    step = delta / n_steps
    sigmas = np.linspace(0.0, delta, 2 * n_steps + 1)
    probes = np.tile(np.asarray(base_shape, dtype=float), (sigmas.size, 1))
    probes[:, column] += sigmas
    cols = connection_batch(model, probes)[:, :, column]
    if not np.all(np.isfinite(cols)):
        raise ArithmeticError(f"connection became non-finite along axis {column}")
    for k in range(n_steps):
        k1 = cols[2 * k]
        v_mid = cols[2 * k + 1]
        k2 = dexpinv(0.5 * step * k1, v_mid)
        k3 = dexpinv(0.5 * step * k2, v_mid)
        k4 = dexpinv(step * k3, cols[2 * k + 2])
        Y = exp_se3((step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)) @ Y
    return Y


@dataclass(frozen=True, eq=False)
class FrameFunction:
    """Shape-to-frame map built by integrating the connection axis by axis.

    For a flat connection the result is path independent and its
    right-trivialised partial derivatives reproduce the connection columns;
    for a curved connection the object still evaluates but those properties
    fail.  ``axis_order`` controls the integration order (used to probe path
    independence).
    """

    model: Model
    n_steps: int = 200
    base_value: Transform | None = None
    axis_order: tuple[int, ...] | None = None

    def __call__(self, s) -> Transform:
        s = np.asarray(s, dtype=float).reshape(self.model.n_j)
        order = self.axis_order if self.axis_order is not None else tuple(range(self.model.n_j))
        Y = self.base_value if self.base_value is not None else Transform.identity()
        shape = np.zeros(self.model.n_j)
        for idx in order:
            Y = _advance_along_axis(self.model, shape, idx, float(s[idx]), Y, self.n_steps)
            shape[idx] = s[idx]
        return Y


def construct_frame_function(
    model: Model,
    n_steps: int = 200,
    base_value: Transform | None = None,
    axis_order: tuple[int, ...] | None = None,
) -> FrameFunction:
    """Frame function evaluator; meaningful as a frame map only on flat models."""
    return FrameFunction(model, n_steps, base_value, axis_order)


def verify_frame_function(model: Model, F: Callable[[np.ndarray], Transform], s, h: float = 1e-5) -> np.ndarray:
    """Residuals between the connection and F's right-trivialised derivatives.

    residual_i = | fd_i - A_i(s) | where fd_i is the central-difference
    right-trivialised derivative (F(s+h e_i) - F(s-h e_i)) F(s)^-1 / 2h.
    A flat connection drives every residual to the FD/integration noise
    floor; a curved one leaves finite residuals.
    """
    if h <= 0.0:
        raise ValueError("h must be positive")
    s = np.asarray(s, dtype=float).reshape(model.n_j)
    A = connection(model, s)
    center_inv = F(s).inverse().homogeneous()
    out = np.zeros(model.n_j)
    for i in range(model.n_j):
        e = np.zeros(model.n_j)
        e[i] = h
        diff = (F(s + e).homogeneous() - F(s - e).homogeneous()) @ center_inv / (2.0 * h)
        out[i] = float(np.linalg.norm(vee6(diff, tol=np.inf) - A[:, i]))
    return out


@dataclass(frozen=True, eq=False)
class HolonomyResult:
    """Net centroidal-frame drift left by a closed shape loop.

    ``drift`` is H_C(T) composed with the inverse of H_C(0) (base held
    fixed), ``rotation_angle`` the geodesic angle of its rotation part,
    ``origin_return`` the end-to-start origin distance, and
    ``com_tracking`` the largest distance between the frame origin and the
    CoM along the way (zero in exact arithmetic).
    """

    drift: Transform
    rotation_angle: float
    origin_return: float
    com_tracking: float
    trajectory: CentroidalTrajectory


def holonomy(
    model: Model,
    loop: Callable[[float], tuple[np.ndarray, np.ndarray]],
    period: float,
    dt: float = 1e-3,
) -> HolonomyResult:
    """Integrate the centroidal frame around a closed shape loop.

    The base is held at the identity with zero velocity, which is harmless:
    the drift is invariant to rigid motions of the whole mechanism.
    ``loop(t)`` returns (s, sdot) and must close: s(0) = s(period) within
    1e-9.
    """
    s0, _ = loop(0.0)
    sT, _ = loop(period)
    if float(np.max(np.abs(np.asarray(s0) - np.asarray(sT)))) > 1e-9:
        raise ValueError("shape loop does not close: s(0) != s(period)")

    identity = Transform.identity()
    zero6 = np.zeros(6)

    def state_fn(t: float):
        s, sdot = loop(t)
        return State(identity, s), VelocityState(zero6, sdot)

    n_steps = int(round(period / dt))
    times = np.linspace(0.0, period, n_steps + 1)
    traj = integrate_centroidal_frame(model, state_fn, times)

    tracking = 0.0
    for t, pose in zip(traj.times, traj.poses):
        s, _ = loop(float(t))
        tracking = max(tracking, float(np.linalg.norm(pose.origin - com_in_base(model, s))))
    drift = traj.poses[-1] @ traj.poses[0].inverse()
    angle = float(np.linalg.norm(log_so3(drift.rotation)))
    origin_return = float(np.linalg.norm(traj.poses[-1].origin - traj.poses[0].origin))
    return HolonomyResult(drift, angle, origin_return, tracking, traj)


def small_loop_check(
    model: Model,
    s0,
    i: int,
    j: int,
    eps: float,
    h: float = 1e-4,
    steps_per_edge: int = 32,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Drive an eps-square loop in coordinates (s_i, s_j) and compare the
    resulting frame drift with the curvature prediction.

    Returns (log of the drift, the prediction -eps^2 B_ij(s0), mismatch
    norm); the minus sign belongs to this loop orientation (+i, +j, -i, -j).
    The mismatch shrinks faster than eps^2, which cross-validates the
    curvature computation against a holonomy the integrator produces
    independently.
    """
    if i == j:
        raise ValueError("small_loop_check needs two distinct joint indices")
    if eps > 0.1:
        raise ValueError("eps must stay small (<= 0.1) for the comparison to mean anything")
    s0 = np.asarray(s0, dtype=float).reshape(model.n_j)

    Y = Transform.identity()
    # Square loop: +e_i, +e_j, -e_i, -e_j.
    shape = s0.copy()
    for axis, sign in ((i, 1.0), (j, 1.0), (i, -1.0), (j, -1.0)):
        Y = _advance_along_axis(model, shape, axis, sign * eps, Y, steps_per_edge)
        shape[axis] += sign * eps

    dv = log_se3(Y)
    reference = -(eps * eps) * curvature(model, s0, i, j, h)
    return dv, reference, float(np.linalg.norm(dv - reference))
