"""Total and centroidal momentum, locked and average velocities, and the
centroidal frame obtained by integrating the locked velocity on SE(3).

Frames of interest:

* ``A``: the inertial (world) frame,
* ``B``: the floating-base link frame,
* ``G``: origin at the centre of mass, world-aligned axes,
* ``N``: origin at the centre of mass, base-aligned axes,
* ``C``: the integrated centroidal frame.

Momenta carry an explicit :class:`FrameTag` so that values expressed in
different frames cannot be mixed silently; converting requires going back
through the producing operations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._batch import com_batch, locked_coupling_batch
from .dynamics import ExternalWrench, SimulationError, mass_partition
from .kinematics import base_relative_poses, com_in_base
from .model import Model, State, VelocityState
from .spatial import Transform, dexpinv, exp_se3, force_transform, motion_transform

__all__ = [
    "FrameTag",
    "Momentum",
    "CentroidalTrajectory",
    "total_momentum",
    "locked_velocity",
    "average_velocity",
    "locked_inertia_at",
    "momentum_rate",
    "integrate_centroidal_frame",
    "momentum_map_pairing",
    "save_centroidal_trajectory",
]


class FrameTag(enum.Enum):
    A = "A"  # inertial
    B = "B"  # base link
    G = "G"  # CoM origin, inertial orientation
    N = "N"  # CoM origin, base orientation
    C = "C"  # integrated centroidal frame


@dataclass(frozen=True, eq=False)
class Momentum:
    """A 6D momentum (linear first) tagged with the frame it is expressed in."""

    value: np.ndarray
    frame: FrameTag

    def __post_init__(self):
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float).reshape(6))

    @property
    def linear(self) -> np.ndarray:
        return self.value[:3]

    @property
    def angular(self) -> np.ndarray:
        return self.value[3:]


def _pose_of_base_in(model: Model, state: State, frame: FrameTag) -> Transform:
    """Pose of the base frame expressed in the requested frame."""
    if frame == FrameTag.B:
        return Transform.identity()
    if frame == FrameTag.A:
        return state.H
    p_base = com_in_base(model, state.s)
    if frame == FrameTag.N:
        return Transform(np.eye(3), -p_base)
    if frame == FrameTag.G:
        return Transform(state.H.rotation, -(state.H.rotation @ p_base))
    raise ValueError(f"momentum/inertia not defined in frame {frame}")


def total_momentum(model: Model, state: State, nu: VelocityState, frame: FrameTag = FrameTag.G) -> Momentum:
    """Sum of all per-body momenta, expressed in frame A, B or G."""
    if frame not in (FrameTag.A, FrameTag.B, FrameTag.G):
        raise ValueError("total momentum is provided in frames A, B and G")
    parts = mass_partition(model, state.s)
    j_base = parts.locked @ nu.v + parts.coupling @ nu.sdot
    if frame == FrameTag.B:
        return Momentum(j_base, frame)
    return Momentum(force_transform(_pose_of_base_in(model, state, frame)) @ j_base, frame)


def locked_velocity(model: Model, state: State, nu: VelocityState, frame: FrameTag = FrameTag.B) -> np.ndarray:
    """Base velocity that reproduces the current momentum with frozen joints.

    Computed in the base frame, where it depends only on (s, v, sdot), then
    transformed to A or N on request.
    """
    if frame not in (FrameTag.B, FrameTag.A, FrameTag.N):
        raise ValueError("locked velocity is provided in frames B, A and N")
    parts = mass_partition(model, state.s)
    v_loc = nu.v + cho_solve(cho_factor(parts.locked, lower=True), parts.coupling @ nu.sdot)
    if frame == FrameTag.B:
        return v_loc
    return motion_transform(_pose_of_base_in(model, state, frame)) @ v_loc


def average_velocity(model: Model, state: State, nu: VelocityState) -> np.ndarray:
    """Locked velocity expressed in G: world CoM velocity stacked with the
    world locked angular velocity."""
    v_loc = locked_velocity(model, state, nu, FrameTag.B)
    return motion_transform(_pose_of_base_in(model, state, FrameTag.G)) @ v_loc


def locked_inertia_at(model: Model, state: State, frame: FrameTag = FrameTag.B) -> np.ndarray:
    """6x6 locked inertia in B, A, G or N.

    In G and N the coupling blocks vanish (origin at the CoM) and the linear
    block is the total mass times the identity; in B and N the result is a
    function of the shape only.
    """
    if frame not in (FrameTag.B, FrameTag.A, FrameTag.G, FrameTag.N):
        raise ValueError("locked inertia is provided in frames B, A, G and N")
    locked = mass_partition(model, state.s).locked
    if frame == FrameTag.B:
        return locked
    H = _pose_of_base_in(model, state, frame)
    return force_transform(H) @ locked @ motion_transform(H.inverse())


def momentum_rate(
    model: Model,
    state: State,
    nu: VelocityState,
    tau=None,
    wrenches: Sequence[ExternalWrench] = (),
) -> np.ndarray:
    """Time derivative of the world-frame total momentum.

    Only gravity and the external wrenches contribute; internal joint
    torques cancel out, so ``tau`` is accepted purely to mirror the forward
    dynamics signature and is ignored.
    """
    del tau
    rel = base_relative_poses(model, state.s)
    p_base = com_in_base(model, state.s)
    f_grav = model.total_mass * (state.H.rotation.T @ model.gravity)
    wrench_b = np.concatenate((f_grav, np.cross(p_base, f_grav)))
    for w in wrenches:
        li = model.link_index[w.link]
        contact_in_base = rel[li] @ w.frame
        R_world = state.H.rotation @ contact_in_base.rotation
        # Pose of the mixed contact frame (world axes) in the base frame.
        mixed_in_base = Transform(state.H.rotation.T, contact_in_base.origin)
        wrench_b += force_transform(mixed_in_base) @ w.wrench
    return force_transform(state.H) @ wrench_b


@dataclass(frozen=True, eq=False)
class CentroidalTrajectory:
    """Samples of the integrated centroidal frame and its momentum columns."""

    times: np.ndarray
    poses: list[Transform]
    v_loc_world: np.ndarray
    momentum_world: np.ndarray
    momentum_com: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


StateFn = Callable[[float], tuple[State, VelocityState]]


def integrate_centroidal_frame(
    model: Model,
    state_fn: StateFn,
    times,
    H_C0: Transform | None = None,
) -> CentroidalTrajectory:
    """Integrate ``dH_C/dt = hat6(v_loc_world) H_C`` along a given motion.

    ``state_fn(t)`` must return the configuration and velocity at any time
    the integrator asks for (including step midpoints).  The initial frame
    defaults to the base orientation at t0 with its origin at the CoM, which
    makes the origin track the CoM for all time.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be strictly increasing with at least two samples")

    # Sample the motion at every grid point and step midpoint, then evaluate
    # the locked velocity and momentum columns for all samples in one batch
    # (grid points occupy the even rows, midpoints the odd ones).
    all_t = np.empty(2 * len(times) - 1)
    all_t[0::2] = times
    all_t[1::2] = 0.5 * (times[:-1] + times[1:])
    n = model.n_j
    m = len(all_t)
    S = np.empty((m, n))
    Sdot = np.empty((m, n))
    Hr = np.empty((m, 3, 3))
    Ho = np.empty((m, 3))
    V = np.empty((m, 6))
    state0 = None
    for k, t in enumerate(all_t):
        state, nu = state_fn(float(t))
        if k == 0:
            state0 = state
        S[k] = state.s
        Sdot[k] = nu.sdot
        Hr[k] = state.H.rotation
        Ho[k] = state.H.origin
        V[k] = nu.v

    locked, coupling, Rs, ps = locked_coupling_batch(model, S)
    cho = np.linalg.cholesky(locked)
    coupled = (coupling @ Sdot[..., None])[..., 0]
    v_loc = V + np.linalg.solve(cho.swapaxes(1, 2), np.linalg.solve(cho, coupled[..., None]))[..., 0]
    wa = (Hr @ v_loc[:, 3:, None])[..., 0]
    v_world = np.empty((m, 6))
    v_world[:, :3] = (Hr @ v_loc[:, :3, None])[..., 0] + np.cross(Ho, wa)
    v_world[:, 3:] = wa
    if not np.all(np.isfinite(v_world)):
        bad = int(np.argmin(np.isfinite(v_world).all(axis=1)))
        raise SimulationError(float(all_t[bad]))

    j_base = (locked @ V[..., None])[..., 0] + coupled
    jw = np.empty((m, 6))
    jw[:, :3] = (Hr @ j_base[:, :3, None])[..., 0]
    jw[:, 3:] = np.cross(Ho, jw[:, :3]) + (Hr @ j_base[:, 3:, None])[..., 0]
    p_com = (Hr @ com_batch(model, Rs, ps)[..., None])[..., 0] + Ho
    jg = jw.copy()
    jg[:, 3:] -= np.cross(p_com, jw[:, :3])

    if H_C0 is None:
        H_C0 = Transform(state0.H.rotation, p_com[0])

    poses = [H_C0]
    H_C = H_C0
    for k in range(len(times) - 1):
        dt = times[k + 1] - times[k]
        k1 = v_world[2 * k]
        v_mid = v_world[2 * k + 1]
        k2 = dexpinv(0.5 * dt * k1, v_mid)
        k3 = dexpinv(0.5 * dt * k2, v_mid)
        k4 = dexpinv(dt * k3, v_world[2 * k + 2])
        omega = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        H_C = exp_se3(omega) @ H_C
        poses.append(H_C)
    return CentroidalTrajectory(times, poses, v_world[0::2], jw[0::2], jg[0::2])


def momentum_map_pairing(model: Model, state: State, nu: VelocityState, xi) -> tuple[float, float]:
    """Pairing of the world momentum with a twist, computed along two routes.

    The first number is the plain dot product of the world-frame momentum
    with ``xi``; the second contracts the full mass matrix with ``xi``
    pulled back to the base frame and padded with zero joint rates.  The two
    must agree for every (state, velocity, xi).
    """
    xi = np.asarray(xi, dtype=float).reshape(6)
    left = float(total_momentum(model, state, nu, FrameTag.A).value @ xi)
    parts = mass_partition(model, state.s)
    eta = np.concatenate((motion_transform(state.H.inverse()) @ xi, np.zeros(model.n_j)))
    nu_full = np.concatenate((nu.v, nu.sdot))
    right = float(nu_full @ (parts.full @ eta))
    return left, right


def save_centroidal_trajectory(trajectory: CentroidalTrajectory, path) -> None:
    """Comma-delimited dump: t, R_C row-major (9), o_C (3), v_loc world (6),
    world momentum (6), CoM-frame momentum (6)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, t in enumerate(trajectory.times):
            pose = trajectory.poses[k]
            row = np.concatenate(
                (
                    [t],
                    pose.rotation.reshape(9),
                    pose.origin,
                    trajectory.v_loc_world[k],
                    trajectory.momentum_world[k],
                    trajectory.momentum_com[k],
                )
            )
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
