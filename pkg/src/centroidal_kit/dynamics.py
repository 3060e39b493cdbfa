"""Mass matrix with its locked/coupling/shape partition, bias forces, forward
dynamics of the floating tree, and a fixed-step geometric simulator.

The mass matrix is assembled composite-rigid-body style with every quantity
expressed in the base frame; a slow Jacobian-based route is kept alongside
as an independent cross-check.  The bias vector (Coriolis plus gravity) is
never formed as a matrix: it comes out of a zero-acceleration Newton-Euler
sweep over the tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kinematics import _fk, _left_jacobian_in_base, base_relative_poses
from .model import Model, State, VelocityState
from .spatial import (
    Transform,
    cross6,
    crossdual6,
    dexpinv,
    exp_se3,
    force_transform,
    motion_transform,
    transform_inertia_matrix,
)

__all__ = [
    "MassPartition",
    "ExternalWrench",
    "SimulationError",
    "Trajectory",
    "mass_partition",
    "mass_matrix_via_jacobians",
    "inverse_dynamics",
    "bias_and_gravity",
    "wrench_generalized_force",
    "forward_dynamics",
    "simulate",
    "save_trajectory",
]


@dataclass(frozen=True, eq=False)
class MassPartition:
    """Mass matrix of the floating system and its named blocks.

    ``full`` is (6+n_J) x (6+n_J); ``locked`` is the 6x6 generalized inertia
    of the whole mechanism with frozen joints, expressed in the base frame;
    ``coupling`` (6 x n_J) maps joint rates to base-frame momentum and
    ``shape`` is the joint-space block.  Everything depends on the shape
    only, never on the base pose.
    """

    full: np.ndarray
    locked: np.ndarray
    coupling: np.ndarray
    shape: np.ndarray


@dataclass(frozen=True, eq=False)
class ExternalWrench:
    """A wrench applied to ``link`` at a contact frame fixed to that link.

    ``frame`` is the contact frame's pose in the link frame; ``wrench`` is
    expressed in the contact frame with world-aligned axes (mixed frame).
    """

    link: str
    frame: Transform
    wrench: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "wrench", np.asarray(self.wrench, dtype=float).reshape(6))


class SimulationError(RuntimeError):
    """Raised when the state stops being finite; carries the failure time."""

    def __init__(self, t: float):
        super().__init__(f"simulation produced a non-finite state at t = {t:.6g} s")
        self.t = t


def _mass_partition_core(model: Model, rel) -> MassPartition:
    n = model.n_j
    composite = [transform_inertia_matrix(model._inertia6[i], rel[i]) for i in range(len(model.links))]
    for li in reversed(model.topo_order):
        pj = model.parent_joint[li]
        if pj is not None:
            composite[model._joint_parent[pj]] += composite[li]
    locked = composite[model._base_idx]

    coupling = np.zeros((6, n))
    zeta = np.zeros((6, n))
    for j, joint in enumerate(model.joints):
        ci = model._joint_child[j]
        zeta[:, j] = motion_transform(rel[ci]) @ joint._phi
        # The accumulation above ran in place, so composite[ci] already holds
        # the whole subtree hanging off joint j.
        coupling[:, j] = composite[ci] @ zeta[:, j]

    shape = np.zeros((n, n))
    for j in range(n):
        for i in range(n):
            # S_ij couples joints on a common root-to-leaf path, through the
            # composite inertia of the deeper subtree.
            if model._nested[j][i]:
                shape[j, i] = zeta[:, j] @ coupling[:, i]
                shape[i, j] = shape[j, i]

    full = np.zeros((6 + n, 6 + n))
    full[:6, :6] = locked
    full[:6, 6:] = coupling
    full[6:, :6] = coupling.T
    full[6:, 6:] = shape
    return MassPartition(full, locked, coupling, shape)


def mass_partition(model: Model, s) -> MassPartition:
    """Composite-rigid-body assembly of the mass matrix, in base coordinates."""
    return _mass_partition_core(model, base_relative_poses(model, s))


def mass_matrix_via_jacobians(model: Model, s) -> np.ndarray:
    """Independent Jacobian-transpose route to the mass matrix (test oracle)."""
    rel = base_relative_poses(model, s)
    n = model.n_j
    M = np.zeros((6 + n, 6 + n))
    for i, link in enumerate(model.links):
        X_lb = motion_transform(rel[i].inverse())
        J = np.zeros((6, 6 + n))
        J[:, :6] = X_lb
        J[:, 6:] = X_lb @ _left_jacobian_in_base(model, rel, i)
        M += J.T @ link.inertia.matrix() @ J
    return M


def _rnea_core(model: Model, state: State, nu: VelocityState, nudot, rel, in_parent) -> np.ndarray:
    nudot = np.asarray(nudot, dtype=float).reshape(6 + model.n_j)
    g = model.gravity
    R_ab = state.H.rotation

    n_links = len(model.links)
    vel = [None] * n_links
    acc = [None] * n_links
    net = [None] * n_links
    X_cp = [None] * n_links
    vel[model._base_idx] = nu.v
    acc[model._base_idx] = nudot[:6]
    for li in model.topo_order:
        pj = model.parent_joint[li]
        if pj is not None:
            phi = model.joints[pj]._phi
            X_cp[li] = motion_transform(in_parent[li].inverse())
            vj = phi * nu.sdot[pj]
            vel[li] = X_cp[li] @ vel[model._joint_parent[pj]] + vj
            acc[li] = (
                X_cp[li] @ acc[model._joint_parent[pj]]
                + phi * nudot[6 + pj]
                + cross6(vel[li], vj)
            )
        M_l = model._inertia6[li]
        # World gravity seen in the link frame; the wrench it applies is
        # M_l @ (g_local, 0), moved to the left-hand side with a minus sign.
        g_local = (R_ab @ rel[li].rotation).T @ g
        gyro = crossdual6(vel[li], M_l @ vel[li])
        net[li] = M_l @ acc[li] + gyro - M_l[:, :3] @ g_local

    out = np.zeros(6 + model.n_j)
    for li in reversed(model.topo_order):
        pj = model.parent_joint[li]
        if pj is None:
            out[:6] = net[li]
        else:
            out[6 + pj] = model.joints[pj]._phi @ net[li]
            net[model._joint_parent[pj]] += force_transform(in_parent[li]) @ net[li]
    return out


def inverse_dynamics(model: Model, state: State, nu: VelocityState, nudot) -> np.ndarray:
    """Generalized forces M(q) nudot + C(q, nu) nu + G(q), by a Newton-Euler sweep.

    Gravity enters as a uniform field acting at each body's CoM.  The result
    is the actuation the system would need (6 base rows plus one per joint)
    in the absence of external wrenches.
    """
    rel, in_parent = _fk(model, state.s)
    return _rnea_core(model, state, nu, nudot, rel, in_parent)


def bias_and_gravity(model: Model, state: State, nu: VelocityState) -> np.ndarray:
    """C(q, nu) nu + G(q): the zero-acceleration generalized forces."""
    return inverse_dynamics(model, state, nu, np.zeros(6 + model.n_j))


def _mixed_contact_jacobian_core(model: Model, state: State, wrench: ExternalWrench, rel) -> np.ndarray:
    li = model.link_index[wrench.link]
    contact_in_base = rel[li] @ wrench.frame
    X_cb = motion_transform(contact_in_base.inverse())
    J = np.zeros((6, 6 + model.n_j))
    J[:, :6] = X_cb
    J[:, 6:] = X_cb @ _left_jacobian_in_base(model, rel, li)
    R_world = state.H.rotation @ contact_in_base.rotation
    X_mix = motion_transform(Transform(R_world, np.zeros(3)))
    return X_mix @ J


def mixed_contact_jacobian(model: Model, state: State, wrench: ExternalWrench) -> np.ndarray:
    """Jacobian of the contact frame in the mixed representation (6 x (6+n_J))."""
    return _mixed_contact_jacobian_core(model, state, wrench, base_relative_poses(model, state.s))


def _wrench_generalized_force_core(model: Model, state: State, wrench: ExternalWrench, rel) -> np.ndarray:
    return _mixed_contact_jacobian_core(model, state, wrench, rel).T @ wrench.wrench


def wrench_generalized_force(model: Model, state: State, wrench: ExternalWrench) -> np.ndarray:
    """Generalized force of one external wrench: J_mixed^T applied to it."""
    return _wrench_generalized_force_core(model, state, wrench, base_relative_poses(model, state.s))


def forward_dynamics(
    model: Model,
    state: State,
    nu: VelocityState,
    tau=None,
    wrenches: Sequence[ExternalWrench] = (),
) -> np.ndarray:
    """Acceleration nudot solving M nudot = [0; tau] + sum J^T f - bias."""
    n = model.n_j
    rel, in_parent = _fk(model, state.s)
    rhs = -_rnea_core(model, state, nu, np.zeros(6 + n), rel, in_parent)
    if tau is not None:
        rhs[6:] += np.asarray(tau, dtype=float).reshape(n)
    for w in wrenches:
        rhs += _wrench_generalized_force_core(model, state, w, rel)
    M = _mass_partition_core(model, rel).full
    # Finiteness is not checked here: a blowing-up rollout must propagate its
    # infs to the simulate() gate instead of dying inside scipy.
    return cho_solve(cho_factor(M, lower=True, check_finite=False), rhs, check_finite=False)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fixed-step simulation output: one sample per accepted step."""

    times: np.ndarray
    states: list[State]
    velocities: list[VelocityState]

    def __len__(self) -> int:
        return len(self.times)


def simulate(
    model: Model,
    state0: State,
    nu0: VelocityState,
    t_end: float,
    dt: float,
    controls: Callable[[float, State, VelocityState], np.ndarray] | None = None,
    wrench_schedule: Callable[[float], Sequence[ExternalWrench]] | None = None,
) -> Trajectory:
    """Fixed-step RK4 with exponential base-pose updates (Munthe-Kaas style).

    The base pose advances by ``H <- H @ exp(Omega)`` with the algebra
    increment built from dexpinv-corrected stage velocities, so rotation
    matrices never drift from SO(3).  ``controls(t, state, nu)`` returns
    joint torques; ``wrench_schedule(t)`` returns the active external
    wrenches.  Raises :class:`SimulationError` on the first non-finite state.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    n_steps = int(round(t_end / dt))
    n = model.n_j

    def rate(t, state, nu):
        tau = controls(t, state, nu) if controls is not None else None
        ws = wrench_schedule(t) if wrench_schedule is not None else ()
        return forward_dynamics(model, state, nu, tau, ws)

    times = [0.0]
    states = [state0]
    velocities = [nu0]
    H, s = state0.H, state0.s.copy()
    v, sdot = nu0.v.copy(), nu0.sdot.copy()
    for k in range(n_steps):
        t = k * dt

        def stage(dt_frac, omega, ds, dv, dsdot):
            Hs = H @ exp_se3(omega) if omega is not None else H
            st = State(Hs, s + ds)
            nu_s = VelocityState(v + dv, sdot + dsdot)
            nd = rate(t + dt_frac, st, nu_s)
            k_omega = dexpinv(-omega, nu_s.v) if omega is not None else nu_s.v
            return k_omega, nu_s.sdot, nd[:6], nd[6:]

        z6, zn = np.zeros(6), np.zeros(n)
        try:
            # Overflow during a diverging rollout is expected and handled by
            # the finiteness gate below, not worth per-step warnings.
            with np.errstate(over="ignore", invalid="ignore"):
                kw1, ks1, kv1, kd1 = stage(0.0, None, zn, z6, zn)
                h2 = 0.5 * dt
                kw2, ks2, kv2, kd2 = stage(h2, h2 * kw1, h2 * ks1, h2 * kv1, h2 * kd1)
                kw3, ks3, kv3, kd3 = stage(h2, h2 * kw2, h2 * ks2, h2 * kv2, h2 * kd2)
                kw4, ks4, kv4, kd4 = stage(dt, dt * kw3, dt * ks3, dt * kv3, dt * kd3)
        except np.linalg.LinAlgError:
            # A NaN/Inf-poisoned mass matrix fails its Cholesky factorisation;
            # report it as the blow-up it is, stamped with the step time.
            raise SimulationError(t) from None

        w = dt / 6.0
        H = H @ exp_se3(w * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4))
        s = s + w * (ks1 + 2.0 * ks2 + 2.0 * ks3 + ks4)
        v = v + w * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
        sdot = sdot + w * (kd1 + 2.0 * kd2 + 2.0 * kd3 + kd4)

        t_next = (k + 1) * dt
        if not (
            np.all(np.isfinite(H.origin))
            and np.all(np.isfinite(H.rotation))
            and np.all(np.isfinite(s))
            and np.all(np.isfinite(v))
            and np.all(np.isfinite(sdot))
        ):
            raise SimulationError(t_next)
        times.append(t_next)
        states.append(State(H, s))
        velocities.append(VelocityState(v, sdot))
    return Trajectory(np.asarray(times), states, velocities)


def save_trajectory(trajectory: Trajectory, path) -> None:
    """Comma-delimited dump: t, rotation row-major (9), origin (3), s, v (6), sdot."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t, state, nu in zip(trajectory.times, trajectory.states, trajectory.velocities):
            row = np.concatenate(
                ([t], state.H.rotation.reshape(9), state.H.origin, state.s, nu.v, nu.sdot)
            )
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
