"""Forward kinematics, link Jacobians, centre of mass, velocity representations.

Velocity representations follow the usual trichotomy:

* ``left``: the body twist, expressed in the moving frame itself,
* ``right``: the spatial twist, expressed in the world frame,
* ``mixed``: world-frame linear velocity of the frame origin paired with the
  world-frame angular velocity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Model, ModelError, State
from .spatial import Transform, motion_transform

__all__ = [
    "REPRESENTATIONS",
    "Jacobian",
    "joint_motion",
    "joint_subspace",
    "base_relative_poses",
    "forward_kinematics",
    "link_jacobian",
    "com",
    "com_in_base",
    "convert_velocity",
]

REPRESENTATIONS = ("left", "right", "mixed")


def joint_motion(joint, si: float) -> Transform:
    """Displacement transform of one joint: child frame pose in the joint frame."""
    if joint.joint_type == "revolute":
        # Rodrigues about the cached unit-axis cross matrices.
        R = np.eye(3) + np.sin(si) * joint._axis_hat + (1.0 - np.cos(si)) * joint._axis_hat2
        return Transform(R, np.zeros(3))
    return Transform(np.eye(3), joint.axis * si)


def joint_subspace(joint) -> np.ndarray:
    """Motion subspace of the joint in the child frame (6-vector per unit rate)."""
    return joint._phi.copy()


def _fk(model: Model, s) -> tuple[list[Transform], list[Transform]]:
    """Base-relative link poses plus each link's pose in its parent frame."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if s.shape != (model.n_j,):
        raise ValueError(f"shape vector has length {s.size}, expected {model.n_j}")
    n_links = len(model.links)
    poses: list[Transform] = [None] * n_links  # type: ignore[list-item]
    in_parent: list[Transform] = [None] * n_links  # type: ignore[list-item]
    poses[model._base_idx] = Transform.identity()
    for li in model.topo_order:
        pj = model.parent_joint[li]
        if pj is None:
            continue
        joint = model.joints[pj]
        local = joint.origin @ joint_motion(joint, s[pj])
        in_parent[li] = local
        poses[li] = poses[model._joint_parent[pj]] @ local
    return poses, in_parent


def base_relative_poses(model: Model, s) -> list[Transform]:
    """Pose of every link frame in the base frame, indexed like ``model.links``.

    Depends on the shape only; world poses are ``state.H @ pose``.
    """
    return _fk(model, s)[0]


def forward_kinematics(model: Model, state: State) -> dict[str, Transform]:
    """World pose of every link frame, keyed by link name."""
    rel = base_relative_poses(model, state.s)
    return {link.name: state.H @ rel[i] for i, link in enumerate(model.links)}


@dataclass(frozen=True, eq=False)
class Jacobian:
    """6 x (6 + n_J) link Jacobian split into base and shape blocks.

    ``velocity = base_block @ v + shape_block @ sdot`` in the tagged
    representation; shape columns of joints off the base-to-link path are
    zero.
    """

    base_block: np.ndarray
    shape_block: np.ndarray
    representation: str

    def matrix(self) -> np.ndarray:
        return np.hstack((self.base_block, self.shape_block))


def _left_jacobian_in_base(model: Model, rel_poses, link_idx: int) -> np.ndarray:
    """Columns of the link's velocity written as a twist field in base coordinates."""
    Z = np.zeros((6, model.n_j))
    for j in model.path_joints[link_idx]:
        Z[:, j] = motion_transform(rel_poses[model._joint_child[j]]) @ model.joints[j]._phi
    return Z


def link_jacobian(model: Model, state: State, link: str, representation: str = "left") -> Jacobian:
    if representation not in REPRESENTATIONS:
        raise ValueError(f"unknown representation '{representation}'")
    if link not in model.link_index:
        raise ModelError(f"unknown link '{link}'")
    li = model.link_index[link]
    rel = base_relative_poses(model, state.s)
    Z = _left_jacobian_in_base(model, rel, li)
    X_lb = motion_transform(rel[li].inverse())
    base_block = X_lb
    shape_block = X_lb @ Z
    if representation == "left":
        return Jacobian(base_block, shape_block, representation)
    world = state.H @ rel[li]
    if representation == "right":
        X = motion_transform(world)
    else:
        X = motion_transform(Transform(world.rotation, np.zeros(3)))
    return Jacobian(X @ base_block, X @ shape_block, representation)


def _com_from_rel(model: Model, rel) -> np.ndarray:
    acc = np.zeros(3)
    for i, link in enumerate(model.links):
        acc += link.inertia.mass * rel[i].apply(link.inertia.com)
    return acc / model.total_mass


def com_in_base(model: Model, s) -> np.ndarray:
    """Mechanism centre of mass in base coordinates (a function of shape only)."""
    return _com_from_rel(model, base_relative_poses(model, s))


def com(model: Model, state: State) -> np.ndarray:
    """Mechanism centre of mass in world coordinates."""
    return state.H.apply(com_in_base(model, state.s))


def convert_velocity(v, source: str, target: str, H: Transform) -> np.ndarray:
    """Convert a 6D velocity between representations; H is the moving frame's pose."""
    for tag in (source, target):
        if tag not in REPRESENTATIONS:
            raise ValueError(f"unknown representation '{tag}'")
    v = np.asarray(v, dtype=float).reshape(6)
    R = H.rotation
    if source == "left":
        left = v
    elif source == "right":
        left = motion_transform(H.inverse()) @ v
    else:
        left = np.concatenate((R.T @ v[:3], R.T @ v[3:]))
    if target == "left":
        return left
    if target == "right":
        return motion_transform(H) @ left
    return np.concatenate((R @ left[:3], R @ left[3:]))
