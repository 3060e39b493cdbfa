"""Shared generators for the test suite: random poses, states, and model
families with known flatness properties."""

from __future__ import annotations

import numpy as np

from centroidal_kit.model import JointSpec, LinkSpec, Model, State, VelocityState
from centroidal_kit.spatial import SpatialInertia, Transform, exp_se3, exp_so3


def random_rotation(rng) -> np.ndarray:
    return exp_so3(rng.normal(size=3))


def random_transform(rng, spread: float = 1.0) -> Transform:
    return Transform(random_rotation(rng), spread * rng.normal(size=3))


def random_state(model: Model, rng) -> State:
    return State(random_transform(rng), rng.uniform(-np.pi, np.pi, model.n_j))


def random_velocity(model: Model, rng, spread: float = 0.7) -> VelocityState:
    return VelocityState(spread * rng.normal(size=6), spread * rng.normal(size=model.n_j))


def random_spd_inertia(rng, mass: float, com) -> SpatialInertia:
    """Physical spatial inertia: random SPD rotational inertia about the CoM,
    shifted to the frame origin by the parallel-axis rule."""
    com = np.asarray(com, dtype=float)
    A = rng.normal(size=(3, 3))
    I_com = A @ A.T + 1.5 * np.eye(3)
    shift = mass * (np.eye(3) * float(com @ com) - np.outer(com, com))
    return SpatialInertia(mass, com, I_com + shift)


def collinear_chain(n_joints: int, seed: int = 0, gravity=(0.0, 0.0, 0.0)) -> Model:
    """Serial chain whose joints all rotate about the same world line.

    Useful as a generic (curved) multi-DOF test tree with nested joint
    paths.
    """
    rng = np.random.default_rng(seed)
    links = [LinkSpec("base", random_spd_inertia(rng, 1.5, [0.2, 0.1, 0.0]))]
    joints = []
    parent = "base"
    for k in range(n_joints):
        name = f"link{k + 1}"
        links.append(LinkSpec(name, random_spd_inertia(rng, rng.uniform(0.5, 2.0), rng.uniform(-1, 1, 3))))
        joints.append(
            JointSpec(
                f"j{k + 1}",
                parent,
                name,
                "revolute",
                Transform(np.eye(3), [0.0, 0.0, rng.uniform(-0.5, 0.5)]),
                [0.0, 0.0, 1.0],
            )
        )
        parent = name
    return Model("base", links, joints, gravity)


def axisymmetric_star(n_joints: int, seed: int = 0, gravity=(0.0, 0.0, 0.0)) -> Model:
    """Flat-by-construction family: every link hangs directly off the base on
    a z revolute joint, with its CoM on the joint axis and an axisymmetric
    inertia about it.

    Joint motion then adds no linear momentum and a constant angular
    momentum, so the connection columns are constant and parallel and every
    curvature entry vanishes.
    """
    rng = np.random.default_rng(seed)
    links = [LinkSpec("base", random_spd_inertia(rng, 2.0, [0.1, -0.2, 0.3]))]
    joints = []
    for k in range(n_joints):
        name = f"link{k + 1}"
        mass = float(rng.uniform(0.5, 2.0))
        com_z = float(rng.uniform(-0.5, 0.5))
        com = np.array([0.0, 0.0, com_z])
        a, b = rng.uniform(1.0, 2.0, 2)
        I_origin = np.diag([a, a, b]) + mass * (np.eye(3) * com_z**2 - np.outer(com, com))
        links.append(LinkSpec(name, SpatialInertia(mass, com, I_origin)))
        joints.append(
            JointSpec(
                f"j{k + 1}",
                "base",
                name,
                "revolute",
                Transform(np.eye(3), rng.uniform(-1.0, 1.0, 3)),
                [0.0, 0.0, 1.0],
            )
        )
    return Model("base", links, joints, gravity)


def prismatic_gantry(seed: int = 0, gravity=(0.0, 0.0, 0.0)) -> Model:
    """Floating base carrying a prismatic slider that carries a revolute arm;
    exercises the prismatic code paths alongside a nested revolute joint."""
    rng = np.random.default_rng(seed)
    links = [
        LinkSpec("base", random_spd_inertia(rng, 2.0, [0.1, 0.0, -0.1])),
        LinkSpec("carriage", random_spd_inertia(rng, 0.8, [0.0, 0.1, 0.0])),
        LinkSpec("arm", random_spd_inertia(rng, 0.5, [0.4, 0.0, 0.0])),
    ]
    joints = [
        JointSpec(
            "slide", "base", "carriage", "prismatic", Transform(np.eye(3), [0.3, 0.0, 0.2]), [1.0, 0.0, 0.0]
        ),
        JointSpec(
            "swing", "carriage", "arm", "revolute", Transform(np.eye(3), [0.0, 0.4, 0.0]), [0.0, 0.0, 1.0]
        ),
    ]
    return Model("base", links, joints, gravity)


def random_one_joint_model(seed: int = 0) -> Model:
    """Single-joint floating mechanism with fully generic geometry."""
    rng = np.random.default_rng(seed)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    links = [
        LinkSpec("base", random_spd_inertia(rng, rng.uniform(0.8, 2.0), rng.normal(size=3) * 0.3)),
        LinkSpec("arm", random_spd_inertia(rng, rng.uniform(0.3, 1.5), rng.normal(size=3) * 0.5)),
    ]
    jtype = "revolute" if rng.uniform() < 0.8 else "prismatic"
    joints = [JointSpec("j1", "base", "arm", jtype, random_transform(rng, 0.6), axis)]
    return Model("base", links, joints, (0.0, 0.0, 0.0))


def fourier_loop(n_j: int, seed: int, period: float = 4.0, amplitude: float = 1.0):
    """Smooth random shape loop, closed over one period by construction."""
    rng = np.random.default_rng(seed)
    a = amplitude * rng.normal(size=(n_j, 3))
    b = amplitude * rng.normal(size=(n_j, 3))
    k = np.arange(1, 4)
    w = 2.0 * np.pi / period

    def loop(t: float):
        ph = w * k * t
        s = (a * np.sin(ph) + b * (np.cos(ph) - 1.0)).sum(axis=1)
        sdot = (w * k * (a * np.cos(ph) - b * np.sin(ph))).sum(axis=1)
        return s, sdot

    return loop


def base_motion(seed: int = 0, spread: float = 0.4):
    """Analytic rigid base trajectory H(t) = H0 exp(t xi): its left-trivialised
    velocity is the constant twist xi."""
    rng = np.random.default_rng(seed)
    H0 = random_transform(rng, spread)
    xi = spread * rng.normal(size=6)

    def pose(t: float) -> Transform:
        return H0 @ exp_se3(xi, t)

    return pose, xi
