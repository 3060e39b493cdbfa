"""Kinematic-tree models of floating-base mechanisms, plus their file format.

A model is a tree of links rooted at the floating base.  Joint order in the
model defines the indexing of the shape vector ``s`` (radians for revolute
joints, metres for prismatic ones).  The configuration of a model is a
:class:`State` ``(H, s)`` with H the world pose of the base frame, and the
velocity a :class:`VelocityState` ``(v, sdot)`` with v the base velocity in
base coordinates (left-trivialised).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from .spatial import SpatialInertia, Transform, exp_so3

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

__all__ = [
    "ModelError",
    "LinkSpec",
    "JointSpec",
    "Model",
    "State",
    "VelocityState",
    "three_link",
    "validate",
    "parse_model",
    "serialize_model",
    "load_model",
]

JOINT_TYPES = ("revolute", "prismatic")

DEFAULT_GRAVITY = (0.0, 0.0, -9.81)


class ModelError(ValueError):
    """Raised for malformed model documents and structurally invalid trees."""


@dataclass(frozen=True, eq=False)
class LinkSpec:
    """One rigid body; the inertia is expressed in the link frame, about its origin."""

    name: str
    inertia: SpatialInertia


@dataclass(frozen=True, eq=False)
class JointSpec:
    """A 1-DOF joint from ``parent`` to ``child``.

    ``origin`` is the pose of the joint frame in the parent frame at zero
    displacement; the child link frame coincides with the joint frame
    displaced by the joint motion (rotation of ``s`` about ``axis`` for a
    revolute joint, translation of ``s`` along it for a prismatic one).
    """

    name: str
    parent: str
    child: str
    joint_type: str
    origin: Transform
    axis: np.ndarray

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        object.__setattr__(self, "axis", axis)
        # Hot-path caches: the axis cross matrices feed the per-step Rodrigues
        # update, phi is the joint motion subspace in the child frame.
        x, y, z = axis
        K = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
        object.__setattr__(self, "_axis_hat", K)
        object.__setattr__(self, "_axis_hat2", K @ K)
        phi = np.zeros(6)
        if self.joint_type == "revolute":
            phi[3:] = axis
        else:
            phi[:3] = axis
        object.__setattr__(self, "_phi", phi)


class Model:
    """Immutable kinematic tree.  Construction checks the tree structure.

    Numeric invariants (unit axes, SPD inertias, orthonormal origins) are
    reported by :func:`validate` instead, so that deliberately broken models
    can still be built and inspected in tests.
    """

    def __init__(self, base_link: str, links, joints, gravity=DEFAULT_GRAVITY):
        self.base_link = str(base_link)
        self.links = tuple(links)
        self.joints = tuple(joints)
        self.gravity = np.asarray(gravity, dtype=float).reshape(3)

        self.link_index: dict[str, int] = {}
        for i, link in enumerate(self.links):
            if link.name in self.link_index:
                raise ModelError(f"duplicate link name '{link.name}'")
            self.link_index[link.name] = i
        if self.base_link not in self.link_index:
            raise ModelError(f"base link '{self.base_link}' is not among the links")

        self.joint_index: dict[str, int] = {}
        for j, joint in enumerate(self.joints):
            if joint.name in self.joint_index:
                raise ModelError(f"duplicate joint name '{joint.name}'")
            self.joint_index[joint.name] = j
            for end, name in (("parent", joint.parent), ("child", joint.child)):
                if name not in self.link_index:
                    raise ModelError(f"joint '{joint.name}': unknown {end} link '{name}'")
            if joint.joint_type not in JOINT_TYPES:
                raise ModelError(f"joint '{joint.name}': unknown type '{joint.joint_type}'")

        n_links = len(self.links)
        self.parent_joint: list[int | None] = [None] * n_links
        for j, joint in enumerate(self.joints):
            ci = self.link_index[joint.child]
            if joint.child == self.base_link:
                raise ModelError(f"joint '{joint.name}': base link cannot be a joint child")
            if self.parent_joint[ci] is not None:
                raise ModelError(f"link '{joint.child}' has more than one parent joint")
            self.parent_joint[ci] = j

        # Breadth-first order from the base; anything unreached means the
        # joint graph has a cycle or a disconnected component.
        children: list[list[int]] = [[] for _ in range(n_links)]
        for j, joint in enumerate(self.joints):
            children[self.link_index[joint.parent]].append(self.link_index[joint.child])
        order = [self.link_index[self.base_link]]
        seen = {order[0]}
        cursor = 0
        while cursor < len(order):
            li = order[cursor]
            cursor += 1
            for ci in children[li]:
                if ci in seen:
                    raise ModelError(f"cycle in the joint graph at link '{self.links[ci].name}'")
                seen.add(ci)
                order.append(ci)
        if len(order) != n_links:
            missing = sorted(l.name for i, l in enumerate(self.links) if i not in seen)
            raise ModelError(f"cycle or disconnected links (unreachable from base): {missing}")
        self.topo_order = tuple(order)
        self.children = tuple(tuple(c) for c in children)

        # Joint path from the base to every link, in base-to-link order.
        self.path_joints: list[tuple[int, ...]] = [()] * n_links
        paths: list[tuple[int, ...]] = [()] * n_links
        for li in self.topo_order:
            pj = self.parent_joint[li]
            if pj is not None:
                pi = self.link_index[self.joints[pj].parent]
                paths[li] = paths[pi] + (pj,)
        self.path_joints = paths

        # subtree_links[j]: indices of links moved by joint j (the child's subtree).
        self.subtree_links: list[tuple[int, ...]] = []
        for j, joint in enumerate(self.joints):
            root = self.link_index[joint.child]
            sub = [root]
            k = 0
            while k < len(sub):
                sub.extend(children[sub[k]])
                k += 1
            self.subtree_links.append(tuple(sub))

        self.total_mass = float(sum(link.inertia.mass for link in self.links))

        # Hot-path caches for the dynamics sweeps.
        self._base_idx = self.link_index[self.base_link]
        self._inertia6 = tuple(link.inertia.matrix() for link in self.links)
        self._joint_child = tuple(self.link_index[j.child] for j in self.joints)
        self._joint_parent = tuple(self.link_index[j.parent] for j in self.joints)
        # nested[i][j] true when joint j lies in joint i's subtree (shares a
        # root-to-leaf path, with j the deeper of the two or equal).
        self._nested = tuple(
            tuple(self._joint_child[j] in set(self.subtree_links[i]) for j in range(len(self.joints)))
            for i in range(len(self.joints))
        )

    @property
    def n_j(self) -> int:
        return len(self.joints)

    def link(self, name: str) -> LinkSpec:
        try:
            return self.links[self.link_index[name]]
        except KeyError:
            raise ModelError(f"unknown link '{name}'") from None

    def with_gravity(self, gravity) -> "Model":
        return Model(self.base_link, self.links, self.joints, gravity)

    def __repr__(self) -> str:
        return (
            f"Model(base='{self.base_link}', links={len(self.links)}, "
            f"n_j={self.n_j}, mass={self.total_mass:g})"
        )


@dataclass(frozen=True, eq=False)
class State:
    """Configuration: world pose H of the base frame and shape vector s."""

    H: Transform
    s: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", np.atleast_1d(np.asarray(self.s, dtype=float)))


@dataclass(frozen=True, eq=False)
class VelocityState:
    """Velocity: base twist v in base coordinates and joint rates sdot."""

    v: np.ndarray
    sdot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(6))
        object.__setattr__(self, "sdot", np.atleast_1d(np.asarray(self.sdot, dtype=float)))

    @staticmethod
    def zero(n_j: int) -> "VelocityState":
        return VelocityState(np.zeros(6), np.zeros(n_j))


def three_link(d: float, gravity=DEFAULT_GRAVITY) -> Model:
    """Built-in planar three-link mechanism used throughout the test suite.

    A free-floating base (mass 1 kg, rotational inertia 4 kg m^2 about z)
    carries two distal links (mass 1 kg, inertia 1 kg m^2 about z each) on
    revolute z-joints anchored at (+1, 0, 0) and (-1, 0, 0) in the base
    frame.  Each distal CoM sits ``d`` metres from its joint axis along the
    link's own x axis.  Off-plane inertias are 1 kg m^2; they do not affect
    the planar behaviour.
    """
    d = float(d)
    base = LinkSpec("base", SpatialInertia(1.0, np.zeros(3), np.diag([1.0, 1.0, 4.0])))
    # Distal inertia about the link origin: diag(1,1,1) about the CoM plus
    # the parallel-axis term for the CoM offset (d, 0, 0).
    distal_inertia = SpatialInertia(
        1.0, np.array([d, 0.0, 0.0]), np.diag([1.0, 1.0 + d * d, 1.0 + d * d])
    )
    links = [base, LinkSpec("link1", distal_inertia), LinkSpec("link2", distal_inertia)]
    axis = np.array([0.0, 0.0, 1.0])
    joints = [
        JointSpec("j1", "base", "link1", "revolute", Transform(np.eye(3), [1.0, 0.0, 0.0]), axis),
        JointSpec("j2", "base", "link2", "revolute", Transform(np.eye(3), [-1.0, 0.0, 0.0]), axis),
    ]
    return Model("base", links, joints, gravity)


def validate(model: Model) -> list[str]:
    """Numeric invariant report for a structurally valid model.

    Returns one message per violation; an empty list means the model is
    valid.  Structural problems (cycles, bad names) are raised by the Model
    constructor instead and cannot reach this function.
    """
    report = []
    for link in model.links:
        for problem in link.inertia.check():
            report.append(f"link '{link.name}': {problem}")
    for joint in model.joints:
        norm = float(np.linalg.norm(joint.axis))
        if abs(norm - 1.0) > 1e-10:
            report.append(f"joint '{joint.name}': non-unit axis (norm {norm:.12g})")
        err = joint.origin.orthonormality_error()
        if err > 1e-12 or abs(np.linalg.det(joint.origin.rotation) - 1.0) > 1e-12:
            report.append(f"joint '{joint.name}': origin rotation is not in SO(3)")
        if not np.all(np.isfinite(joint.origin.origin)):
            report.append(f"joint '{joint.name}': non-finite origin")
    if not np.all(np.isfinite(model.gravity)):
        report.append("gravity is not finite")
    return report


def _rpy_matrix(rpy) -> np.ndarray:
    """Fixed-axis roll-pitch-yaw: Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    r, p, y = (float(a) for a in rpy)
    Rx = exp_so3(np.array([r, 0.0, 0.0]))
    Ry = exp_so3(np.array([0.0, p, 0.0]))
    Rz = exp_so3(np.array([0.0, 0.0, y]))
    return Rz @ Ry @ Rx


def _matrix_rpy(R) -> tuple[float, float, float]:
    """Inverse of :func:`_rpy_matrix` (pitch taken in [-pi/2, pi/2])."""
    R = np.asarray(R, dtype=float)
    p = float(np.arcsin(np.clip(-R[2, 0], -1.0, 1.0)))
    if abs(R[2, 0]) < 1.0 - 1e-12:
        r = float(np.arctan2(R[2, 1], R[2, 2]))
        y = float(np.arctan2(R[1, 0], R[0, 0]))
    else:
        r = float(np.arctan2(-R[1, 2], R[1, 1]))
        y = 0.0
    return r, p, y


def _require(table: dict, key: str, kind, where: str):
    if key not in table:
        raise ModelError(f"{where}: missing required key '{key}'")
    value = table[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ModelError(f"{where}.{key}: expected a number, got {type(value).__name__}")
        return float(value)
    if not isinstance(value, kind):
        raise ModelError(f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _vector(table: dict, key: str, n: int, where: str) -> np.ndarray:
    raw = _require(table, key, list, where)
    if len(raw) != n or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in raw):
        raise ModelError(f"{where}.{key}: expected {n} numbers")
    return np.asarray(raw, dtype=float)


def parse_model(text: str) -> Model:
    """Parse and fully validate a model document (TOML).

    Schema::

        base = "base"                  # name of the floating base link
        gravity = [0.0, 0.0, -9.81]    # optional, m/s^2

        [[links]]
        name = "base"
        mass = 1.0                     # kg
        com = [0.0, 0.0, 0.0]          # m, in the link frame
        inertia = { ixx = 1.0, ixy = 0.0, ixz = 0.0,
                    iyy = 1.0, iyz = 0.0, izz = 4.0 }   # kg m^2, about the
                                                        # link-frame origin

        [[joints]]                     # file order defines the s indexing
        name = "j1"
        parent = "base"
        child = "link1"
        type = "revolute"              # or "prismatic"
        origin = { xyz = [1.0, 0.0, 0.0], rpy = [0.0, 0.0, 0.0] }
        axis = [0.0, 0.0, 1.0]
    """
    try:
        doc = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ModelError(f"model document is not valid TOML: {exc}") from None

    base = _require(doc, "base", str, "document")
    gravity = (
        _vector(doc, "gravity", 3, "document") if "gravity" in doc else np.asarray(DEFAULT_GRAVITY)
    )

    links = []
    for i, entry in enumerate(_require(doc, "links", list, "document")):
        where = f"links[{i}]"
        if not isinstance(entry, dict):
            raise ModelError(f"{where}: expected a table")
        name = _require(entry, "name", str, where)
        mass = _require(entry, "mass", float, where)
        com = _vector(entry, "com", 3, where)
        itab = _require(entry, "inertia", dict, where)
        vals = {}
        for key in ("ixx", "ixy", "ixz", "iyy", "iyz", "izz"):
            vals[key] = _require(itab, key, float, f"{where}.inertia")
        I = np.array(
            [
                [vals["ixx"], vals["ixy"], vals["ixz"]],
                [vals["ixy"], vals["iyy"], vals["iyz"]],
                [vals["ixz"], vals["iyz"], vals["izz"]],
            ]
        )
        links.append(LinkSpec(name, SpatialInertia(mass, com, I)))

    joints = []
    for i, entry in enumerate(doc.get("joints", [])):
        where = f"joints[{i}]"
        if not isinstance(entry, dict):
            raise ModelError(f"{where}: expected a table")
        name = _require(entry, "name", str, where)
        parent = _require(entry, "parent", str, where)
        child = _require(entry, "child", str, where)
        jtype = _require(entry, "type", str, where)
        otab = _require(entry, "origin", dict, where)
        xyz = _vector(otab, "xyz", 3, f"{where}.origin")
        rpy = _vector(otab, "rpy", 3, f"{where}.origin")
        axis = _vector(entry, "axis", 3, where)
        joints.append(JointSpec(name, parent, child, jtype, Transform(_rpy_matrix(rpy), xyz), axis))

    model = Model(base, links, joints, gravity)
    report = validate(model)
    if report:
        raise ModelError("invalid model: " + "; ".join(report))
    return model


def _toml_float(x: float) -> str:
    s = f"{float(x):.17g}"
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def _toml_vec(v) -> str:
    return "[" + ", ".join(_toml_float(x) for x in v) + "]"


def serialize_model(model: Model) -> str:
    """Model document that :func:`parse_model` reproduces bit-identically."""
    out = [f'base = "{model.base_link}"', f"gravity = {_toml_vec(model.gravity)}", ""]
    for link in model.links:
        I = link.inertia.rot_inertia
        out.append("[[links]]")
        out.append(f'name = "{link.name}"')
        out.append(f"mass = {_toml_float(link.inertia.mass)}")
        out.append(f"com = {_toml_vec(link.inertia.com)}")
        out.append(
            "inertia = { "
            f"ixx = {_toml_float(I[0, 0])}, ixy = {_toml_float(I[0, 1])}, "
            f"ixz = {_toml_float(I[0, 2])}, iyy = {_toml_float(I[1, 1])}, "
            f"iyz = {_toml_float(I[1, 2])}, izz = {_toml_float(I[2, 2])}"
            " }"
        )
        out.append("")
    for joint in model.joints:
        rpy = _matrix_rpy(joint.origin.rotation)
        out.append("[[joints]]")
        out.append(f'name = "{joint.name}"')
        out.append(f'parent = "{joint.parent}"')
        out.append(f'child = "{joint.child}"')
        out.append(f'type = "{joint.joint_type}"')
        out.append(f"origin = {{ xyz = {_toml_vec(joint.origin.origin)}, rpy = {_toml_vec(rpy)} }}")
        out.append(f"axis = {_toml_vec(joint.axis)}")
        out.append("")
    return "\n".join(out)


def load_model(path) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())
