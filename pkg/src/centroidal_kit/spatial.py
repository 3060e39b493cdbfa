"""SE(3) and 6D spatial-vector algebra shared by the whole package.

Coordinate conventions, used everywhere without exception:

* 6D motion vectors (twists, velocities) are numpy arrays with the linear
  part first: ``[vx, vy, vz, wx, wy, wz]``.
* 6D force vectors (wrenches, momenta) put the force / linear momentum
  first: ``[fx, fy, fz, taux, tauy, tauz]``.
* Poses are :class:`Transform` values (3x3 rotation matrix plus origin).
  Rotations stay matrices, never Euler angles or quaternions, and every
  pose update goes through :func:`exp_se3`, so orthonormality is preserved
  by construction rather than by re-normalisation.

``motion_transform(H)`` maps motion vectors from the frame H is "of" to the
frame H is "in" (for H = pose of B in A it maps B coordinates to A
coordinates); ``force_transform(H)`` is its inverse transpose and maps force
vectors the same way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SMALL_ANGLE",
    "Transform",
    "SpatialInertia",
    "hat3",
    "vee3",
    "hat6",
    "vee6",
    "exp_so3",
    "exp_se3",
    "cross6",
    "crossdual6",
    "dexpinv",
    "motion_transform",
    "force_transform",
    "inertia_to_frame",
    "transform_inertia_matrix",
    "rk4_step_right",
]

# Below this rotation angle (rad) the Rodrigues coefficients (1-cos)/t^2 and
# (t-sin)/t^3 lose all significant digits to cancellation; use their series.
SMALL_ANGLE = 1e-8

_EYE3 = np.eye(3)


def hat3(w) -> np.ndarray:
    """3x3 skew matrix of ``w`` so that ``hat3(w) @ x == np.cross(w, x)``."""
    x, y, z = np.asarray(w, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee3(W, tol: float = 1e-12) -> np.ndarray:
    """Inverse of :func:`hat3`.

    Rejects matrices whose symmetric part exceeds ``tol`` (max-abs entry).
    """
    W = np.asarray(W, dtype=float)
    sym = 0.5 * (W + W.T)
    if np.max(np.abs(sym)) > tol:
        raise ValueError(
            f"vee3: matrix is not skew-symmetric (symmetric part {np.max(np.abs(sym)):.3e} > {tol:.1e})"
        )
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


def hat6(v) -> np.ndarray:
    """4x4 matrix form of a twist: ``[[hat3(w), v_lin], [0, 0]]``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros((4, 4))
    out[:3, :3] = hat3(v[3:])
    out[:3, 3] = v[:3]
    return out


def vee6(V, tol: float = 1e-12) -> np.ndarray:
    """Inverse of :func:`hat6`.

    Only the bottom row is validated (must vanish within ``tol``); the
    rotation block is antisymmetrised before reading, which makes this safe
    on finite-difference matrices that are skew only up to truncation error.
    """
    V = np.asarray(V, dtype=float)
    if np.max(np.abs(V[3, :])) > tol:
        raise ValueError("vee6: bottom row is not zero")
    W = 0.5 * (V[:3, :3] - V[:3, :3].T)
    return np.array([V[0, 3], V[1, 3], V[2, 3], W[2, 1], W[0, 2], W[1, 0]])


def exp_so3(w) -> np.ndarray:
    """Rodrigues formula, with a series branch below :data:`SMALL_ANGLE`."""
    w = np.asarray(w, dtype=float)
    theta = float(np.linalg.norm(w))
    K = hat3(w)
    K2 = K @ K
    if theta < SMALL_ANGLE:
        a = 1.0 - theta * theta / 6.0
        b = 0.5 - theta * theta / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / (theta * theta)
    return _EYE3 + a * K + b * K2


def exp_se3(v, dt: float = 1.0) -> "Transform":
    """Closed-form SE(3) exponential of the twist ``dt * v``.

    ``exp_se3(v, 0)`` is the identity; the rotation is Rodrigues' formula
    and the origin uses the standard translation factor V(w) @ u.
    """
    xi = dt * np.asarray(v, dtype=float)
    u, w = xi[:3], xi[3:]
    theta = float(np.linalg.norm(w))
    K = hat3(w)
    K2 = K @ K
    if theta < SMALL_ANGLE:
        a = 1.0 - theta * theta / 6.0
        b = 0.5 - theta * theta / 24.0
        c = 1.0 / 6.0 - theta * theta / 120.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / (theta * theta)
        c = (theta - np.sin(theta)) / (theta * theta * theta)
    R = _EYE3 + a * K + b * K2
    V = _EYE3 + b * K + c * K2
    return Transform(R, V @ u)


def cross6(v, u) -> np.ndarray:
    """6D motion cross product ``v x u`` (the se(3) Lie bracket).

    Written out component-wise; ``np.cross`` costs an order of magnitude
    more per call at this size.
    """
    v1, v2, v3, w1, w2, w3 = np.asarray(v, dtype=float)
    u1, u2, u3, m1, m2, m3 = np.asarray(u, dtype=float)
    return np.array(
        [
            w2 * u3 - w3 * u2 + v2 * m3 - v3 * m2,
            w3 * u1 - w1 * u3 + v3 * m1 - v1 * m3,
            w1 * u2 - w2 * u1 + v1 * m2 - v2 * m1,
            w2 * m3 - w3 * m2,
            w3 * m1 - w1 * m3,
            w1 * m2 - w2 * m1,
        ]
    )


def crossdual6(v, f) -> np.ndarray:
    """Dual 6D cross product of a motion vector ``v`` with a force vector ``f``.

    Satisfies ``crossdual6(v, f) @ u == -(f @ cross6(v, u))`` for all u.
    """
    v1, v2, v3, w1, w2, w3 = np.asarray(v, dtype=float)
    f1, f2, f3, t1, t2, t3 = np.asarray(f, dtype=float)
    return np.array(
        [
            w2 * f3 - w3 * f2,
            w3 * f1 - w1 * f3,
            w1 * f2 - w2 * f1,
            v2 * f3 - v3 * f2 + w2 * t3 - w3 * t2,
            v3 * f1 - v1 * f3 + w3 * t1 - w1 * t3,
            v1 * f2 - v2 * f1 + w1 * t2 - w2 * t1,
        ]
    )


def dexpinv(u, w) -> np.ndarray:
    """Inverse right-trivialised differential of exp, truncated for RK4 use.

    ``w - [u,w]/2 + [u,[u,w]]/12``; the truncation error is O(|u|^3 |w|),
    which is what a fourth-order Munthe-Kaas step needs.
    """
    c = cross6(u, w)
    return w - 0.5 * c + (1.0 / 12.0) * cross6(u, c)


@dataclass(frozen=True, eq=False)
class Transform:
    """Rigid transform: rotation in SO(3) plus origin, i.e. an SE(3) element.

    ``Transform(R, o)`` standing for the pose of frame B in frame A maps B
    point coordinates to A point coordinates via ``apply``.
    """

    rotation: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))

    @staticmethod
    def identity() -> "Transform":
        return Transform(_EYE3.copy(), np.zeros(3))

    def __matmul__(self, other: "Transform") -> "Transform":
        return Transform(self.rotation @ other.rotation, self.origin + self.rotation @ other.origin)

    def inverse(self) -> "Transform":
        Rt = self.rotation.T
        return Transform(Rt, -(Rt @ self.origin))

    def apply(self, point) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.origin

    def homogeneous(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.origin
        return out

    @staticmethod
    def from_homogeneous(T) -> "Transform":
        T = np.asarray(T, dtype=float)
        return Transform(T[:3, :3], T[:3, 3])

    def orthonormality_error(self) -> float:
        """Max-abs deviation of R^T R from the identity."""
        return float(np.max(np.abs(self.rotation.T @ self.rotation - _EYE3)))


def motion_transform(H: Transform) -> np.ndarray:
    """6x6 velocity transform ``[[R, hat(o) R], [0, R]]`` of a pose H."""
    R = H.rotation
    out = np.zeros((6, 6))
    out[:3, :3] = R
    out[:3, 3:] = hat3(H.origin) @ R
    out[3:, 3:] = R
    return out


def force_transform(H: Transform) -> np.ndarray:
    """6x6 wrench transform ``[[R, 0], [hat(o) R, R]]``; equals motion_transform(H)^-T."""
    R = H.rotation
    out = np.zeros((6, 6))
    out[:3, :3] = R
    out[3:, :3] = hat3(H.origin) @ R
    out[3:, 3:] = R
    return out


@dataclass(frozen=True, eq=False)
class SpatialInertia:
    """Generalized inertia of one rigid body, expressed in its carrying frame.

    ``com`` is the body's centre of mass in that frame and ``rot_inertia``
    the 3x3 rotational inertia about the frame *origin* (not the CoM).  The
    assembled 6x6 acts on motion vectors and returns momenta:

        [[m I,        -m hat(com)],
         [m hat(com),  rot_inertia]]

    so a pure linear velocity v yields momentum ``(m v, m com x v)`` and a
    pure angular velocity w yields ``(m w x com, rot_inertia w)``.
    """

    mass: float
    com: np.ndarray
    rot_inertia: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "com", np.asarray(self.com, dtype=float).reshape(3))
        object.__setattr__(self, "rot_inertia", np.asarray(self.rot_inertia, dtype=float).reshape(3, 3))

    def matrix(self) -> np.ndarray:
        C = hat3(self.com)
        out = np.zeros((6, 6))
        out[:3, :3] = self.mass * _EYE3
        out[:3, 3:] = -self.mass * C
        out[3:, :3] = self.mass * C
        out[3:, 3:] = self.rot_inertia
        return out

    @staticmethod
    def from_matrix(M) -> "SpatialInertia":
        M = np.asarray(M, dtype=float)
        mass = (M[0, 0] + M[1, 1] + M[2, 2]) / 3.0
        C = 0.5 * (M[3:, :3] - M[3:, :3].T)
        com = np.array([C[2, 1], C[0, 2], C[1, 0]]) / mass
        return SpatialInertia(mass, com, M[3:, 3:])

    def check(self) -> list[str]:
        """Violated invariants (empty list when the inertia is physical)."""
        problems = []
        if not np.isfinite(self.mass) or self.mass <= 0.0:
            problems.append(f"mass {self.mass} is not positive")
        if not np.all(np.isfinite(self.com)):
            problems.append("com has non-finite entries")
        if np.max(np.abs(self.rot_inertia - self.rot_inertia.T)) > 1e-9:
            problems.append("rotational inertia is not symmetric")
        else:
            try:
                np.linalg.cholesky(self.matrix())
            except np.linalg.LinAlgError:
                problems.append("inertia not SPD")
        return problems


def transform_inertia_matrix(M6, H: Transform) -> np.ndarray:
    """Congruence transform of a 6x6 inertia from frame S to frame T, H = pose of S in T.

    Uses ``F M F^T`` with F the wrench transform of H, which equals
    ``F M motion_transform(H^-1)`` because ``motion_transform(H^-1) == F^T``.
    """
    F = force_transform(H)
    return F @ np.asarray(M6, dtype=float) @ F.T


def inertia_to_frame(inertia: SpatialInertia, H: Transform) -> SpatialInertia:
    """Re-express a spatial inertia in another frame (H = pose of the current frame in the target)."""
    return SpatialInertia.from_matrix(transform_inertia_matrix(inertia.matrix(), H))


def rk4_step_right(v_fn, t: float, dt: float, Y: Transform) -> Transform:
    """One Munthe-Kaas RK4 step of ``dY/dt = hat6(v_fn(t)) @ Y`` on SE(3).

    ``v_fn`` returns the right-trivialised velocity (a 6-vector) as a
    function of time only; the update is ``Y <- exp(Omega) Y`` which keeps Y
    in SE(3) exactly.
    """
    k1 = v_fn(t)
    k2 = dexpinv(0.5 * dt * k1, v_fn(t + 0.5 * dt))
    k3 = dexpinv(0.5 * dt * k2, v_fn(t + 0.5 * dt))
    k4 = dexpinv(dt * k3, v_fn(t + dt))
    omega = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return exp_se3(omega) @ Y
