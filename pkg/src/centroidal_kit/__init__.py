"""Floating-base rigid-body dynamics with centroidal momentum, locked and
average velocities, and an algebraic test for whether the centroidal frame
depends on the robot's configuration alone."""

from .centroidal import (
    FrameTag,
    Momentum,
    average_velocity,
    integrate_centroidal_frame,
    locked_inertia_at,
    locked_velocity,
    momentum_map_pairing,
    momentum_rate,
    total_momentum,
)
from .dynamics import (
    ExternalWrench,
    MassPartition,
    SimulationError,
    Trajectory,
    bias_and_gravity,
    forward_dynamics,
    inverse_dynamics,
    mass_partition,
    simulate,
)
from .integrability import (
    FlatnessReport,
    FrameFunction,
    HolonomyResult,
    connection,
    construct_frame_function,
    curvature,
    flatness_report,
    holonomy,
    small_loop_check,
    verify_frame_function,
)
from .kinematics import (
    Jacobian,
    com,
    com_in_base,
    convert_velocity,
    forward_kinematics,
    link_jacobian,
)
from .model import (
    JointSpec,
    LinkSpec,
    Model,
    ModelError,
    State,
    VelocityState,
    load_model,
    parse_model,
    serialize_model,
    three_link,
    validate,
)
from .spatial import SpatialInertia, Transform, exp_se3
from .trajectories import load_shape_trajectory, sinusoid_loop

__version__ = "0.1.0"

__all__ = [
    "ExternalWrench",
    "FlatnessReport",
    "FrameFunction",
    "FrameTag",
    "HolonomyResult",
    "Jacobian",
    "JointSpec",
    "LinkSpec",
    "MassPartition",
    "Model",
    "ModelError",
    "Momentum",
    "SimulationError",
    "SpatialInertia",
    "State",
    "Trajectory",
    "Transform",
    "VelocityState",
    "average_velocity",
    "bias_and_gravity",
    "com",
    "com_in_base",
    "connection",
    "construct_frame_function",
    "convert_velocity",
    "curvature",
    "exp_se3",
    "flatness_report",
    "forward_dynamics",
    "forward_kinematics",
    "holonomy",
    "integrate_centroidal_frame",
    "inverse_dynamics",
    "link_jacobian",
    "load_model",
    "load_shape_trajectory",
    "locked_inertia_at",
    "locked_velocity",
    "mass_partition",
    "momentum_map_pairing",
    "momentum_rate",
    "parse_model",
    "serialize_model",
    "simulate",
    "sinusoid_loop",
    "small_loop_check",
    "three_link",
    "total_momentum",
    "validate",
    "verify_frame_function",
]
