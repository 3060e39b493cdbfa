"""Command-line front end.

Subcommands: ``check-flatness``, ``holonomy``, ``simulate``, ``momentum``,
``info``.  Exit codes are a stable contract:

* 0: success (and, for verdict-style commands, a passing verdict),
* 2: a failing verdict (non-flat connection, violated conservation bound),
* 1: usage or model errors,
* 3: numerical blow-up during integration.

All data files are written with 17-significant-digit floats and comma
delimiters; outputs carry no wall-clock timestamps, so reruns are
byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .centroidal import FrameTag, total_momentum
from .dynamics import SimulationError, save_trajectory, simulate
from .integrability import default_grid, flatness_report, holonomy
from .kinematics import com_in_base
from .model import Model, ModelError, State, VelocityState, load_model, three_link
from .centroidal import average_velocity, locked_velocity, save_centroidal_trajectory
from .svg import render_snapshot
from .trajectories import load_shape_trajectory, sinusoid_loop

__all__ = ["main"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERDICT = 2
EXIT_NONFINITE = 3


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _parse_vector(text: str, n: int, name: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != n:
        raise ModelError(f"--{name} expects {n} comma-separated numbers")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ModelError(f"--{name} expects numbers, got '{text}'") from None


def _resolve_model(spec: str, gravity: str | None) -> Model:
    """Builtin 'three-link:d=<value>' or a model file path."""
    if spec.startswith("three-link"):
        d = 1.0
        if ":" in spec:
            _, _, opts = spec.partition(":")
            key, _, value = opts.partition("=")
            if key != "d":
                raise ModelError(f"unknown builtin model option '{opts}'")
            try:
                d = float(value)
            except ValueError:
                raise ModelError(f"bad value for d in '{spec}'") from None
        model = three_link(d)
    else:
        path = Path(spec)
        if not path.exists():
            raise ModelError(f"model file '{spec}' does not exist")
        model = load_model(path)
    if gravity is not None:
        model = model.with_gravity(_parse_vector(gravity, 3, "gravity"))
    return model


def _resolve_loop(spec: str, model: Model, t_end: float | None):
    """Builtin 'sinusoid:T=<seconds>' or a trajectory file path.

    Returns (loop_fn, period).
    """
    if spec.startswith("sinusoid"):
        period = 10.0
        if ":" in spec:
            _, _, opts = spec.partition(":")
            key, _, value = opts.partition("=")
            if key != "T":
                raise ModelError(f"unknown builtin trajectory option '{opts}'")
            period = float(value)
        if model.n_j != 2:
            raise ModelError("builtin sinusoid trajectory needs a 2-joint model")
        return sinusoid_loop(period), period
    path = Path(spec)
    if not path.exists():
        raise ModelError(f"trajectory file '{spec}' does not exist")
    loop, period = load_shape_trajectory(path, model.n_j)
    if t_end is not None:
        period = min(period, t_end)
    return loop, period


def cmd_check_flatness(args) -> int:
    model = _resolve_model(args.model, args.gravity)
    grid = tuple((lo, hi, args.grid) for lo, hi, _ in default_grid(model))
    threads = args.threads
    if threads is None:
        threads = max(1, int(os.environ.get("CENTROIDAL_KIT_THREADS", "1")))
    report = flatness_report(model, grid=grid, tol=args.tol, h=args.h, n_threads=threads)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "flatness_report.json"
    report_path.write_text(report.to_json() + "\n", encoding="utf-8")
    verdict = "flat" if report.flat else "non-flat"
    print(f"verdict: {verdict}")
    print(f"max curvature norm: {_fmt(report.max_norm)} (tol {_fmt(report.tol)})")
    if report.worst_pair is not None:
        print(
            f"worst pair: {report.worst_pair} at s = "
            f"[{', '.join(_fmt(x) for x in report.worst_shape)}]"
        )
    print(f"report: {report_path}")
    return EXIT_OK if report.flat else EXIT_VERDICT


def cmd_holonomy(args) -> int:
    model = _resolve_model(args.model, args.gravity)
    loop, period = _resolve_loop(args.trajectory, model, args.t_end)
    result = holonomy(model, loop, period, dt=args.dt)
    print(f"loop period: {_fmt(period)} s, dt = {_fmt(args.dt)} s")
    print(f"rotation drift angle: {_fmt(result.rotation_angle)} rad")
    print(f"origin return distance: {_fmt(result.origin_return)} m")
    print(f"com tracking error: {_fmt(result.com_tracking)} m")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj_path = out_dir / "centroidal_trajectory.csv"
    save_centroidal_trajectory(result.trajectory, traj_path)
    print(f"trajectory: {traj_path}")
    if args.snapshots > 0:
        k = args.snapshots
        times = [period * i / (k - 1) for i in range(k)] if k > 1 else [0.0]
        grid = result.trajectory.times
        for i, t in enumerate(times):
            idx = int(round(t / (grid[1] - grid[0])))
            idx = min(idx, len(grid) - 1)
            s, _ = loop(grid[idx])
            svg = render_snapshot(model, s, result.trajectory.poses[idx], float(grid[idx]))
            path = out_dir / f"snapshot_{i:02d}.svg"
            path.write_text(svg, encoding="utf-8")
            print(f"snapshot: {path} (t = {_fmt(float(grid[idx]))} s)")
    return EXIT_OK


def _initial_conditions(args, model: Model) -> tuple[State, VelocityState]:
    s0 = _parse_vector(args.s0, model.n_j, "s0") if args.s0 else np.zeros(model.n_j)
    v0 = _parse_vector(args.v0, 6, "v0") if args.v0 else np.zeros(6)
    sdot0 = _parse_vector(args.sdot0, model.n_j, "sdot0") if args.sdot0 else np.zeros(model.n_j)
    from .spatial import Transform

    return State(Transform.identity(), s0), VelocityState(v0, sdot0)


def cmd_simulate(args) -> int:
    model = _resolve_model(args.model, args.gravity)
    state0, nu0 = _initial_conditions(args, model)
    trajectory = simulate(model, state0, nu0, args.t_end, args.dt)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "trajectory.csv"
    save_trajectory(trajectory, path)
    print(f"simulated {len(trajectory) - 1} steps to t = {_fmt(float(trajectory.times[-1]))} s")
    print(f"trajectory: {path}")
    return EXIT_OK


def cmd_momentum(args) -> int:
    model = _resolve_model(args.model, args.gravity)
    state0, nu0 = _initial_conditions(args, model)
    trajectory = simulate(model, state0, nu0, args.t_end, args.dt)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "momentum.csv"
    j_world = []
    j_com = []
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# t, J_world(6), J_com(6), v_locked_base(6), v_average(6)\n")
        for t, st, nu in zip(trajectory.times, trajectory.states, trajectory.velocities):
            jw = total_momentum(model, st, nu, FrameTag.A).value
            jg = total_momentum(model, st, nu, FrameTag.G).value
            vl = locked_velocity(model, st, nu, FrameTag.B)
            va = average_velocity(model, st, nu)
            j_world.append(jw)
            j_com.append(jg)
            row = np.concatenate(([t], jw, jg, vl, va))
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    print(f"momentum columns: {path}")
    if args.check_conservation:
        j_world = np.asarray(j_world)
        j_com = np.asarray(j_com)
        scale_w = max(float(np.linalg.norm(j_world[0])), 1e-12)
        scale_g = max(float(np.linalg.norm(j_com[0])), 1e-12)
        drift_w = float(np.max(np.linalg.norm(j_world - j_world[0], axis=1))) / scale_w
        drift_g = float(np.max(np.linalg.norm(j_com - j_com[0], axis=1))) / scale_g
        print(f"relative momentum drift: world {_fmt(drift_w)}, com {_fmt(drift_g)}")
        if drift_w > args.drift_tol or drift_g > args.drift_tol:
            print(f"conservation check FAILED (tol {_fmt(args.drift_tol)})")
            return EXIT_VERDICT
        print(f"conservation check passed (tol {_fmt(args.drift_tol)})")
    return EXIT_OK


def cmd_info(args) -> int:
    model = _resolve_model(args.model, args.gravity)
    print(f"base link: {model.base_link}")
    print(f"links: {len(model.links)}, joints: {model.n_j}")
    print(f"total mass: {_fmt(model.total_mass)} kg")
    print(f"gravity: [{', '.join(_fmt(x) for x in model.gravity)}] m/s^2")
    p = com_in_base(model, np.zeros(model.n_j))
    print(f"com at zero shape (base frame): [{', '.join(_fmt(x) for x in p)}] m")
    for j, joint in enumerate(model.joints):
        print(
            f"  s[{j}] {joint.name}: {joint.joint_type}, {joint.parent} -> {joint.child}, "
            f"axis [{', '.join(_fmt(x) for x in joint.axis)}]"
        )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="centroidal-kit",
        description="Floating-base centroidal dynamics and integrability analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--model", required=True, help="model file or builtin 'three-link:d=<value>'")
        p.add_argument("--gravity", help="override gravity as 'x,y,z' (m/s^2)")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("check-flatness", help="decide flatness of the mechanical connection")
    add_common(p)
    p.add_argument("--grid", type=int, default=20, help="points per joint axis")
    p.add_argument("--tol", type=float, default=1e-7, help="flatness tolerance on |B_ij|")
    p.add_argument("--h", type=float, default=1e-4, help="finite-difference step")
    p.add_argument("--threads", type=int, default=None, help="scan worker threads")
    p.set_defaults(fn=cmd_check_flatness)

    p = sub.add_parser("holonomy", help="frame drift around a closed shape loop")
    add_common(p)
    p.add_argument("--trajectory", default="sinusoid:T=10", help="loop file or 'sinusoid:T=<s>'")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=None, help="truncate a file trajectory")
    p.add_argument("--snapshots", type=int, default=0, help="write k SVG frames")
    p.set_defaults(fn=cmd_holonomy)

    p = sub.add_parser("simulate", help="forward-dynamics rollout")
    add_common(p)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--s0", help="initial shape 's1,...'")
    p.add_argument("--v0", help="initial base velocity 'vx,vy,vz,wx,wy,wz'")
    p.add_argument("--sdot0", help="initial joint rates")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("momentum", help="simulate and report momentum columns")
    add_common(p)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--s0", help="initial shape 's1,...'")
    p.add_argument("--v0", help="initial base velocity 'vx,vy,vz,wx,wy,wz'")
    p.add_argument("--sdot0", help="initial joint rates")
    p.add_argument("--check-conservation", action="store_true")
    p.add_argument("--drift-tol", type=float, default=1e-6)
    p.set_defaults(fn=cmd_momentum)

    p = sub.add_parser("info", help="print a model summary")
    add_common(p)
    p.set_defaults(fn=cmd_info)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ModelError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONFINITE


if __name__ == "__main__":
    sys.exit(main())
