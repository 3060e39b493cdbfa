"""Shape-trajectory sources: the built-in sinusoidal loop and delimited files.

A shape trajectory is a callable ``t -> (s, sdot)``.  File-based
trajectories are linearly interpolated between samples, so integrators see
values at step midpoints too; when the file carries no rate columns the
rates come from central differences on the sampled grid.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["sinusoid_loop", "load_shape_samples", "interpolate_shape", "load_shape_trajectory"]

ShapeFn = Callable[[float], tuple[np.ndarray, np.ndarray]]


def sinusoid_loop(period: float = 10.0) -> ShapeFn:
    """Two-joint benchmark loop, closed over one period:

        s1(t) = (3 pi / 2) (cos(2 pi t / T) - 1),
        s2(t) = (pi / 2) sin(2 pi t / T).
    """
    w = 2.0 * np.pi / period

    def loop(t: float):
        s = np.array([1.5 * np.pi * (np.cos(w * t) - 1.0), 0.5 * np.pi * np.sin(w * t)])
        sdot = np.array([-1.5 * np.pi * w * np.sin(w * t), 0.5 * np.pi * w * np.cos(w * t)])
        return s, sdot

    return loop


def load_shape_samples(path, n_j: int):
    """Read a delimited trajectory file: columns t, s_1..s_n [, sdot_1..sdot_n].

    Returns (times, s, sdot); missing rate columns are reconstructed by
    central differences (one-sided at the ends).
    """
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    times = data[:, 0]
    cols = data.shape[1] - 1
    if cols == n_j:
        s = data[:, 1:]
        sdot = np.gradient(s, times, axis=0)
    elif cols == 2 * n_j:
        s = data[:, 1 : 1 + n_j]
        sdot = data[:, 1 + n_j :]
    else:
        raise ValueError(
            f"trajectory file has {cols} value columns; expected {n_j} or {2 * n_j}"
        )
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("trajectory times must be strictly increasing")
    return times, s, sdot


def interpolate_shape(times, s, sdot) -> ShapeFn:
    """Piecewise-linear interpolant over sampled shapes and rates."""
    times = np.asarray(times, dtype=float)
    s = np.asarray(s, dtype=float)
    sdot = np.asarray(sdot, dtype=float)

    def fn(t: float):
        si = np.array([np.interp(t, times, s[:, k]) for k in range(s.shape[1])])
        di = np.array([np.interp(t, times, sdot[:, k]) for k in range(s.shape[1])])
        return si, di

    return fn


def load_shape_trajectory(path, n_j: int) -> tuple[ShapeFn, float]:
    """File-backed shape trajectory plus its final sample time."""
    times, s, sdot = load_shape_samples(path, n_j)
    return interpolate_shape(times, s, sdot), float(times[-1])
