"""Static SVG snapshots of planar mechanisms with the centroidal frame drawn in.

Output is deterministic text (fixed float formatting, no timestamps or
generated ids), so snapshot files are byte-stable across runs and safe to
diff in tests.
"""

from __future__ import annotations

import numpy as np

from .kinematics import base_relative_poses, com_in_base
from .model import Model
from .spatial import Transform

__all__ = ["render_snapshot"]

_LINK_COLORS = ("#14b8c8", "#d348a8", "#7a9a32", "#c08f28")


def _f(x: float) -> str:
    return f"{float(x):.6g}"


def render_snapshot(
    model: Model,
    s,
    H_C: Transform,
    t: float,
    half_extent: float = 4.0,
    size: int = 480,
) -> str:
    """Draw the mechanism (base frame view, x-y plane) at shape ``s`` with the
    centroidal frame ``H_C`` (also base-relative) overlaid.

    Links appear as struts from their joint anchor towards their CoM, the
    mechanism CoM as a ring, and the centroidal frame as two axis arrows.
    """
    rel = base_relative_poses(model, s)
    p_com = com_in_base(model, s)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{_f(-half_extent)} {_f(-half_extent)} {_f(2 * half_extent)} {_f(2 * half_extent)}">',
        f'<rect x="{_f(-half_extent)}" y="{_f(-half_extent)}" width="{_f(2 * half_extent)}" '
        f'height="{_f(2 * half_extent)}" fill="white"/>',
        # Flip the y axis so +y points up.
        '<g transform="scale(1,-1)">',
    ]

    base_com = model.links[model._base_idx].inertia.com
    lines.append(
        f'<circle cx="{_f(base_com[0])}" cy="{_f(base_com[1])}" r="1.15" '
        'fill="#f2d477" stroke="#6b5b1e" stroke-width="0.04"/>'
    )
    for j, joint in enumerate(model.joints):
        ci = model._joint_child[j]
        anchor = rel[model._joint_parent[j]].apply(joint.origin.origin)
        link = model.links[ci]
        com_w = rel[ci].apply(link.inertia.com)
        span = com_w - anchor
        length = float(np.linalg.norm(span))
        if length < 0.25:
            direction = rel[ci].rotation[:, 0]
            end = anchor + 0.5 * direction
        else:
            end = anchor + span * max(1.0, 1.25 / length)
        color = _LINK_COLORS[j % len(_LINK_COLORS)]
        lines.append(
            f'<line x1="{_f(anchor[0])}" y1="{_f(anchor[1])}" x2="{_f(end[0])}" y2="{_f(end[1])}" '
            f'stroke="{color}" stroke-width="0.22" stroke-linecap="round"/>'
        )
        lines.append(
            f'<circle cx="{_f(anchor[0])}" cy="{_f(anchor[1])}" r="0.09" fill="#333333"/>'
        )
        lines.append(
            f'<circle cx="{_f(com_w[0])}" cy="{_f(com_w[1])}" r="0.07" fill="{color}" '
            'stroke="#333333" stroke-width="0.02"/>'
        )

    lines.append(
        f'<circle cx="{_f(p_com[0])}" cy="{_f(p_com[1])}" r="0.11" fill="none" '
        'stroke="#222222" stroke-width="0.05"/>'
    )

    o = H_C.origin
    for axis, color in ((0, "#d62728"), (1, "#2ca02c")):
        tip = o + 0.9 * H_C.rotation[:, axis]
        lines.append(
            f'<line x1="{_f(o[0])}" y1="{_f(o[1])}" x2="{_f(tip[0])}" y2="{_f(tip[1])}" '
            f'stroke="{color}" stroke-width="0.07"/>'
        )
        lines.append(f'<circle cx="{_f(tip[0])}" cy="{_f(tip[1])}" r="0.06" fill="{color}"/>')

    lines.append("</g>")
    lines.append(
        f'<text x="{_f(-half_extent + 0.25)}" y="{_f(-half_extent + 0.55)}" '
        f'font-family="monospace" font-size="0.45">t = {_f(t)} s</text>'
    )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
