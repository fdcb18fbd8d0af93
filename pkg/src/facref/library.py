"""Built-in parametric opening templates (unit-size window and door solids).

Templates live in a local frame with x = width, y = height, z = depth and an
axis-aligned bounding box [0,1] x [0,1] x [0, depth].  The window consists of
an opaque frame band on the front face plus a transmissive glass pane at the
back; the door is a fully opaque slab.
"""

from __future__ import annotations

import numpy as np

from .building import OpeningLibraryEntry


def _quad(p0, p1, p2, p3):
    return [[p0, p1, p2], [p0, p2, p3]]


def window_entry(name: str = "window_basic", depth: float = 0.2,
                 fx: float = 0.3, fy: float = 0.3) -> OpeningLibraryEntry:
    """Window template: frame band of fractional width (fx, fy), glass behind.

    The frame triangles are opaque (laser always reflects); the glass pane at
    z = depth transmits with the scan spec's transmission probability.
    """
    tris = []
    front = [
        ((0, 0), (1, 0), (1, fy), (0, fy)),          # bottom rail
        ((0, 1 - fy), (1, 1 - fy), (1, 1), (0, 1)),  # top rail
        ((0, fy), (fx, fy), (fx, 1 - fy), (0, 1 - fy)),          # left stile
        ((1 - fx, fy), (1, fy), (1, 1 - fy), (1 - fx, 1 - fy)),  # right stile
    ]
    for quad in front:
        tris += _quad(*[(x, y, 0.0) for x, y in quad])
    opaque = tuple(range(len(tris)))
    glass = ((fx, fy), (1 - fx, fy), (1 - fx, 1 - fy), (fx, 1 - fy))
    tris += _quad(*[(x, y, depth) for x, y in glass])
    return OpeningLibraryEntry(name=name, kind="Window",
                               triangles=np.array(tris, dtype=np.float64),
                               depth=depth, opaque_triangles=opaque)


def door_entry(name: str = "door_basic", depth: float = 0.2) -> OpeningLibraryEntry:
    """Door template: opaque slab (front and back faces)."""
    tris = _quad((0, 0, 0.0), (1, 0, 0.0), (1, 1, 0.0), (0, 1, 0.0))
    tris += _quad((0, 0, depth), (1, 0, depth), (1, 1, depth), (0, 1, depth))
    return OpeningLibraryEntry(name=name, kind="Door",
                               triangles=np.array(tris, dtype=np.float64),
                               depth=depth,
                               opaque_triangles=tuple(range(len(tris))))


def default_library() -> list[OpeningLibraryEntry]:
    return [window_entry(), door_entry()]
