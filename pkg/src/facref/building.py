"""Building model domain types: surfaces, opening solids, and the opening library."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import SchemaError
from .geometry import PlanarPolygon

SURFACE_TYPES = ("WallSurface", "RoofSurface", "GroundSurface")
OPENING_KINDS = ("Window", "Door")


@dataclass(frozen=True)
class Surface:
    id: str
    type: str
    polygon: PlanarPolygon

    def __post_init__(self):
        if self.type not in SURFACE_TYPES:
            raise SchemaError(f"unknown surface type {self.type!r}")


@dataclass(frozen=True)
class OpeningSolid:
    """Fitted window/door solid in world coordinates.

    ``triangles`` is an (N, 3, 3) float array; ``anchor`` is the world position
    of the solid's bottom-left corner on the parent facade plane.
    """

    kind: str
    entry_name: str
    triangles: np.ndarray
    anchor: np.ndarray
    width: float
    height: float
    depth: float
    parent_surface: str

    def __post_init__(self):
        if self.kind not in OPENING_KINDS:
            raise SchemaError(f"unknown opening kind {self.kind!r}")
        tri = np.asarray(self.triangles, dtype=np.float64)
        if tri.ndim != 3 or tri.shape[1:] != (3, 3):
            raise SchemaError("triangles must have shape (N, 3, 3)")
        object.__setattr__(self, "triangles", tri)
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=np.float64))


@dataclass
class BuildingModel:
    id: str
    lod: int
    surfaces: list = field(default_factory=list)
    openings: list = field(default_factory=list)

    def __post_init__(self):
        if self.lod not in (2, 3):
            raise SchemaError(f"lod must be 2 or 3, got {self.lod}")
        if self.lod == 2 and self.openings:
            raise SchemaError("LoD2 models must not carry openings")
        ids = [s.id for s in self.surfaces]
        if len(set(ids)) != len(ids):
            raise SchemaError("surface ids must be unique")

    def surface_by_id(self, sid: str) -> Surface:
        for s in self.surfaces:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def walls(self):
        return [s for s in self.surfaces if s.type == "WallSurface"]


@dataclass(frozen=True)
class OpeningLibraryEntry:
    """Unit-size opening template: bounding box [0,1] x [0,1] x [0, depth].

    Local axes: x = width, y = height, z = depth; origin at the
    bottom-left-front corner.  ``opaque_triangles`` lists indices of triangles
    that always reflect a laser ray (frame, door leaf); the rest transmit with
    the scan spec's window transmission probability.
    """

    name: str
    kind: str
    triangles: np.ndarray
    depth: float
    opaque_triangles: tuple = ()

    def __post_init__(self):
        if self.kind not in OPENING_KINDS:
            raise SchemaError(f"unknown opening kind {self.kind!r}")
        tri = np.asarray(self.triangles, dtype=np.float64)
        if tri.ndim != 3 or tri.shape[1:] != (3, 3):
            raise SchemaError("triangles must have shape (N, 3, 3)")
        lo = tri.reshape(-1, 3).min(axis=0)
        hi = tri.reshape(-1, 3).max(axis=0)
        want_hi = np.array([1.0, 1.0, self.depth])
        if not (np.allclose(lo, 0.0, atol=1e-9) and np.allclose(hi, want_hi, atol=1e-9)):
            raise SchemaError(
                f"entry {self.name!r} bounding box must be [0,1]x[0,1]x[0,{self.depth}]"
            )
        object.__setattr__(self, "triangles", tri)
        object.__setattr__(self, "opaque_triangles", tuple(self.opaque_triangles))
