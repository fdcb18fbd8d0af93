"""Fitting library opening models into accepted bounding boxes; LoD3 assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .building import BuildingModel, OpeningLibraryEntry, OpeningSolid
from .exceptions import FitError, LinkError
from .geometry import PlaneFrame, unproject_from_plane, yaw_of_normal


@dataclass(frozen=True)
class FitTransform:
    """Scale-rotate-translate placing a unit opening template in the world.

    The yaw rotation maps the template's local axes (x = width, y = height,
    z = depth) onto the facade: width along the horizontal in-plane axis,
    height upward, depth into the wall (against the outward normal
    (cos yaw, sin yaw, 0)).
    """

    translation: np.ndarray
    yaw: float
    scale: tuple  # (s_u, s_v, s_n)

    def __post_init__(self):
        object.__setattr__(self, "translation",
                           np.asarray(self.translation, dtype=np.float64))
        if not all(s > 0 for s in self.scale):
            raise FitError(f"non-positive scale {self.scale}")

    def axes(self):
        n = np.array([math.cos(self.yaw), math.sin(self.yaw), 0.0])
        up = np.array([0.0, 0.0, 1.0])
        u = np.cross(up, n)
        return u, up, -n

    def apply(self, vertices: np.ndarray) -> np.ndarray:
        v = np.asarray(vertices, dtype=np.float64) * np.asarray(self.scale)
        u_ax, v_ax, d_ax = self.axes()
        rot = np.stack([u_ax, v_ax, d_ax], axis=0)  # rows: images of x, y, z
        return v @ rot + self.translation


def compute_fit(bbox, frame: PlaneFrame, entry: OpeningLibraryEntry,
                recess: float = 0.0) -> FitTransform:
    """Transform placing the entry's origin at the box's bottom-left corner.

    ``bbox`` is (u_min, v_min, width, height) in the facade frame; the library
    convention fixes the entry orientation, so the rotation is simply the
    facade's yaw.  Depth stays unscaled; ``recess`` shifts the solid behind
    the facade plane.
    """
    u_min, v_min, a, b = bbox
    yaw = yaw_of_normal(frame.n)
    anchor = unproject_from_plane(u_min, v_min, -recess, frame)
    return FitTransform(translation=anchor, yaw=yaw, scale=(a, b, 1.0))


def apply_fit(entry: OpeningLibraryEntry, t: FitTransform,
              parent_surface: str) -> OpeningSolid:
    """World-frame opening solid; its front face spans the fitted box."""
    tri = t.apply(entry.triangles.reshape(-1, 3)).reshape(-1, 3, 3)
    return OpeningSolid(
        kind=entry.kind,
        entry_name=entry.name,
        triangles=tri,
        anchor=t.translation.copy(),
        width=float(t.scale[0]),
        height=float(t.scale[1]),
        depth=entry.depth,
        parent_surface=parent_surface,
    )


def select_entry(library: list[OpeningLibraryEntry], kind: str) -> OpeningLibraryEntry:
    """First library entry of the requested kind."""
    for e in library:
        if e.kind == kind:
            return e
    raise FitError(f"opening library has no entry of kind {kind!r}")


def assemble_lod3(model: BuildingModel, solids: list[OpeningSolid]) -> BuildingModel:
    """LoD3 model: input surfaces preserved verbatim, solids appended."""
    known = {s.id for s in model.surfaces}
    for solid in solids:
        if solid.parent_surface not in known:
            raise LinkError(
                f"opening references unknown surface {solid.parent_surface!r}")
    return BuildingModel(id=model.id, lod=3,
                         surfaces=list(model.surfaces),
                         openings=list(model.openings) + list(solids))


def dispatch(clusters):
    """Split clusters into opening candidates and diagnostics for other modules."""
    openings = [c for c in clusters if c.kind in ("Window", "Door")]
    diagnostics = [c for c in clusters if c.kind not in ("Window", "Door")]
    return openings, diagnostics
