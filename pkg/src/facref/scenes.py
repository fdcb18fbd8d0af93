"""Synthetic ground-truth scenes for demos and end-to-end testing.

``default_scene`` builds a 10 x 8 x 6 m building whose south facade carries
six windows and one door.  The LoD3 ground truth cuts the openings out of the
wall and places recessed library solids behind them; the LoD2 variant is the
same building with blind walls.  A matching scanner trajectory faces the
south facade.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import labels as L
from .building import BuildingModel, Surface
from .geometry import PlanarPolygon, fit_plane_frame
from .library import default_library
from .reconstruct import apply_fit, compute_fit, select_entry
from .simulator import ScanSpec, TransientBox

# openings on the south facade: (kind, u_min, v_min, width, height) in the
# facade frame (u = x, v = z); six 1.0 x 1.5 m windows and one 1.0 x 2.2 m
# door.  Edges sit on x.x5 coordinates so that, with the default grid layout,
# opening borders coincide with voxel boundaries instead of bisecting voxels.
DEFAULT_OPENINGS = (
    ("Window", 1.05, 1.45, 1.0, 1.5),
    ("Window", 4.45, 1.45, 1.0, 1.5),
    ("Window", 7.95, 1.45, 1.0, 1.5),
    ("Window", 1.05, 3.95, 1.0, 1.5),
    ("Window", 4.45, 3.95, 1.0, 1.5),
    ("Window", 7.95, 3.95, 1.0, 1.5),
    ("Door", 2.85, 0.0, 1.0, 2.2),
)

# Opening solids sit this far behind the facade plane: beyond the model's
# 0.19 m uncertainty band (so opening evidence reads as conflict), inside the
# 0.5 m semantic band, and a voxel-size multiple so the recessed faces land on
# voxel centers rather than boundaries.
RECESS = 0.2


@dataclass
class Scene:
    lod2: BuildingModel
    lod3: BuildingModel       # ground truth
    library: list
    scan: ScanSpec


def _box_walls(w: float, d: float, h: float):
    """Axis-aligned building shell; exterior rings wind outward-normal."""
    south = [(0, 0, 0), (w, 0, 0), (w, 0, h), (0, 0, h)]
    north = [(w, d, 0), (0, d, 0), (0, d, h), (w, d, h)]
    west = [(0, d, 0), (0, 0, 0), (0, 0, h), (0, d, h)]
    east = [(w, 0, 0), (w, d, 0), (w, d, h), (w, 0, h)]
    roof = [(0, 0, h), (w, 0, h), (w, d, h), (0, d, h)]
    ground = [(0, 0, 0), (0, d, 0), (w, d, 0), (w, 0, 0)]
    return south, north, west, east, roof, ground


def _hole_ring(u0, v0, a, b):
    return np.array([(u0, 0.0, v0), (u0 + a, 0.0, v0),
                     (u0 + a, 0.0, v0 + b), (u0, 0.0, v0 + b)])


def default_scene(width: float = 10.0, depth: float = 8.0, height: float = 6.0,
                  openings=DEFAULT_OPENINGS, recess: float = RECESS,
                  n_poses: int = 6, stand_off: float = 7.0,
                  angular_resolution: float = 0.008,
                  with_transient: bool = True, **scan_kwargs) -> Scene:
    south, north, west, east, roof, ground = _box_walls(width, depth, height)
    names = ("wall_south", "wall_north", "wall_west", "wall_east")
    types = ("WallSurface",) * 4 + ("RoofSurface", "GroundSurface")
    rings = (south, north, west, east, roof, ground)
    ids = names + ("roof", "ground")

    def surfaces(with_holes: bool):
        out = []
        for sid, stype, ring in zip(ids, types, rings):
            holes = ()
            if with_holes and sid == "wall_south":
                holes = tuple(_hole_ring(u0, v0, a, b)
                              for _, u0, v0, a, b in openings)
            out.append(Surface(id=sid, type=stype,
                               polygon=PlanarPolygon(np.array(ring, dtype=float),
                                                     holes)))
        return out

    lod2 = BuildingModel(id="demo_building", lod=2, surfaces=surfaces(False))

    library = default_library()
    gt_surfaces = surfaces(True)
    south_poly = gt_surfaces[0].polygon
    frame = fit_plane_frame(south_poly)
    solids = []
    for kind, u0, v0, a, b in openings:
        entry = select_entry(library, kind)
        t = compute_fit((u0, v0, a, b), frame, entry, recess=recess)
        solids.append(apply_fit(entry, t, "wall_south"))
    lod3 = BuildingModel(id="demo_building", lod=3,
                         surfaces=gt_surfaces, openings=solids)

    xs = np.linspace(0.5, width - 0.5, n_poses)
    trajectory = np.stack([xs, np.full(n_poses, -stand_off),
                           np.full(n_poses, 1.7)], axis=1)
    transients = ()
    if with_transient:
        transients = (TransientBox(lower=(5.8, -3.0, 0.0),
                                   upper=(7.6, -1.8, 1.5),
                                   fraction=0.3, label=L.OTHER),)
    scan = ScanSpec(trajectory=trajectory,
                    angular_resolution=angular_resolution,
                    transients=transients, **scan_kwargs)
    return Scene(lod2=lod2, lod3=lod3, library=library, scan=scan)


def acceptance_scene(angular_resolution: float = 0.014) -> Scene:
    """End-to-end benchmark scene: 50 poses at 5-15 m stand-off.

    Scan physics: glass transmission 0.9, range noise 0.01 m, label softness
    0.1 -- a deliberately harder setting than the demo defaults.  The default
    angular resolution keeps voxel point counts high enough that per-voxel
    median semantics stay robust under heavy label corruption.
    """
    scene = default_scene(angular_resolution=angular_resolution,
                         with_transient=False,
                         sigma_noise=0.01, tau=0.9, epsilon=0.1)
    n = 50
    xs = np.linspace(-0.5, 10.5, n)
    ys = -(5.0 + 10.0 * (np.arange(n) % 5) / 4.0)  # stand-offs 5..15 m
    traj = np.stack([xs, ys, np.full(n, 2.0)], axis=1)
    scan = ScanSpec(trajectory=traj, angular_resolution=angular_resolution,
                    sigma_noise=0.01, tau=0.9, epsilon=0.1,
                    fov_surfaces=("wall_south",))
    return Scene(lod2=scene.lod2, lod3=scene.lod3,
                 library=scene.library, scan=scan)


def transient_scene(angular_resolution: float = 0.006) -> Scene:
    """Dynamic-suppression scene: 1 m^3 box present in 1 of 10 scan passes."""
    scene = default_scene(angular_resolution=angular_resolution,
                         with_transient=False)
    n = 10
    xs = np.linspace(0.5, 9.5, n)
    zs = np.where(np.arange(n) % 2 == 0, 1.7, 3.5)  # two scan heights
    traj = np.stack([xs, np.full(n, -7.0), zs], axis=1)
    box = TransientBox(lower=(4.5, -3.0, 0.0), upper=(5.5, -2.0, 1.0),
                       fraction=0.1, label=L.OTHER)
    scan = ScanSpec(trajectory=traj, angular_resolution=angular_resolution,
                    transients=(box,), fov_surfaces=("wall_south",))
    return Scene(lod2=scene.lod2, lod3=scene.lod3,
                 library=scene.library, scan=scan)
