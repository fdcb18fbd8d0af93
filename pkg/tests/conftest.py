import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from facref.building import BuildingModel, Surface
from facref.geometry import PlanarPolygon


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def south_wall():
    """10 x 6 m facade in the z = 0..6 plane at y = 0, outward normal -y."""
    ring = np.array([(0, 0, 0), (10, 0, 0), (10, 0, 6), (0, 0, 6)], dtype=float)
    return Surface(id="wall_south", type="WallSurface",
                   polygon=PlanarPolygon(ring))


@pytest.fixture
def box_model(south_wall):
    """Minimal LoD2 model: one wall plus a ground slab."""
    ground = np.array([(0, 0, 0), (0, 8, 0), (10, 8, 0), (10, 0, 0)], dtype=float)
    return BuildingModel(id="b", lod=2, surfaces=[
        south_wall,
        Surface(id="ground", type="GroundSurface",
                polygon=PlanarPolygon(ground)),
    ])
