"""facref: refine semantic LoD2 building models to LoD3 from laser scans.

The pipeline traces laser rays through a probabilistic voxel occupancy grid,
compares the result against the model facades and the fused point semantics,
infers openings per texture cell with a small Bayesian network, generalizes
high-posterior clusters to rectangles, fits parametric window/door solids, and
back-projects the decisions onto the point cloud.
"""

from .building import BuildingModel, OpeningLibraryEntry, OpeningSolid, Surface
from .config import Config, read_config, write_config
from .exceptions import FacrefError
from .geometry import PlanarPolygon, PlaneFrame, Ray
from .io_formats import (PointCloud, read_building_json, read_citygml_subset,
                         read_opening_library, read_point_cloud,
                         write_building_json, write_citygml_subset,
                         write_point_cloud)
from .occupancy import GridParams, OccupancyGrid, VoxelState
from .pipeline import PipelineResult, run_pipeline
from .simulator import ScanSpec, TransientBox, corrupt_labels, simulate
from .uncertainty import FacadeConfidence, UncertaintySpec, combine

__version__ = "1.0.0"

__all__ = [
    "BuildingModel", "OpeningLibraryEntry", "OpeningSolid", "Surface",
    "Config", "read_config", "write_config", "FacrefError",
    "PlanarPolygon", "PlaneFrame", "Ray",
    "PointCloud", "read_building_json", "read_citygml_subset",
    "read_opening_library", "read_point_cloud", "write_building_json",
    "write_citygml_subset", "write_point_cloud",
    "GridParams", "OccupancyGrid", "VoxelState",
    "PipelineResult", "run_pipeline",
    "ScanSpec", "TransientBox", "corrupt_labels", "simulate",
    "FacadeConfidence", "UncertaintySpec", "combine",
    "__version__",
]
