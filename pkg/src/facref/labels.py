"""Fixed semantic label scheme for facade point clouds (8 classes)."""

LABELS = ("arch", "column", "molding", "floor", "door", "window", "wall", "other")
LABEL_INDEX = {name: i for i, name in enumerate(LABELS)}

ARCH = 0
COLUMN = 1
MOLDING = 2
FLOOR = 3
DOOR = 4
WINDOW = 5
WALL = 6
OTHER = 7

NODATA = -1  # points-comparison cells with no static voxel
