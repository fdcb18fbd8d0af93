"""Readers and writers for every artifact file format.

Point clouds are UTF-8 CSV with per-point sensor positions (mandatory for ray
tracing) and an 8-way class probability vector.  Building models travel either
as JSON or as a small CityGML subset (walls/roofs/grounds as polygons, openings
as solids).  Texture layers export to a portable graymap plus a label CSV.
"""

from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from . import labels as L
from .building import (BuildingModel, OpeningLibraryEntry, OpeningSolid, Surface)
from .exceptions import ParseError, SchemaError
from .geometry import PlanarPolygon
from .textures import TextureLayer

POINT_HEADER = "x,y,z,sx,sy,sz,label," + ",".join(f"p_{n}" for n in L.LABELS)


@dataclass
class PointCloud:
    """Columnar point cloud: hit points, sensor positions, labels, class probs."""

    xyz: np.ndarray
    sensor: np.ndarray
    true_label: np.ndarray
    prob: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xyz = np.asarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        self.sensor = np.asarray(self.sensor, dtype=np.float64).reshape(-1, 3)
        self.true_label = np.asarray(self.true_label, dtype=np.int64).reshape(-1)
        self.prob = np.asarray(self.prob, dtype=np.float64).reshape(-1, len(L.LABELS))
        n = len(self.xyz)
        if not (len(self.sensor) == len(self.true_label) == len(self.prob) == n):
            raise ValueError("point cloud columns disagree in length")

    def __len__(self) -> int:
        return len(self.xyz)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.empty((0, 3)), np.empty((0, 3)),
                   np.empty(0, dtype=np.int64), np.empty((0, len(L.LABELS))))

    def predicted(self) -> np.ndarray:
        """Per-point class with the highest probability."""
        return self.prob.argmax(axis=1)

    def set_labels(self, indices, label: int):
        """Relabel points to a hard class (probability point mass)."""
        idx = np.asarray(indices, dtype=np.int64)
        if len(idx) == 0:
            return
        self.prob[idx] = 0.0
        self.prob[idx, label] = 1.0

    def copy(self) -> "PointCloud":
        return PointCloud(self.xyz.copy(), self.sensor.copy(),
                          self.true_label.copy(), self.prob.copy(),
                          dict(self.meta))


# -- point cloud CSV --------------------------------------------------------

def read_point_cloud(path) -> PointCloud:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != POINT_HEADER:
            raise ParseError(f"{path}: unexpected header {header!r}")
        xyz, sensor, label, prob = [], [], [], []
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 7 + len(L.LABELS):
                raise ParseError(f"{path}:{lineno}: expected "
                                 f"{7 + len(L.LABELS)} fields, got {len(parts)}")
            try:
                nums = [float(v) for v in parts[:6]]
                probs = [float(v) for v in parts[7:]]
                lab = -1 if parts[6] == "" else int(parts[6])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if any(p < 0.0 or p > 1.0 for p in probs):
                raise SchemaError(f"{path}:{lineno}: probability outside [0, 1]")
            if abs(sum(probs) - 1.0) > 1e-6:
                raise SchemaError(
                    f"{path}:{lineno}: probabilities sum to {sum(probs):.6f}")
            if lab != -1 and not 0 <= lab < len(L.LABELS):
                raise SchemaError(f"{path}:{lineno}: label {lab} out of range")
            xyz.append(nums[:3])
            sensor.append(nums[3:6])
            label.append(lab)
            prob.append(probs)
    if not xyz:
        return PointCloud.empty()
    return PointCloud(np.array(xyz), np.array(sensor),
                      np.array(label, dtype=np.int64), np.array(prob))


def _rounded_probs(row: np.ndarray) -> np.ndarray:
    """Round to 6 decimals while keeping the row sum exactly 1."""
    micro = np.round(row * 1e6).astype(np.int64)
    micro[int(np.argmax(row))] += 10**6 - int(micro.sum())
    return micro / 1e6


def write_point_cloud(cloud: PointCloud, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(POINT_HEADER + "\n")
        for i in range(len(cloud)):
            lab = "" if cloud.true_label[i] < 0 else str(int(cloud.true_label[i]))
            probs = _rounded_probs(cloud.prob[i])
            f.write(",".join(f"{v:.6f}" for v in cloud.xyz[i]) + ","
                    + ",".join(f"{v:.6f}" for v in cloud.sensor[i]) + ","
                    + lab + ","
                    + ",".join(f"{p:.6f}" for p in probs) + "\n")


# -- building model JSON ----------------------------------------------------

def _polygon_to_json(poly: PlanarPolygon) -> dict:
    return {"exterior": poly.exterior.tolist(),
            "holes": [h.tolist() for h in poly.holes]}


def _polygon_from_json(obj: dict) -> PlanarPolygon:
    return PlanarPolygon(np.array(obj["exterior"], dtype=np.float64),
                         tuple(np.array(h, dtype=np.float64)
                               for h in obj.get("holes", [])))


def _solid_to_json(s: OpeningSolid) -> dict:
    return {"kind": s.kind, "entry": s.entry_name,
            "triangles": s.triangles.tolist(),
            "anchor": s.anchor.tolist(),
            "width": s.width, "height": s.height, "depth": s.depth,
            "parent": s.parent_surface}


def _solid_from_json(obj: dict) -> OpeningSolid:
    return OpeningSolid(kind=obj["kind"], entry_name=obj["entry"],
                        triangles=np.array(obj["triangles"], dtype=np.float64),
                        anchor=np.array(obj["anchor"], dtype=np.float64),
                        width=float(obj["width"]), height=float(obj["height"]),
                        depth=float(obj["depth"]), parent_surface=obj["parent"])


def write_building_json(model: BuildingModel, path):
    doc = {"id": model.id, "lod": model.lod,
           "surfaces": [{"id": s.id, "type": s.type,
                         **_polygon_to_json(s.polygon)} for s in model.surfaces],
           "openings": [_solid_to_json(o) for o in model.openings]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def read_building_json(path) -> BuildingModel:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    try:
        surfaces = [Surface(id=s["id"], type=s["type"],
                            polygon=_polygon_from_json(s))
                    for s in doc["surfaces"]]
        openings = [_solid_from_json(o) for o in doc.get("openings", [])]
        return BuildingModel(id=doc["id"], lod=int(doc["lod"]),
                             surfaces=surfaces, openings=openings)
    except KeyError as exc:
        raise SchemaError(f"{path}: missing key {exc}") from exc


# -- CityGML subset ---------------------------------------------------------

_NS = {
    "core": "http://www.opengis.net/citygml/2.0",
    "bldg": "http://www.opengis.net/citygml/building/2.0",
    "gen": "http://www.opengis.net/citygml/generics/2.0",
    "gml": "http://www.opengis.net/gml",
}
for _p, _u in _NS.items():
    ET.register_namespace(_p, _u)


def _tag(elem) -> str:
    return elem.tag.rsplit("}", 1)[-1]


def _gml_id(elem) -> str:
    for k, v in elem.attrib.items():
        if k.endswith("id"):
            return v
    return ""


def _parse_poslist(text: str, where: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split()]
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc
    if len(vals) % 3 != 0:
        raise ParseError(f"{where}: coordinate count {len(vals)} not divisible by 3")
    pts = np.array(vals, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 4:
        raise ParseError(f"{where}: ring needs at least 4 positions")
    if not np.allclose(pts[0], pts[-1], atol=1e-9):
        raise ParseError(f"{where}: ring is not closed")
    return pts[:-1]


def _rings_of_polygon(poly_elem, where: str):
    exterior, holes = None, []
    for sub in poly_elem.iter():
        t = _tag(sub)
        if t in ("exterior", "interior"):
            for pl in sub.iter():
                if _tag(pl) == "posList":
                    ring = _parse_poslist(pl.text or "", where)
                    if t == "exterior":
                        exterior = ring
                    else:
                        holes.append(ring)
    if exterior is None:
        raise ParseError(f"{where}: polygon without exterior ring")
    return exterior, tuple(holes)


def _gen_attrs(elem) -> dict:
    out = {}
    for a in elem:
        if _tag(a) in ("stringAttribute", "doubleAttribute"):
            name = a.attrib.get("name", "")
            for v in a:
                if _tag(v) == "value":
                    out[name] = v.text or ""
    return out


def read_citygml_subset(path) -> BuildingModel:
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    root = tree.getroot()
    building = None
    for elem in root.iter():
        if _tag(elem) == "Building":
            building = elem
            break
    if building is None:
        raise ParseError(f"{path}: no Building element")
    surfaces, openings = [], []
    lod = 2
    for elem in building.iter():
        t = _tag(elem)
        if t in ("WallSurface", "RoofSurface", "GroundSurface"):
            sid = _gml_id(elem)
            poly_elem = None
            for sub in elem.iter():
                st = _tag(sub)
                if st.startswith("lod") and st[3].isdigit():
                    lod = max(lod, int(st[3]))
                if st == "Polygon" and poly_elem is None:
                    # openings carry their own solids; take the surface polygon
                    poly_elem = sub
            if poly_elem is None:
                raise ParseError(f"{path}: surface {sid!r} without polygon")
            ext, holes = _rings_of_polygon(poly_elem, f"{path}:{sid}")
            surfaces.append(Surface(id=sid, type=t,
                                    polygon=PlanarPolygon(ext, holes)))
            for op in elem.iter():
                if _tag(op) in ("Window", "Door"):
                    openings.append(_read_opening(op, sid, path))
            lod = max(lod, 3) if openings else lod
    return BuildingModel(id=_gml_id(building) or "building", lod=lod,
                         surfaces=surfaces, openings=openings)


def _read_opening(elem, parent: str, path) -> OpeningSolid:
    attrs = _gen_attrs(elem)
    tris = []
    for sub in elem.iter():
        if _tag(sub) == "Polygon":
            ext, _ = _rings_of_polygon(sub, f"{path}:{_gml_id(elem)}")
            if len(ext) != 3:
                raise ParseError(f"{path}: opening faces must be triangles")
            tris.append(ext)
    try:
        return OpeningSolid(
            kind=_tag(elem), entry_name=attrs["libraryEntry"],
            triangles=np.array(tris, dtype=np.float64),
            anchor=np.array([float(attrs["anchorX"]), float(attrs["anchorY"]),
                             float(attrs["anchorZ"])]),
            width=float(attrs["width"]), height=float(attrs["height"]),
            depth=float(attrs["depth"]), parent_surface=parent)
    except KeyError as exc:
        raise SchemaError(f"{path}: opening missing attribute {exc}") from exc


def _fmt(x: float) -> str:
    return repr(float(x))


def _poslist_text(ring: np.ndarray) -> str:
    closed = np.vstack([ring, ring[:1]])
    return " ".join(_fmt(v) for v in closed.ravel())


def _write_polygon(parent_elem, poly_ext, holes=()):
    poly = ET.SubElement(parent_elem, f"{{{_NS['gml']}}}Polygon")
    ext = ET.SubElement(poly, f"{{{_NS['gml']}}}exterior")
    ring = ET.SubElement(ext, f"{{{_NS['gml']}}}LinearRing")
    ET.SubElement(ring, f"{{{_NS['gml']}}}posList").text = _poslist_text(poly_ext)
    for h in holes:
        interior = ET.SubElement(poly, f"{{{_NS['gml']}}}interior")
        hring = ET.SubElement(interior, f"{{{_NS['gml']}}}LinearRing")
        ET.SubElement(hring, f"{{{_NS['gml']}}}posList").text = _poslist_text(h)


def _write_gen(parent_elem, name: str, value: str):
    a = ET.SubElement(parent_elem, f"{{{_NS['gen']}}}stringAttribute",
                      {"name": name})
    ET.SubElement(a, f"{{{_NS['gen']}}}value").text = value


def write_citygml_subset(model: BuildingModel, path):
    root = ET.Element(f"{{{_NS['core']}}}CityModel")
    member = ET.SubElement(root, f"{{{_NS['core']}}}cityObjectMember")
    bldg = ET.SubElement(member, f"{{{_NS['bldg']}}}Building",
                         {f"{{{_NS['gml']}}}id": model.id})
    by_parent: dict[str, list[OpeningSolid]] = {}
    for o in model.openings:
        by_parent.setdefault(o.parent_surface, []).append(o)
    for s in model.surfaces:
        bounded = ET.SubElement(bldg, f"{{{_NS['bldg']}}}boundedBy")
        surf = ET.SubElement(bounded, f"{{{_NS['bldg']}}}{s.type}",
                             {f"{{{_NS['gml']}}}id": s.id})
        geom = ET.SubElement(surf, f"{{{_NS['bldg']}}}lod{model.lod}MultiSurface")
        multi = ET.SubElement(geom, f"{{{_NS['gml']}}}MultiSurface")
        memb = ET.SubElement(multi, f"{{{_NS['gml']}}}surfaceMember")
        _write_polygon(memb, s.polygon.exterior, s.polygon.holes)
        for k, o in enumerate(by_parent.get(s.id, [])):
            op = ET.SubElement(surf, f"{{{_NS['bldg']}}}opening")
            kind = ET.SubElement(op, f"{{{_NS['bldg']}}}{o.kind}",
                                 {f"{{{_NS['gml']}}}id": f"{s.id}_opening_{k}"})
            _write_gen(kind, "libraryEntry", o.entry_name)
            for name, val in (("anchorX", o.anchor[0]), ("anchorY", o.anchor[1]),
                              ("anchorZ", o.anchor[2]), ("width", o.width),
                              ("height", o.height), ("depth", o.depth)):
                _write_gen(kind, name, _fmt(val))
            solid = ET.SubElement(kind, f"{{{_NS['bldg']}}}lod3Geometry")
            gsolid = ET.SubElement(solid, f"{{{_NS['gml']}}}Solid")
            sext = ET.SubElement(gsolid, f"{{{_NS['gml']}}}exterior")
            comp = ET.SubElement(sext, f"{{{_NS['gml']}}}CompositeSurface")
            for tri in o.triangles:
                tm = ET.SubElement(comp, f"{{{_NS['gml']}}}surfaceMember")
                _write_polygon(tm, tri)
    ET.indent(root)
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)


# -- opening library --------------------------------------------------------

def read_opening_library(path) -> list[OpeningLibraryEntry]:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    entries = []
    try:
        for e in doc["entries"]:
            entries.append(OpeningLibraryEntry(
                name=e["name"], kind=e["kind"],
                triangles=np.array(e["triangles"], dtype=np.float64),
                depth=float(e["depth"]),
                opaque_triangles=tuple(e.get("opaque", []))))
    except KeyError as exc:
        raise SchemaError(f"{path}: missing key {exc}") from exc
    return entries


def write_opening_library(entries: list[OpeningLibraryEntry], path):
    doc = {"entries": [{"name": e.name, "kind": e.kind, "depth": e.depth,
                        "triangles": e.triangles.tolist(),
                        "opaque": list(e.opaque_triangles)} for e in entries]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


# -- texture export ---------------------------------------------------------

def export_texture(layer: TextureLayer, base_path):
    """Write <base>.pgm (probability graymap) and <base>.csv (cell labels).

    Row 0 of both files is the top of the facade.
    """
    base = str(base_path)
    gray = np.flipud(np.rint(layer.probs * 255).astype(int))
    with open(base + ".pgm", "w", encoding="utf-8") as f:
        f.write(f"P2\n{layer.cols} {layer.rows}\n255\n")
        for row in gray:
            f.write(" ".join(str(v) for v in row) + "\n")
    names = np.flipud(layer.cell_names())
    with open(base + ".csv", "w", encoding="utf-8") as f:
        for row in names:
            f.write(",".join(row) + "\n")
