import numpy as np
import pytest

from facref import labels as L
from facref.building import BuildingModel, Surface
from facref.exceptions import ParseError, SchemaError
from facref.geometry import PlanarPolygon, fit_plane_frame
from facref.io_formats import (POINT_HEADER, PointCloud, export_texture,
                               read_building_json, read_citygml_subset,
                               read_opening_library, read_point_cloud,
                               write_building_json, write_citygml_subset,
                               write_opening_library, write_point_cloud)
from facref.library import default_library
from facref.reconstruct import apply_fit, compute_fit
from facref.scenes import default_scene


@pytest.fixture
def cloud(rng):
    n = 40
    prob = rng.dirichlet(np.ones(8), n)
    labels = rng.integers(-1, 8, n)
    return PointCloud(rng.uniform(-5, 5, (n, 3)), rng.uniform(-5, 5, (n, 3)),
                      labels, prob)


@pytest.fixture
def lod3_model():
    return default_scene(n_poses=1).lod3


class TestPointCloudCsv:
    def test_write_read_write_bit_exact(self, cloud, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_point_cloud(cloud, p1)
        back = read_point_cloud(p1)
        write_point_cloud(back, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_values_within_rounding(self, cloud, tmp_path):
        p = tmp_path / "a.csv"
        write_point_cloud(cloud, p)
        back = read_point_cloud(p)
        np.testing.assert_allclose(back.xyz, cloud.xyz, atol=5e-7)
        np.testing.assert_allclose(back.sensor, cloud.sensor, atol=5e-7)
        np.testing.assert_array_equal(back.true_label, cloud.true_label)
        np.testing.assert_allclose(back.prob, cloud.prob, atol=2e-6)
        np.testing.assert_allclose(back.prob.sum(axis=1), 1.0, atol=1e-12)

    def test_empty_cloud_roundtrip(self, tmp_path):
        p = tmp_path / "e.csv"
        write_point_cloud(PointCloud.empty(), p)
        assert len(read_point_cloud(p)) == 0

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,y,z\n")
        with pytest.raises(ParseError):
            read_point_cloud(p)

    def test_wrong_field_count_reports_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text(POINT_HEADER + "\n1,2,3\n")
        with pytest.raises(ParseError, match=":2"):
            read_point_cloud(p)

    def test_probability_sum_enforced(self, tmp_path):
        p = tmp_path / "bad.csv"
        row = "0,0,0,0,0,1,6," + ",".join(["0.2"] * 8)
        p.write_text(POINT_HEADER + "\n" + row + "\n")
        with pytest.raises(SchemaError):
            read_point_cloud(p)

    def test_label_out_of_range(self, tmp_path):
        p = tmp_path / "bad.csv"
        row = "0,0,0,0,0,1,9,1" + ",0" * 7
        p.write_text(POINT_HEADER + "\n" + row + "\n")
        with pytest.raises(SchemaError):
            read_point_cloud(p)

    def test_unlabeled_points_roundtrip(self, tmp_path):
        c = PointCloud(np.zeros((1, 3)), np.ones((1, 3)),
                       np.array([-1]), np.eye(8)[:1])
        p = tmp_path / "u.csv"
        write_point_cloud(c, p)
        assert read_point_cloud(p).true_label[0] == -1


class TestBuildingJson:
    def test_roundtrip_bit_exact(self, lod3_model, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_building_json(lod3_model, p1)
        back = read_building_json(p1)
        write_building_json(back, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_geometry_exact(self, lod3_model, tmp_path):
        p = tmp_path / "a.json"
        write_building_json(lod3_model, p)
        back = read_building_json(p)
        assert back.id == lod3_model.id and back.lod == 3
        for a, b in zip(back.surfaces, lod3_model.surfaces):
            assert (a.id, a.type) == (b.id, b.type)
            np.testing.assert_array_equal(a.polygon.exterior, b.polygon.exterior)
            for ha, hb in zip(a.polygon.holes, b.polygon.holes):
                np.testing.assert_array_equal(ha, hb)
        for a, b in zip(back.openings, lod3_model.openings):
            np.testing.assert_array_equal(a.triangles, b.triangles)
            assert a.entry_name == b.entry_name

    def test_parse_error_on_garbage(self, tmp_path):
        p = tmp_path / "g.json"
        p.write_text("{not json")
        with pytest.raises(ParseError):
            read_building_json(p)

    def test_schema_error_on_missing_key(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text('{"id": "b", "lod": 2}')
        with pytest.raises(SchemaError):
            read_building_json(p)


class TestCityGml:
    def test_roundtrip_geometry_under_micron(self, lod3_model, tmp_path):
        p = tmp_path / "a.gml"
        write_citygml_subset(lod3_model, p)
        back = read_citygml_subset(p)
        assert back.id == lod3_model.id
        assert back.lod == 3
        assert [s.id for s in back.surfaces] == \
            [s.id for s in lod3_model.surfaces]
        for a, b in zip(back.surfaces, lod3_model.surfaces):
            assert a.type == b.type
            np.testing.assert_allclose(a.polygon.exterior, b.polygon.exterior,
                                       atol=1e-6)
            assert len(a.polygon.holes) == len(b.polygon.holes)
            for ha, hb in zip(a.polygon.holes, b.polygon.holes):
                np.testing.assert_allclose(ha, hb, atol=1e-6)
        assert len(back.openings) == len(lod3_model.openings)
        for a, b in zip(back.openings, lod3_model.openings):
            assert (a.kind, a.entry_name, a.parent_surface) == \
                (b.kind, b.entry_name, b.parent_surface)
            np.testing.assert_allclose(a.triangles, b.triangles, atol=1e-6)
            np.testing.assert_allclose(a.anchor, b.anchor, atol=1e-6)
            assert (a.width, a.height, a.depth) == \
                pytest.approx((b.width, b.height, b.depth), abs=1e-6)

    def test_lod2_roundtrip(self, tmp_path):
        model = default_scene(n_poses=1).lod2
        p = tmp_path / "a.gml"
        write_citygml_subset(model, p)
        back = read_citygml_subset(p)
        assert back.lod == 2 and not back.openings

    def test_unclosed_ring_rejected(self, tmp_path):
        p = tmp_path / "bad.gml"
        p.write_text("""<?xml version="1.0"?>
<core:CityModel xmlns:core="http://www.opengis.net/citygml/2.0"
 xmlns:bldg="http://www.opengis.net/citygml/building/2.0"
 xmlns:gml="http://www.opengis.net/gml">
 <core:cityObjectMember><bldg:Building gml:id="b"><bldg:boundedBy>
  <bldg:WallSurface gml:id="w"><bldg:lod2MultiSurface><gml:MultiSurface>
   <gml:surfaceMember><gml:Polygon><gml:exterior><gml:LinearRing>
    <gml:posList>0 0 0 1 0 0 1 0 1 0 0 1</gml:posList>
   </gml:LinearRing></gml:exterior></gml:Polygon></gml:surfaceMember>
  </gml:MultiSurface></bldg:lod2MultiSurface></bldg:WallSurface>
 </bldg:boundedBy></bldg:Building></core:cityObjectMember>
</core:CityModel>""")
        with pytest.raises(ParseError, match="not closed"):
            read_citygml_subset(p)

    def test_odd_coordinate_count_rejected(self, tmp_path):
        p = tmp_path / "bad.gml"
        p.write_text("""<?xml version="1.0"?>
<core:CityModel xmlns:core="http://www.opengis.net/citygml/2.0"
 xmlns:bldg="http://www.opengis.net/citygml/building/2.0"
 xmlns:gml="http://www.opengis.net/gml">
 <core:cityObjectMember><bldg:Building gml:id="b"><bldg:boundedBy>
  <bldg:WallSurface gml:id="w"><bldg:lod2MultiSurface><gml:MultiSurface>
   <gml:surfaceMember><gml:Polygon><gml:exterior><gml:LinearRing>
    <gml:posList>0 0 0 1 0 0 1 0</gml:posList>
   </gml:LinearRing></gml:exterior></gml:Polygon></gml:surfaceMember>
  </gml:MultiSurface></bldg:lod2MultiSurface></bldg:WallSurface>
 </bldg:boundedBy></bldg:Building></core:cityObjectMember>
</core:CityModel>""")
        with pytest.raises(ParseError, match="divisible by 3"):
            read_citygml_subset(p)

    def test_no_building_rejected(self, tmp_path):
        p = tmp_path / "bad.gml"
        p.write_text('<?xml version="1.0"?><root/>')
        with pytest.raises(ParseError, match="no Building"):
            read_citygml_subset(p)

    def test_malformed_xml_rejected(self, tmp_path):
        p = tmp_path / "bad.gml"
        p.write_text("<unclosed")
        with pytest.raises(ParseError):
            read_citygml_subset(p)


class TestOpeningLibrary:
    def test_roundtrip(self, tmp_path):
        p = tmp_path / "lib.json"
        lib = default_library()
        write_opening_library(lib, p)
        back = read_opening_library(p)
        assert [e.name for e in back] == [e.name for e in lib]
        for a, b in zip(back, lib):
            assert (a.kind, a.depth, a.opaque_triangles) == \
                (b.kind, b.depth, b.opaque_triangles)
            np.testing.assert_array_equal(a.triangles, b.triangles)

    def test_missing_key(self, tmp_path):
        p = tmp_path / "lib.json"
        p.write_text('{"entries": [{"name": "x"}]}')
        with pytest.raises(SchemaError):
            read_opening_library(p)


class TestTextureExport:
    def test_pgm_and_csv(self, tmp_path):
        from facref.textures import TextureLayer
        ring = np.array([(0, 0, 0), (2, 0, 0), (2, 0, 1), (0, 0, 1)], float)
        frame = fit_plane_frame(PlanarPolygon(ring))
        labels = np.array([[1, 0], [2, 1]], dtype=np.int8)
        probs = np.array([[1.0, 0.0], [0.5, 0.25]])
        layer = TextureLayer("w", frame, 0.5, 0.0, 0.0, labels, probs,
                             kind="model")
        export_texture(layer, tmp_path / "w_model")
        pgm = (tmp_path / "w_model.pgm").read_text().splitlines()
        assert pgm[0] == "P2" and pgm[1] == "2 2" and pgm[2] == "255"
        # row 0 of the file is the TOP of the facade (labels row 1)
        assert pgm[3].split() == ["128", "64"]
        assert pgm[4].split() == ["255", "0"]
        csv = (tmp_path / "w_model.csv").read_text().splitlines()
        assert csv[0] == "conflicted,confirmed"
        assert csv[1] == "confirmed,unknown"
