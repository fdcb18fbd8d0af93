import numpy as np
import pytest

from facref import labels as L
from facref.exceptions import SpecError
from facref.scenes import default_scene
from facref.simulator import (ScanSpec, TransientBox, corrupt_labels,
                              ground_truth_boxes, simulate)


def _spec(**kw):
    kw.setdefault("trajectory", np.array([[5.0, -6.0, 1.7]]))
    kw.setdefault("angular_resolution", 0.02)
    kw.setdefault("sigma_noise", 0.0)
    return ScanSpec(**kw)


class TestSpecValidation:
    def test_empty_trajectory(self):
        with pytest.raises(SpecError):
            ScanSpec(trajectory=np.empty((0, 3)))

    @pytest.mark.parametrize("kw", [
        {"angular_resolution": 0.0}, {"max_range": -1}, {"sigma_noise": -0.1},
        {"tau": 1.5}, {"epsilon": 1.0}, {"interior_offset": 0.0},
    ])
    def test_out_of_range_parameters(self, kw):
        with pytest.raises(SpecError):
            _spec(**kw)

    def test_transient_box_validation(self):
        with pytest.raises(SpecError):
            TransientBox(lower=(1, 1, 1), upper=(0, 2, 2), fraction=0.5)
        with pytest.raises(SpecError):
            TransientBox(lower=(0, 0, 0), upper=(1, 1, 1), fraction=1.5)

    def test_unknown_fov_surface(self):
        scene = default_scene(n_poses=1, with_transient=False)
        with pytest.raises(SpecError):
            simulate(scene.lod2, _spec(fov_surfaces=("nope",)))


class TestBlindWall:
    def test_exact_ranges_without_noise(self):
        scene = default_scene(n_poses=1, with_transient=False)
        cloud = simulate(scene.lod2, _spec(fov_surfaces=("wall_south",)),
                         seed=1)
        wall = cloud.true_label == L.WALL
        assert wall.sum() > 100
        # wall hits lie exactly on the y = 0 plane
        np.testing.assert_allclose(cloud.xyz[wall][:, 1], 0.0, atol=1e-9)
        assert np.all(cloud.xyz[wall][:, 0] >= -1e-9)
        assert np.all(cloud.xyz[wall][:, 0] <= 10 + 1e-9)

    def test_ground_occluded_by_wall(self):
        # the ground slab lies behind the facade; occlusion ordering must
        # prevent any floor return from a street-level pose
        scene = default_scene(n_poses=1, with_transient=False)
        cloud = simulate(scene.lod2, _spec(), seed=1)
        assert np.sum(cloud.true_label == L.FLOOR) == 0

    def test_visible_ground_labeled_floor(self):
        from facref.building import BuildingModel, Surface
        from facref.geometry import PlanarPolygon
        ring = np.array([(0, -4, 0), (0, 8, 0), (10, 8, 0), (10, -4, 0)],
                        dtype=float)
        model = BuildingModel(id="g", lod=2, surfaces=[
            Surface(id="ground", type="GroundSurface",
                    polygon=PlanarPolygon(ring))])
        cloud = simulate(model, _spec(trajectory=np.array([[5.0, 2.0, 5.0]])),
                         seed=1)
        assert len(cloud) > 0
        np.testing.assert_array_equal(cloud.true_label, L.FLOOR)
        np.testing.assert_allclose(cloud.xyz[:, 2], 0.0, atol=1e-9)

    def test_range_noise_spread(self):
        scene = default_scene(n_poses=1, with_transient=False)
        noisy = simulate(scene.lod2, _spec(sigma_noise=0.02,
                                           fov_surfaces=("wall_south",)),
                         seed=1)
        wall = noisy.true_label == L.WALL
        dev = noisy.xyz[wall][:, 1]
        assert 0.005 < np.std(dev) < 0.05

    def test_deterministic_by_seed(self):
        scene = default_scene(n_poses=2, with_transient=False)
        spec = _spec(trajectory=scene.scan.trajectory, sigma_noise=0.01)
        a = simulate(scene.lod2, spec, seed=7)
        b = simulate(scene.lod2, spec, seed=7)
        c = simulate(scene.lod2, spec, seed=8)
        np.testing.assert_array_equal(a.xyz, b.xyz)
        np.testing.assert_array_equal(a.true_label, b.true_label)
        assert not np.array_equal(a.xyz, c.xyz)

    def test_probability_softening(self):
        scene = default_scene(n_poses=1, with_transient=False)
        cloud = simulate(scene.lod2, _spec(epsilon=0.1), seed=1)
        rows = cloud.prob
        np.testing.assert_allclose(rows.sum(axis=1), 1.0, atol=1e-12)
        picked = rows[np.arange(len(cloud)), cloud.true_label]
        np.testing.assert_allclose(picked, 0.9, atol=1e-12)
        np.testing.assert_array_equal(cloud.predicted(), cloud.true_label)


class TestOpenings:
    def _scan(self, tau, seed=3):
        scene = default_scene(n_poses=2, with_transient=False)
        spec = _spec(trajectory=scene.scan.trajectory, tau=tau,
                     fov_surfaces=("wall_south",))
        return scene, simulate(scene.lod3, spec, seed=seed,
                               library=scene.library)

    def test_opaque_glass_returns_everything(self):
        scene, cloud = self._scan(tau=0.0)
        win = cloud.true_label == L.WINDOW
        assert win.sum() > 50
        # window returns sit behind the facade plane (recessed solid)
        assert np.all(cloud.xyz[win][:, 1] > 0.0)

    def test_full_transmission_reaches_interior(self):
        scene, cloud = self._scan(tau=1.0)
        win_y = cloud.xyz[cloud.true_label == L.WINDOW][:, 1]
        # only frame returns remain near the recess plane; no glass returns
        assert np.all(win_y < 0.3 + 1e-6)
        # interior back-plane hits exist 4 m behind the facade ("other"
        # also labels roof returns, so select by depth)
        other_y = cloud.xyz[cloud.true_label == L.OTHER][:, 1]
        assert np.sum(other_y >= 3.9) > 0

    def test_door_returns_on_slab(self):
        scene, cloud = self._scan(tau=0.5)
        door = cloud.true_label == L.DOOR
        assert door.sum() > 20
        assert np.all(cloud.xyz[door][:, 1] > 0.0)

    def test_opening_ray_counts(self):
        scene, cloud = self._scan(tau=0.5)
        counts = cloud.meta["opening_ray_counts"]
        assert len(counts) == len(scene.lod3.openings)
        assert all(c > 0 for c in counts)
        # counts are crossing counts, independent of transmission draws
        _, cloud2 = self._scan(tau=0.9)
        assert cloud2.meta["opening_ray_counts"] == counts

    def test_unknown_library_entry_rejected(self):
        scene = default_scene(n_poses=1, with_transient=False)
        with pytest.raises(SpecError):
            simulate(scene.lod3, _spec(), library=[])


class TestTransients:
    def test_box_active_first_passes_only(self):
        traj = np.column_stack([np.linspace(2, 8, 4), np.full(4, -6.0),
                                np.full(4, 1.0)])
        box = TransientBox(lower=(4.0, -3.0, 0.0), upper=(6.0, -2.0, 1.5),
                           fraction=0.5, label=L.OTHER)
        scene = default_scene(n_poses=1, with_transient=False)
        spec = _spec(trajectory=traj, transients=(box,),
                     fov_surfaces=("wall_south",))
        cloud = simulate(scene.lod2, spec, seed=5)
        inside = np.all((cloud.xyz >= box.lower - 1e-9)
                        & (cloud.xyz <= box.upper + 1e-9), axis=1)
        assert inside.sum() > 10
        np.testing.assert_array_equal(cloud.true_label[inside], L.OTHER)
        # round(0.5 * 4) = 2 active passes: box points only from poses 0, 1
        active_sensors = {tuple(s) for s in cloud.sensor[inside]}
        assert active_sensors <= {tuple(p) for p in traj[:2]}
        assert len(active_sensors) == 2


class TestCorruptLabels:
    def test_invalid_confusion(self):
        scene = default_scene(n_poses=1, with_transient=False)
        cloud = simulate(scene.lod2, _spec(), seed=1)
        with pytest.raises(SpecError):
            corrupt_labels(cloud, np.ones((8, 8)))
        with pytest.raises(SpecError):
            corrupt_labels(cloud, np.eye(4))

    def test_draw_frequencies_match_rows(self):
        scene = default_scene(n_poses=2, with_transient=False)
        cloud = simulate(scene.lod2, _spec(
            trajectory=scene.scan.trajectory,
            fov_surfaces=("wall_south",)), seed=1)
        conf = np.full((8, 8), 0.3 / 7)
        np.fill_diagonal(conf, 0.7)
        out = corrupt_labels(cloud, conf, seed=9)
        wall = out.true_label == L.WALL
        frac_correct = np.mean(out.predicted()[wall] == L.WALL)
        assert frac_correct == pytest.approx(0.7, abs=0.02)
        np.testing.assert_array_equal(out.true_label, cloud.true_label)

    def test_peak_probability_mass(self):
        scene = default_scene(n_poses=1, with_transient=False)
        cloud = simulate(scene.lod2, _spec(), seed=1)
        out = corrupt_labels(cloud, np.eye(8), seed=2, peak=0.8)
        top = out.prob.max(axis=1)
        np.testing.assert_allclose(top, 0.8, atol=1e-12)
        np.testing.assert_allclose(out.prob.sum(axis=1), 1.0, atol=1e-12)
        # identity confusion keeps predictions equal to truth
        np.testing.assert_array_equal(out.predicted(), out.true_label)

    def test_input_not_mutated(self):
        scene = default_scene(n_poses=1, with_transient=False)
        cloud = simulate(scene.lod2, _spec(), seed=1)
        before = cloud.prob.copy()
        corrupt_labels(cloud, np.eye(8), seed=2)
        np.testing.assert_array_equal(cloud.prob, before)
