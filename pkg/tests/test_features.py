import numpy as np
import pytest

from facref.exceptions import InsufficientNeighborhood
from facref.features import (NeighborhoodSpec, NeighborIndex, eigen_features,
                             feature_table, radius_neighbors, scalar_features)


class TestNeighbors:
    def test_brute_force_oracle(self, rng):
        pts = rng.uniform(0, 4, (300, 3))
        for _ in range(20):
            q = rng.uniform(0, 4, 3)
            r = rng.uniform(0.2, 1.5)
            got = radius_neighbors(pts, q, r)
            want = np.flatnonzero(np.linalg.norm(pts - q, axis=1) <= r)
            np.testing.assert_array_equal(got, want)

    def test_index_reuse(self, rng):
        pts = rng.uniform(0, 2, (100, 3))
        idx = NeighborIndex(pts)
        np.testing.assert_array_equal(idx.radius_neighbors(pts[0], 0.5),
                                      radius_neighbors(pts, pts[0], 0.5))


class TestEigenFeatures:
    def test_planar_patch(self, rng):
        pts = np.column_stack([rng.uniform(0, 2, (500, 2)), np.zeros(500)])
        omni, planarity, surf_var = eigen_features(pts)
        # lambda_1 ~ lambda_2 >> lambda_3 = 0: planarity = l2/l1 near 1,
        # with sampling fluctuation from eigenvalue repulsion
        assert planarity > 0.7
        assert surf_var == pytest.approx(0.0, abs=1e-12)
        assert omni == pytest.approx(0.0, abs=1e-9)

    def test_uniform_ball_monte_carlo(self, rng):
        # isotropic neighborhood: lambda_i ~ 1/3 each after normalization,
        # so omnivariance -> cbrt(1/27) = 1/3, planarity -> 0, lambda_3 -> 1/3
        v = rng.normal(size=(20000, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        pts = v * rng.uniform(0, 1, (20000, 1)) ** (1 / 3)
        omni, planarity, surf_var = eigen_features(pts)
        assert omni == pytest.approx(1 / 3, abs=0.01)
        assert planarity == pytest.approx(0.0, abs=0.05)
        assert surf_var == pytest.approx(1 / 3, abs=0.01)

    def test_linear_points(self):
        pts = np.column_stack([np.linspace(0, 1, 50), np.zeros(50), np.zeros(50)])
        omni, planarity, surf_var = eigen_features(pts)
        assert omni == pytest.approx(0.0, abs=1e-9)
        assert planarity == pytest.approx(0.0, abs=1e-9)

    def test_eigenvalue_normalization_oracle(self, rng):
        pts = rng.normal(size=(200, 3)) * [3.0, 1.5, 0.2]
        cov = np.cov(pts.T, bias=True)
        lam = np.sort(np.linalg.eigvalsh(cov))[::-1]
        lam = lam / lam.sum()
        omni, planarity, surf_var = eigen_features(pts)
        assert omni == pytest.approx(float(np.cbrt(np.prod(lam))), rel=1e-9)
        assert planarity == pytest.approx(float((lam[1] - lam[2]) / lam[0]), rel=1e-9)
        assert surf_var == pytest.approx(float(lam[2]), rel=1e-9)

    def test_too_few_points(self):
        with pytest.raises(InsufficientNeighborhood):
            eigen_features(np.zeros((2, 3)))

    def test_coincident_points(self):
        with pytest.raises(InsufficientNeighborhood):
            eigen_features(np.ones((5, 3)))


class TestScalarFeatures:
    def test_height_relative_to_min_z(self, rng):
        pts = rng.uniform(0, 3, (50, 3))
        i = int(np.argmax(pts[:, 2]))
        h, *_ = scalar_features(pts, i, NeighborhoodSpec())
        assert h == pytest.approx(pts[i, 2] - pts[:, 2].min())

    def test_verticality_of_wall_and_floor(self, rng):
        wall = np.column_stack([rng.uniform(0, 3, 200), np.zeros(200),
                                rng.uniform(0, 3, 200)])
        floor = np.column_stack([rng.uniform(0, 3, (200, 2)), np.zeros(200)])
        *_, v_wall = scalar_features(wall, 0, NeighborhoodSpec())
        *_, v_floor = scalar_features(floor, 0, NeighborhoodSpec())
        assert v_wall == pytest.approx(1.0, abs=1e-9)
        assert v_floor == pytest.approx(0.0, abs=1e-9)

    def test_density_count_over_sphere_volume(self, rng):
        spec = NeighborhoodSpec(r_eigen=0.5)
        pts = rng.uniform(0, 2, (400, 3))
        _, _, dens, _ = scalar_features(pts, 7, spec)
        n = int(np.sum(np.linalg.norm(pts - pts[7], axis=1) <= spec.r_eigen))
        assert dens == pytest.approx(n / (4 / 3 * np.pi * spec.r_eigen ** 3))

    def test_roughness_of_offset_point(self):
        base = np.array([[x, y, 0.0] for x in np.linspace(0, 1, 8)
                         for y in np.linspace(0, 1, 8)])
        pts = np.vstack([base, [[0.5, 0.5, 0.1]]])
        _, rough, _, _ = scalar_features(pts, len(pts) - 1, NeighborhoodSpec())
        # least-squares plane is pulled slightly toward the outlier
        assert 0.08 < rough <= 0.1

    def test_invalid_radii(self):
        with pytest.raises(ValueError):
            NeighborhoodSpec(r_eigen=0.0)


def test_feature_table_shape_and_degenerates(rng):
    pts = np.vstack([rng.uniform(0, 2, (60, 3)), [[50.0, 50.0, 50.0]]])
    table = feature_table(pts, NeighborhoodSpec())
    assert table.shape == (61, 7)
    assert np.all(np.isfinite(table))
    # the isolated point has no neighborhood: eigen features fall back to 0
    np.testing.assert_allclose(table[-1, 4:], 0.0)
