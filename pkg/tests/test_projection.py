"""Cluster resizing and the three-view 18x18x6 projection images."""

import numpy as np
import pytest

import oracles
from lidarcount.projection import (
    CHANNEL_ORDER,
    IMAGE_SHAPE,
    TARGET_POINTS,
    center_cluster,
    classifier_image,
    cluster_to_image,
    enlarge,
    next_perfect_square,
    project_views,
    read_image_ndjson,
    read_pool_csv,
    tile_points,
    write_image_ndjson,
    write_pool_csv,
)


def rand_pts(seed, n):
    return np.random.default_rng(seed).uniform(-2, 2, size=(n, 3))


POOL = rand_pts(999, 40)


class TestNextPerfectSquare:
    def test_values(self):
        assert next_perfect_square(314) == 324
        assert next_perfect_square(1) == 1
        assert next_perfect_square(2) == 4
        assert next_perfect_square(324) == 324
        assert next_perfect_square(325) == 361

    def test_exact_squares_fixed(self):
        for r in range(1, 40):
            assert next_perfect_square(r * r) == r * r
            assert next_perfect_square(r * r + 1) == (r + 1) * (r + 1)

    def test_requires_positive(self):
        with pytest.raises(ValueError):
            next_perfect_square(0)


class TestEnlarge:
    def test_constants(self):
        assert TARGET_POINTS == 324
        assert IMAGE_SHAPE == (18, 18, 6)
        assert len(CHANNEL_ORDER) == 6

    @pytest.mark.parametrize("n", [1, 17, 323])
    def test_undersized_keeps_input_as_prefix(self, n):
        pts = rand_pts(n, n)
        out = enlarge(pts, 324, POOL, seed=5)
        assert out.shape == (324, 3)
        np.testing.assert_array_equal(out[:n], pts)
        # every padding row comes from the pool
        pool_set = set(map(tuple, POOL.tolist()))
        assert all(tuple(row) in pool_set for row in out[n:].tolist())

    def test_exact_size_is_copy(self):
        pts = rand_pts(3, 324)
        out = enlarge(pts, 324, POOL, seed=0)
        np.testing.assert_array_equal(out, pts)
        assert out is not pts

    def test_oversized_downsamples_without_replacement(self):
        pts = rand_pts(4, 500)
        out = enlarge(pts, 324, POOL, seed=1)
        assert out.shape == (324, 3)
        counts = oracles.row_multiset(out)
        source = oracles.row_multiset(pts)
        assert all(counts[row] <= source[row] for row in counts)
        # order of the surviving rows is preserved
        kept_idx = [int(np.flatnonzero((pts == row).all(axis=1))[0]) for row in out]
        assert kept_idx == sorted(kept_idx)

    def test_deterministic_in_seed(self):
        pts = rand_pts(6, 100)
        a = enlarge(pts, 324, POOL, seed=42)
        b = enlarge(pts, 324, POOL, seed=42)
        c = enlarge(pts, 324, POOL, seed=43)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_empty_cluster_rejected(self):
        with pytest.raises(ValueError, match="empty cluster"):
            enlarge(np.zeros((0, 3)), 324, POOL, seed=0)

    def test_empty_pool_only_matters_when_padding(self):
        no_pool = np.zeros((0, 3))
        with pytest.raises(ValueError, match="pool is empty"):
            enlarge(rand_pts(7, 10), 324, no_pool, seed=0)
        out = enlarge(rand_pts(8, 400), 324, no_pool, seed=0)
        assert out.shape == (324, 3)

    def test_target_must_be_perfect_square(self):
        with pytest.raises(ValueError, match="perfect square"):
            enlarge(rand_pts(9, 10), 320, POOL, seed=0)


class TestProjectViews:
    def test_shape_and_channel_content(self):
        pts = rand_pts(10, 324)
        img = project_views(pts)
        assert img.shape == IMAGE_SHAPE
        # each coordinate-pair multiset survives into its channel plane
        assert oracles.row_multiset(img[:, :, 0:2].reshape(-1, 2)) == oracles.pair_multiset(pts, (0, 1))
        assert oracles.row_multiset(img[:, :, 2:4].reshape(-1, 2)) == oracles.pair_multiset(pts, (1, 2))
        assert oracles.row_multiset(img[:, :, 4:6].reshape(-1, 2)) == oracles.pair_multiset(pts, (0, 2))

    def test_tiny_hand_example(self):
        pts = np.array(
            [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 0.0], [0.0, 1.0, 3.0]]
        )
        img = project_views(pts, target=4)
        assert img.shape == (2, 2, 6)
        # rows sorted by (z, x, y): [7,8,0], [0,1,3], [1,2,3], [4,5,6]
        np.testing.assert_array_equal(img[0, 0], [7, 8, 8, 0, 7, 0])
        np.testing.assert_array_equal(img[0, 1], [0, 1, 1, 3, 0, 3])
        np.testing.assert_array_equal(img[1, 0], [1, 2, 2, 3, 1, 3])
        np.testing.assert_array_equal(img[1, 1], [4, 5, 5, 6, 4, 6])

    def test_row_count_enforced(self):
        with pytest.raises(ValueError, match="expected exactly 324"):
            project_views(rand_pts(11, 323))

    def test_input_order_irrelevant(self):
        pts = rand_pts(12, 324)
        img = project_views(pts)
        shuffled = np.random.default_rng(0).permutation(pts)
        np.testing.assert_array_equal(project_views(shuffled), img)

    def test_cluster_to_image_is_the_composition(self):
        pts = rand_pts(13, 50)
        np.testing.assert_array_equal(
            cluster_to_image(pts, POOL, seed=3),
            project_views(enlarge(pts, 324, POOL, seed=3)),
        )


class TestCenterCluster:
    def test_xy_centroid_moves_to_origin(self):
        pts = rand_pts(14, 30) + np.array([5.0, -3.0, 1.0])
        out = center_cluster(pts)
        np.testing.assert_allclose(out[:, :2].mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_array_equal(out[:, 2], pts[:, 2])

    def test_empty_passthrough(self):
        assert center_cluster(np.zeros((0, 3))).shape == (0, 3)

    def test_input_not_mutated(self):
        pts = rand_pts(15, 10) + 4.0
        before = pts.copy()
        center_cluster(pts)
        np.testing.assert_array_equal(pts, before)


class TestTilePoints:
    def test_exact_repeat_counts(self):
        pts = rand_pts(16, 10)
        out = tile_points(pts, target=324)
        assert out.shape == (324, 3)
        counts = oracles.row_multiset(out)
        # 324 = 10*32 + 4: first 4 rows appear 33 times, the rest 32
        for i, row in enumerate(map(tuple, pts.tolist())):
            assert counts[row] == (33 if i < 4 else 32)

    def test_divisible_case_uniform(self):
        pts = rand_pts(17, 18)
        counts = oracles.row_multiset(tile_points(pts, target=324))
        assert set(counts.values()) == {18}

    def test_large_input_passthrough(self):
        pts = rand_pts(18, 324)
        np.testing.assert_array_equal(tile_points(pts), pts)
        pts2 = rand_pts(19, 400)
        np.testing.assert_array_equal(tile_points(pts2), pts2)

    def test_empty_passthrough(self):
        assert tile_points(np.zeros((0, 3))).shape == (0, 3)


class TestClassifierImage:
    def test_is_the_documented_composition(self):
        pts = rand_pts(20, 40)
        expected = cluster_to_image(tile_points(center_cluster(pts), 324), POOL, seed=9)
        np.testing.assert_array_equal(classifier_image(pts, POOL, seed=9), expected)

    def test_sparse_cluster_needs_no_pool(self):
        # tiling brings any non-empty cluster to the target, so the pool is idle
        img = classifier_image(rand_pts(21, 5), np.zeros((0, 3)), seed=0)
        assert img.shape == IMAGE_SHAPE

    def test_deterministic(self):
        pts = rand_pts(22, 37)
        np.testing.assert_array_equal(
            classifier_image(pts, POOL, seed=4), classifier_image(pts, POOL, seed=4)
        )


class TestPoolCsv:
    def test_round_trip_exact(self):
        back = read_pool_csv(write_pool_csv(POOL))
        np.testing.assert_array_equal(back, POOL)

    def test_header_required(self):
        with pytest.raises(ValueError, match="x,y,z"):
            read_pool_csv("a,b,c\n1,2,3\n")

    def test_field_count(self):
        with pytest.raises(ValueError, match="line 2"):
            read_pool_csv("x,y,z\n1.0,2.0\n")

    def test_empty_pool(self):
        assert read_pool_csv(write_pool_csv(np.zeros((0, 3)))).shape == (0, 3)


class TestImageNdjson:
    def test_round_trip_exact(self):
        imgs = np.stack([classifier_image(rand_pts(s, 30), POOL, seed=s) for s in range(3)])
        labels = np.array([1, 0, 1])
        bv, bl = read_image_ndjson(write_image_ndjson(imgs, labels))
        np.testing.assert_array_equal(bv, imgs)
        np.testing.assert_array_equal(bl, labels)

    def test_shape_validated(self):
        with pytest.raises(ValueError):
            write_image_ndjson(np.zeros((2, 5, 5, 6)), [0, 1])
        with pytest.raises(ValueError):
            write_image_ndjson(np.zeros((2, *IMAGE_SHAPE)), [0])

    def test_bad_payload_size(self):
        with pytest.raises(ValueError, match="line 1"):
            read_image_ndjson('{"label":0,"image":[1.0,2.0]}\n')

    def test_empty(self):
        bv, bl = read_image_ndjson(write_image_ndjson(np.zeros((0, *IMAGE_SHAPE)), []))
        assert bv.shape == (0, *IMAGE_SHAPE) and bl.shape == (0,)
