import numpy as np
import pytest

from kmeans_sdp.errors import CoincidentCenters, DimensionMismatch, EmptyCluster
from kmeans_sdp.geometry import (
    Dataset,
    Partition,
    block_slices,
    compute_geometry,
    compute_pair_stats,
    distance_matrix,
)

from conftest import random_clustered_dataset


class TestDataTypes:
    def test_dataset_validation(self):
        with pytest.raises(DimensionMismatch):
            Dataset(points=[[np.inf, 0.0]])
        with pytest.raises(DimensionMismatch):
            Dataset(points=[[0.0, 1.0]], truth_labels=[0, 1])

    def test_labels_must_cover_range(self):
        with pytest.raises(EmptyCluster):
            Partition.from_labels([0, 2, 2])

    def test_partition_consistency(self):
        part = Partition.from_labels([0, 1, 1, 0])
        assert part.k == 2
        assert part.sizes.tolist() == [2, 2]
        assert part.members(1).tolist() == [1, 2]
        with pytest.raises(DimensionMismatch):
            Partition(labels=np.array([0, 1]), k=3, sizes=np.array([1, 1, 1]))

    def test_arrays_are_frozen(self, ex1_data):
        with pytest.raises(ValueError):
            ex1_data.points[0, 0] = 99.0


class TestComputeGeometry:
    def test_ex1_values(self, ex1_data, ex1_part):
        geom = compute_geometry(ex1_data, ex1_part)
        assert np.allclose(geom.centers, [[1.0, 0.0], [6.0, 0.0]])
        assert np.allclose(geom.op_norms, [np.sqrt(2), np.sqrt(2)])
        assert abs(geom.op_norm_sq_sum - 4.0) < 1e-12
        assert np.allclose(geom.frob_sq, [2.0, 2.0])

    def test_singleton_clusters(self):
        data = Dataset(points=[[0.0, 0.0], [3.0, 4.0]])
        geom = compute_geometry(data, Partition.from_labels([0, 1]))
        assert np.allclose(geom.centers, [[0.0, 0.0], [3.0, 4.0]])
        assert np.allclose(geom.op_norms, [0.0, 0.0])

    def test_duplicate_points(self):
        data = Dataset(points=[[1.0, 1.0], [1.0, 1.0]])
        geom = compute_geometry(data, Partition.from_labels([0, 0]))
        assert np.allclose(geom.centered_blocks[0], 0.0)
        assert geom.op_norms[0] == 0.0

    def test_centered_blocks_zero_column_sums(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            data, part = random_clustered_dataset(rng)
            geom = compute_geometry(data, part)
            for block in geom.centered_blocks:
                bound = 1e-9 * block.shape[0] * max(np.abs(block).max(), 1.0)
                assert np.abs(block.sum(axis=0)).max() <= bound

    def test_label_length_mismatch(self, ex1_data):
        with pytest.raises(DimensionMismatch):
            compute_geometry(ex1_data, Partition.from_labels([0, 1]))

    def test_op_norm_le_frobenius(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            data, part = random_clustered_dataset(rng)
            geom = compute_geometry(data, part)
            for a in range(part.k):
                assert geom.op_norms[a] <= np.sqrt(geom.frob_sq[a]) + 1e-12

    def test_op_norm_equals_frobenius_iff_rank_one(self):
        base = np.array([[1.0, 2.0]])
        pts = np.vstack([t * base for t in (-2.0, 1.0, 4.0)])
        data = Dataset(points=pts)
        geom = compute_geometry(data, Partition.from_labels([0, 0, 0]))
        assert abs(geom.op_norms[0] - np.sqrt(geom.frob_sq[0])) < 1e-12

    def test_op_norm_matches_random_vector_bound(self):
        rng = np.random.default_rng(5)
        data, part = random_clustered_dataset(rng, k=2, m=4, n_range=(6, 10))
        geom = compute_geometry(data, part)
        for a in range(2):
            block = geom.centered_blocks[a]
            for _ in range(25):
                v = rng.normal(size=4)
                assert np.linalg.norm(block @ v) <= geom.op_norms[a] * np.linalg.norm(v) + 1e-9


class TestPairStats:
    def test_ex1_values(self, ex1_data, ex1_part):
        pairs = compute_pair_stats(compute_geometry(ex1_data, ex1_part))
        assert pairs.h[0, 1] == 5.0
        assert np.allclose(pairs.w[0, 1], [1.0, 0.0])
        assert np.allclose(pairs.u[0][1], [-1.0, 1.0])
        assert np.allclose(pairs.u[1][0], [1.0, -1.0])
        assert pairs.tau[0, 1] == 1.0

    def test_antisymmetry_and_unit_norm(self):
        rng = np.random.default_rng(7)
        data, part = random_clustered_dataset(rng, k=3)
        pairs = compute_pair_stats(compute_geometry(data, part))
        for a in range(3):
            for b in range(3):
                if a == b:
                    continue
                assert np.allclose(pairs.w[b, a], -pairs.w[a, b])
                assert abs(np.linalg.norm(pairs.w[a, b]) - 1.0) < 1e-12

    def test_projections_sum_to_zero(self):
        rng = np.random.default_rng(9)
        data, part = random_clustered_dataset(rng, k=3)
        pairs = compute_pair_stats(compute_geometry(data, part))
        for a in range(3):
            for b in range(3):
                if a != b:
                    assert abs(pairs.u[a][b].sum()) < 1e-8

    def test_singletons_at_distance(self):
        data = Dataset(points=[[0.0, 0.0], [0.0, 7.0]])
        pairs = compute_pair_stats(compute_geometry(data, Partition.from_labels([0, 1])))
        assert pairs.h[0, 1] == 7.0
        assert pairs.tau[0, 1] == 0.0

    def test_coincident_centers_rejected(self):
        pts = [[0.0, 0.0], [2.0, 0.0], [1.0, 1.0], [1.0, -1.0]]
        data = Dataset(points=pts)
        with pytest.raises(CoincidentCenters) as err:
            compute_pair_stats(compute_geometry(data, Partition.from_labels([0, 0, 1, 1])))
        assert err.value.pair == (0, 1)

    def test_min_bisector_margin_identity(self):
        # The smallest inner product of any point against the midpoint of a
        # pair, along the inward center direction, equals h/2 - tau.
        rng = np.random.default_rng(13)
        for _ in range(30):
            data, part = random_clustered_dataset(rng)
            geom = compute_geometry(data, part)
            pairs = compute_pair_stats(geom)
            pts = data.points
            for a in range(part.k):
                for b in range(a + 1, part.k):
                    mid = 0.5 * (geom.centers[a] + geom.centers[b])
                    w_ba = pairs.w[b, a]
                    vals_a = (pts[part.members(a)] - mid) @ w_ba
                    vals_b = (pts[part.members(b)] - mid) @ pairs.w[a, b]
                    joint_min = min(vals_a.min(), vals_b.min())
                    expected = 0.5 * pairs.h[a, b] - pairs.tau[a, b]
                    assert abs(joint_min - expected) <= 1e-10


class TestDistanceMatrix:
    def test_two_points(self):
        data = Dataset(points=[[0.0, 0.0], [3.0, 0.0]])
        dist, order = distance_matrix(data, Partition.from_labels([0, 1]))
        assert np.allclose(dist, [[0.0, 9.0], [9.0, 0.0]])
        assert order.tolist() == [0, 1]

    def test_ex1_cross_block(self, ex1_data, ex1_part):
        dist, _ = distance_matrix(ex1_data, ex1_part)
        assert np.allclose(dist[0:2, 2:4], [[25.0, 49.0], [9.0, 25.0]])

    def test_singleton_diagonal_block(self):
        data = Dataset(points=[[1.0], [4.0]])
        dist, _ = distance_matrix(data, Partition.from_labels([0, 1]))
        assert dist[0, 0] == 0.0

    def test_reorders_cluster_contiguously(self):
        pts = np.array([[0.0], [10.0], [1.0], [11.0]])
        data = Dataset(points=pts)
        part = Partition.from_labels([0, 1, 0, 1])
        dist, order = distance_matrix(data, part)
        assert order.tolist() == [0, 2, 1, 3]
        # Within-cluster block distances are small, cross-block large.
        slices = block_slices(part.sizes)
        assert dist[slices[0], slices[0]].max() == 1.0
        assert dist[slices[0], slices[1]].min() == 81.0

    def test_symmetric_nonnegative_zero_diagonal(self):
        rng = np.random.default_rng(17)
        data, part = random_clustered_dataset(rng)
        dist, _ = distance_matrix(data, part)
        assert np.array_equal(dist, dist.T)
        assert dist.min() >= 0.0
        assert np.abs(np.diag(dist)).max() == 0.0


class TestRigidMotionInvariance:
    def test_h_tau_norms_invariant(self):
        rng = np.random.default_rng(23)
        data, part = random_clustered_dataset(rng, k=3, m=3)
        geom = compute_geometry(data, part)
        pairs = compute_pair_stats(geom)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        shift = rng.normal(size=3)
        moved = Dataset(points=data.points @ q.T + shift, truth_labels=part.labels)
        geom2 = compute_geometry(moved, part)
        pairs2 = compute_pair_stats(geom2)
        assert np.allclose(pairs.h, pairs2.h, atol=1e-9)
        assert np.allclose(pairs.tau, pairs2.tau, atol=1e-9)
        assert np.allclose(geom.op_norms, geom2.op_norms, atol=1e-9)
