import numpy as np
import pytest

from kmeans_sdp.errors import InvalidProblem, NotConverged, RoundingAmbiguous
from kmeans_sdp.geometry import Dataset, Partition, distance_matrix
from kmeans_sdp.sdp import (
    Relaxation,
    SdpProblem,
    SolverOptions,
    ideal_solution,
    kmeans_objective,
    round_solution,
    solve,
)

from conftest import random_clustered_dataset


def ex1_problem(ex1_data, ex1_part, **kwargs):
    dist, _ = distance_matrix(ex1_data, ex1_part)
    return SdpProblem(dist=dist, k=2, **kwargs)


class TestProblemValidation:
    def test_asymmetric_rejected(self):
        bad = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(InvalidProblem):
            SdpProblem(dist=bad, k=1)

    def test_negative_rejected(self):
        bad = np.array([[0.0, -1.0], [-1.0, 0.0]])
        with pytest.raises(InvalidProblem):
            SdpProblem(dist=bad, k=1)

    def test_nonzero_diagonal_rejected(self):
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(InvalidProblem):
            SdpProblem(dist=bad, k=1)

    def test_balanced_needs_divisible(self):
        dist = np.array([[0.0, 1.0, 4.0], [1.0, 0.0, 1.0], [4.0, 1.0, 0.0]])
        with pytest.raises(InvalidProblem):
            SdpProblem(dist=dist, k=2, variant=Relaxation.AMINI_LEVINA, cluster_size=1)


class TestIdealSolution:
    def test_ex1_block_diagonal(self, ex1_part):
        X = ideal_solution(ex1_part)
        assert np.allclose(X[:2, :2], 0.5)
        assert np.allclose(X[2:, 2:], 0.5)
        assert np.allclose(X[:2, 2:], 0.0)

    def test_singletons_identity(self):
        assert np.allclose(ideal_solution(Partition.from_labels([0, 1, 2])), np.eye(3))

    def test_rows_sum_to_one_and_idempotent(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            labels = rng.integers(0, 3, size=12)
            labels[:3] = [0, 1, 2]
            part = Partition.from_labels(labels)
            X = ideal_solution(part)
            assert np.allclose(X @ np.ones(12), 1.0)
            assert np.allclose(X @ X, X)
            assert abs(np.trace(X) - part.k) < 1e-12


class TestSolve:
    def test_k_equals_n_identity(self):
        dist = np.array([[0.0, 1.0], [1.0, 0.0]])
        sol = solve(SdpProblem(dist=dist, k=2))
        assert np.allclose(sol.Z, np.eye(2))
        assert sol.objective == 0.0
        assert sol.converged

    def test_k1_uniform(self):
        dist = np.array([[0.0, 1.0, 4.0], [1.0, 0.0, 1.0], [4.0, 1.0, 0.0]])
        sol = solve(SdpProblem(dist=dist, k=1))
        assert np.allclose(sol.Z, 1.0 / 3.0)

    def test_ex1_recovers_blocks(self, ex1_data, ex1_part):
        sol = solve(ex1_problem(ex1_data, ex1_part))
        assert sol.converged
        assert sol.residuals.max() <= 1e-7
        assert abs(sol.objective - 8.0) < 1e-5
        assert np.linalg.norm(sol.Z - ideal_solution(ex1_part)) < 1e-5

    def test_ex1_balanced_variant(self, ex1_data, ex1_part):
        sol = solve(ex1_problem(ex1_data, ex1_part, variant=Relaxation.AMINI_LEVINA, cluster_size=2))
        assert np.linalg.norm(sol.Z - ideal_solution(ex1_part)) < 1e-5

    def test_not_converged_carries_iterate(self, ex1_data, ex1_part):
        with pytest.raises(NotConverged) as err:
            solve(ex1_problem(ex1_data, ex1_part), SolverOptions(max_iter=3))
        sol = err.value.solution
        assert sol.iterations == 3
        assert not sol.converged
        assert sol.Z.shape == (4, 4)

    def test_size_cap(self, ex1_data, ex1_part):
        with pytest.raises(InvalidProblem):
            solve(ex1_problem(ex1_data, ex1_part), SolverOptions(size_cap=2))

    def test_relaxation_lower_bounds_any_partition(self):
        rng = np.random.default_rng(4)
        data, part = random_clustered_dataset(rng, k=2, n_range=(3, 6))
        dist, _ = distance_matrix(data, part)
        sol = solve(SdpProblem(dist=dist, k=2))
        n = dist.shape[0]
        for _ in range(10):
            labels = rng.integers(0, 2, size=n)
            labels[:2] = [0, 1]
            candidate = Partition.from_labels(labels)
            assert sol.objective <= np.sum(dist * ideal_solution(candidate)) + 1e-6

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(6)
        data, part = random_clustered_dataset(rng, k=2, m=2, n_range=(4, 6))
        dist, _ = distance_matrix(data, part)
        sol = solve(SdpProblem(dist=dist, k=2))
        n = dist.shape[0]
        perm = rng.permutation(n)
        dist_p = dist[np.ix_(perm, perm)]
        sol_p = solve(SdpProblem(dist=dist_p, k=2))
        assert np.abs(sol_p.Z - sol.Z[np.ix_(perm, perm)]).max() <= 1e-6


class TestRounding:
    def test_ideal_rounds_exactly(self, ex1_part):
        from kmeans_sdp.sdp import SdpSolution, Residuals

        Z = ideal_solution(ex1_part)
        sol = SdpSolution(
            Z=Z, objective=0.0, residuals=Residuals(0, 0, 0, 0), iterations=0, converged=True
        )
        rounded = round_solution(sol, 2)
        assert rounded.part.labels.tolist() == [0, 0, 1, 1]
        assert rounded.recovery_distance == 0.0
        assert rounded.exact

    def test_noisy_ideal_still_exact(self, ex1_part):
        from kmeans_sdp.sdp import SdpSolution, Residuals

        rng = np.random.default_rng(8)
        Z = ideal_solution(ex1_part) + 1e-6 * rng.normal(size=(4, 4))
        sol = SdpSolution(
            Z=Z, objective=0.0, residuals=Residuals(0, 0, 0, 0), iterations=0, converged=True
        )
        rounded = round_solution(sol, 2, ref=ex1_part)
        assert rounded.part.labels.tolist() == [0, 0, 1, 1]
        assert rounded.exact

    def test_uninformative_solution_flagged(self):
        from kmeans_sdp.sdp import SdpSolution, Residuals

        n = 6
        Z = np.full((n, n), 1.0 / n)
        sol = SdpSolution(
            Z=Z, objective=0.0, residuals=Residuals(0, 0, 0, 0), iterations=0, converged=True
        )
        try:
            rounded = round_solution(sol, 2)
            assert not rounded.exact
        except RoundingAmbiguous:
            pass

    def test_unconverged_requires_override(self, ex1_part):
        from kmeans_sdp.sdp import SdpSolution, Residuals

        Z = ideal_solution(ex1_part)
        sol = SdpSolution(
            Z=Z, objective=0.0, residuals=Residuals(0, 0, 0, 0), iterations=9, converged=False
        )
        with pytest.raises(RoundingAmbiguous):
            round_solution(sol, 2)
        rounded = round_solution(sol, 2, allow_unconverged=True)
        assert rounded.exact


class TestKmeansObjective:
    def test_ex1(self, ex1_data, ex1_part):
        assert abs(kmeans_objective(ex1_data, ex1_part) - 4.0) < 1e-12

    def test_singletons_zero(self):
        data = Dataset(points=[[0.0, 0.0], [5.0, 5.0]])
        assert kmeans_objective(data, Partition.from_labels([0, 1])) == 0.0

    def test_single_cluster(self):
        data = Dataset(points=[[0.0, 0.0], [2.0, 0.0]])
        assert abs(kmeans_objective(data, Partition.from_labels([0, 0])) - 2.0) < 1e-12

    def test_identity_with_block_matrix(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            data, part = random_clustered_dataset(rng, n_range=(2, 5))
            obj = kmeans_objective(data, part)
            dist, _ = distance_matrix(data, part)
            labels_block = np.repeat(np.arange(part.k), part.sizes)
            X = ideal_solution(Partition.from_labels(labels_block))
            assert abs(2.0 * obj - np.sum(X * dist)) <= 1e-9 * (1.0 + 2.0 * obj)

    def test_self_duality_on_certified_instance(self, ex1_data, ex1_part):
        from kmeans_sdp.certificate import build_certificate_pw

        sol = solve(ex1_problem(ex1_data, ex1_part))
        cert = build_certificate_pw(ex1_data, ex1_part)
        assert cert.verdicts.valid
        dual_obj = -2 * cert.z - cert.alpha.sum()
        assert abs(sol.objective - dual_obj) <= 1e-5 * (1.0 + abs(sol.objective))
