import numpy as np
import pytest

from kmeans_sdp.errors import NotBalanced
from kmeans_sdp.geometry import Dataset, Partition, compute_geometry, compute_pair_stats
from kmeans_sdp.proximity import (
    AcceptVerdict,
    Mode,
    accept_answer,
    check_necessary_balanced,
    check_necessary_general,
    check_proximity_balanced,
    check_proximity_general,
    report_to_dict,
)

from conftest import random_clustered_dataset, separation_fixture


def stats_for(data, part):
    geom = compute_geometry(data, part)
    return geom, compute_pair_stats(geom)


class TestGeneralCondition:
    def test_ex1_margin(self, ex1_data, ex1_part):
        report = check_proximity_general(*stats_for(ex1_data, ex1_part))
        pair = report.pair(0, 1)
        assert abs(pair.lhs - 1.5) < 1e-12
        assert abs(pair.rhs - 1.0) < 1e-12
        assert abs(pair.margin - 0.5) < 1e-12
        assert report.satisfied
        assert report.mode is Mode.GENERAL

    def test_singletons_zero_spread(self):
        data = Dataset(points=[[0.0, 0.0], [0.1, 0.0]])
        report = check_proximity_general(*stats_for(data, Partition.from_labels([0, 1])))
        pair = report.pair(0, 1)
        assert pair.rhs == 0.0
        assert pair.lhs > 0.0
        assert report.satisfied

    def test_tie_is_not_satisfied(self):
        # Shift the second cluster so h = 4: lhs = rhs = 1, strict > fails.
        pts = [[0.0, 0.0], [2.0, 0.0], [4.0, 0.0], [6.0, 0.0]]
        data = Dataset(points=pts)
        report = check_proximity_general(*stats_for(data, Partition.from_labels([0, 0, 1, 1])))
        pair = report.pair(0, 1)
        assert abs(pair.margin) < 1e-12
        assert not report.satisfied

    def test_cost_counters(self, ex1_data, ex1_part):
        report = check_proximity_general(*stats_for(ex1_data, ex1_part))
        assert report.cost_counters["inner_products"] == 4
        assert report.cost_counters["svd_flops_estimate"] == 16

    def test_report_serializes(self, ex1_data, ex1_part):
        import json

        report = check_proximity_general(*stats_for(ex1_data, ex1_part))
        payload = json.dumps(report_to_dict(report))
        assert '"satisfied": true' in payload


class TestBalancedCondition:
    def test_ex1(self, ex1_data, ex1_part):
        report = check_proximity_balanced(*stats_for(ex1_data, ex1_part))
        pair = report.pair(0, 1)
        # In the unhalved reading: h - 2 tau = 3 exceeds sqrt((k/n)(sum of
        # the pair's squared norms)) = 2.
        assert abs(2.0 * pair.lhs - 3.0) < 1e-12
        assert abs(2.0 * pair.rhs - 2.0) < 1e-12
        assert report.satisfied

    def test_unbalanced_sizes_rejected(self):
        pts = np.vstack([np.zeros((2, 2)), np.ones((3, 2)) * 5])
        data = Dataset(points=pts)
        with pytest.raises(NotBalanced) as err:
            check_proximity_balanced(*stats_for(data, Partition.from_labels([0, 0, 1, 1, 1])))
        assert err.value.sizes == [2, 3]

    def test_separation_fixture_general_fails_balanced_holds(self):
        data, part = separation_fixture()
        geom, pairs = stats_for(data, part)
        assert not check_proximity_general(geom, pairs).satisfied
        assert check_proximity_balanced(geom, pairs).satisfied


class TestNecessaryConditions:
    def test_ex1_general(self, ex1_data, ex1_part):
        report = check_necessary_general(*stats_for(ex1_data, ex1_part))
        pair = report.pair(0, 1)
        assert pair.lhs == 5.0
        assert abs(pair.rhs - (1.0 + np.sqrt(3.0))) < 1e-12
        assert report.satisfied

    def test_ex1_balanced(self, ex1_data, ex1_part):
        report = check_necessary_balanced(*stats_for(ex1_data, ex1_part))
        assert abs(report.pair(0, 1).rhs - (1.0 + np.sqrt(3.0))) < 1e-12
        assert report.satisfied

    def test_singletons(self):
        data = Dataset(points=[[0.0, 0.0], [0.5, 0.0]])
        part = Partition.from_labels([0, 1])
        assert check_necessary_general(*stats_for(data, part)).satisfied
        assert check_necessary_balanced(*stats_for(data, part)).satisfied

    def test_overlapping_balls_usually_violate(self):
        # Two unit balls at center distance 1.5 overlap badly; the necessary
        # condition should fail in the vast majority of draws.
        from kmeans_sdp.models import BallModelSpec, sample_ball_model

        failures = 0
        for seed in range(20):
            data = sample_ball_model(
                BallModelSpec(centers=[[0.0, 0.0], [1.5, 0.0]], sizes=[25, 25], seed=seed)
            )
            report = check_necessary_general(*stats_for(data, data.truth_partition()))
            failures += not report.satisfied
        assert failures >= 16

    def test_balanced_bound_no_looser_when_max_in_pair(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            # Two equal-size clusters: the max norm is always within the pair.
            n = int(rng.integers(3, 9))
            m = int(rng.integers(1, 5))
            blocks = [rng.normal(size=(n, m)), rng.normal(size=(n, m)) + 8.0]
            data = Dataset(points=np.vstack(blocks))
            part = Partition.from_labels([0] * n + [1] * n)
            geom, pairs = stats_for(data, part)
            gen = check_necessary_general(geom, pairs).pair(0, 1)
            bal = check_necessary_balanced(geom, pairs).pair(0, 1)
            assert bal.rhs <= gen.rhs + 1e-12


class TestAcceptAnswer:
    def test_ex1_certified(self, ex1_data, ex1_part):
        assert accept_answer(ex1_data, ex1_part) is AcceptVerdict.CERTIFIED_UNIQUE_OPTIMUM

    def test_wrong_clustering_unknown(self, ex1_data):
        assert accept_answer(ex1_data, Partition.from_labels([0, 1, 0, 1])) is AcceptVerdict.UNKNOWN

    def test_k1_unknown(self, ex1_data):
        assert accept_answer(ex1_data, Partition.from_labels([0, 0, 0, 0])) is AcceptVerdict.UNKNOWN


class TestProperties:
    def test_scale_equivariance(self, ex1_data, ex1_part):
        base = check_proximity_general(*stats_for(ex1_data, ex1_part))
        for s in (0.5, 3.0):
            scaled = Dataset(points=s * ex1_data.points)
            rep = check_proximity_general(*stats_for(scaled, ex1_part))
            for p0, p1 in zip(base.pairs, rep.pairs):
                assert abs(p1.lhs - s * p0.lhs) <= 1e-9 * max(1.0, abs(p1.lhs))
                assert abs(p1.rhs - s * p0.rhs) <= 1e-9 * max(1.0, abs(p1.rhs))
            assert rep.satisfied == base.satisfied

    def test_translating_cluster_away_keeps_satisfied(self):
        rng = np.random.default_rng(37)
        moved_any = False
        for _ in range(20):
            data, part = random_clustered_dataset(rng, k=2, n_range=(3, 8))
            geom, pairs = stats_for(data, part)
            rep = check_proximity_general(geom, pairs)
            if not rep.satisfied:
                continue
            moved_any = True
            direction = pairs.w[0, 1]
            for t in (0.5, 2.0, 10.0):
                pts = data.points.copy()
                pts[part.members(1)] += t * direction
                rep2 = check_proximity_general(*stats_for(Dataset(points=pts), part))
                assert rep2.satisfied
        assert moved_any

    def test_sufficient_implies_necessary(self):
        rng = np.random.default_rng(41)
        seen = 0
        for _ in range(40):
            data, part = random_clustered_dataset(rng)
            geom, pairs = stats_for(data, part)
            if check_proximity_general(geom, pairs).satisfied:
                seen += 1
                assert check_necessary_general(geom, pairs).satisfied
        assert seen >= 5

    def test_sufficient_implies_certificate(self):
        from kmeans_sdp.certificate import build_certificate_pw

        rng = np.random.default_rng(43)
        seen = 0
        for _ in range(15):
            data, part = random_clustered_dataset(rng, n_range=(2, 6))
            geom, pairs = stats_for(data, part)
            if check_proximity_general(geom, pairs).satisfied:
                seen += 1
                assert build_certificate_pw(data, part).verdicts.valid
        assert seen >= 5
