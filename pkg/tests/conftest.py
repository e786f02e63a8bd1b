"""Shared fixtures: the four-point golden instance and helper generators."""

import numpy as np
import pytest

from kmeans_sdp.geometry import Dataset, Partition


# Two clusters of two collinear points each; every statistic is hand-checkable:
# centers (1,0) and (6,0), h = 5, tau = 1, all operator norms sqrt(2).
EX1_POINTS = np.array([[0.0, 0.0], [2.0, 0.0], [5.0, 0.0], [7.0, 0.0]])
EX1_LABELS = np.array([0, 0, 1, 1])


@pytest.fixture
def ex1_data():
    return Dataset(points=EX1_POINTS, truth_labels=EX1_LABELS)


@pytest.fixture
def ex1_part():
    return Partition.from_labels(EX1_LABELS)


def ring(center, radius, n, phase=0.0):
    """n equispaced points on a circle; fully deterministic."""
    ang = phase + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack(
        [center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)]
    )


def separation_fixture():
    """Three balanced clusters: two tight rings near each other plus one
    huge-spread ring far away.

    The far cluster's spread poisons the global spread-sum threshold, so the
    general condition fails on the close pair while the localized balanced
    condition holds for every pair.
    """
    n = 20
    pts = np.vstack(
        [
            ring((0.0, 0.0), 0.3, n),
            ring((2.0, 0.0), 0.3, n, phase=np.pi / n),
            ring((0.0, 40.0), 5.0, n, phase=np.pi / (2 * n)),
        ]
    )
    labels = np.repeat(np.arange(3), n)
    return Dataset(points=pts, truth_labels=labels), Partition.from_labels(labels)


def random_clustered_dataset(rng, k=None, m=None, n_range=(2, 8), spread=1.0, min_sep=6.0):
    """Random well-separated instance for property tests."""
    k = k if k is not None else int(rng.integers(2, 5))
    m = m if m is not None else int(rng.integers(1, 6))
    centers = np.zeros((k, m))
    centers[:, 0] = min_sep * np.arange(k)
    if m > 1:
        centers[:, 1:] += rng.normal(scale=0.5, size=(k, m - 1))
    sizes = rng.integers(n_range[0], n_range[1] + 1, size=k)
    blocks = [centers[a] + spread * rng.normal(size=(sizes[a], m)) for a in range(k)]
    labels = np.repeat(np.arange(k), sizes)
    return Dataset(points=np.vstack(blocks), truth_labels=labels), Partition.from_labels(labels)
