import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadnet.datasets import (
    Dataset,
    generate_cluster_data,
    generate_regression_data,
    ground_truth,
    subspecies_spec,
    two_blob_spec,
)


@pytest.mark.parametrize(
    "name, x, expected",
    [
        ("f2", 4.0, 9.0),
        ("f1", 6.0, 2.6),
        ("f1", 0.0, 0.0),
        ("f2", 3.0, 9.0),
        ("f1", 3.0, 3.0),
        ("f1", 5.0, 3.0),
        ("f2", 5.0, 9.0),
        ("f2", 6.0, 9.0 * np.exp(-1.0)),
        ("f2", -2.0, 0.0),
    ],
)
def test_ground_truth_values(name, x, expected):
    assert ground_truth(name, x) == pytest.approx(expected, abs=1e-14)


@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300))
def test_ground_truth_total_and_finite(x):
    for name in ("f1", "f2"):
        assert np.isfinite(ground_truth(name, x))


def test_ground_truth_unknown_name():
    with pytest.raises(ValueError):
        ground_truth("f3", 0.0)


def test_regression_sizes_range_and_split():
    data = generate_regression_data("f2", 0)
    assert (len(data), data.train_idx.size, data.test_idx.size) == (1600, 1072, 528)
    assert data.inputs.min() >= -3.0 and data.inputs.max() <= 13.0
    assert np.intersect1d(data.train_idx, data.test_idx).size == 0


def test_regression_deterministic_under_seed():
    assert generate_regression_data("f1", 5).digest() == generate_regression_data("f1", 5).digest()
    assert generate_regression_data("f1", 5).digest() != generate_regression_data("f1", 6).digest()


def test_even_grid_mode():
    data = generate_regression_data("f1", 0, even_grid=True)
    np.testing.assert_allclose(data.inputs.ravel(), np.linspace(-3, 13, 1600))


def test_split_must_partition():
    with pytest.raises(ValueError):
        Dataset(np.zeros(3), np.zeros(3), [0, 1], [1, 2])


def test_two_blob_counts_and_nearest_centroid_separability():
    data = generate_cluster_data(two_blob_spec(), 3)
    assert np.sum(data.targets == 1) == 500 and np.sum(data.targets == 0) == 500
    c1 = data.inputs[data.targets == 1].mean(axis=0)
    c0 = data.inputs[data.targets == 0].mean(axis=0)
    pred = np.linalg.norm(data.inputs - c1, axis=1) < np.linalg.norm(data.inputs - c0, axis=1)
    assert np.mean(pred == (data.targets == 1)) >= 0.99


def test_subspecies_counts_and_geometry():
    spec = subspecies_spec()
    data = generate_cluster_data(spec, 4)
    core = data.inputs[data.targets == 1]
    ring = data.inputs[data.targets == 0]
    assert (len(core), len(ring)) == (200, 1800)
    radius = np.linalg.norm(ring, axis=1)
    assert radius.min() >= 2.0 and radius.max() <= 3.0
    assert np.median(np.linalg.norm(core, axis=1)) < 1.0


def test_cluster_train_fraction():
    spec = subspecies_spec()
    spec.train_fraction = 0.8
    data = generate_cluster_data(spec, 0)
    assert data.train_idx.size == 1600


def test_csv_header():
    assert generate_regression_data("f2", 0).to_csv().splitlines()[0] == "x0,y,split"
