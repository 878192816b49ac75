import numpy as np
import pytest
from hypothesis import given, strategies as st

from dlmf.ckde import kolmogorov_distance
from dlmf.reference import (
    ReferenceDist,
    RngStream,
    derive_seed,
    sample_reference,
    sample_truncated_normal,
)


def test_uniform_cube_support():
    z = sample_reference(ReferenceDist("uniform", 3), 4, RngStream(0, "z"))
    assert z.shape == (4, 3)
    assert np.all((z >= 0) & (z <= 1))


def test_standard_normal_mean():
    z = sample_reference(ReferenceDist("normal", 1), 100_000, RngStream(0, "z"))
    assert abs(z.mean()) < 0.02


def test_same_seed_and_label_reproduce():
    dist = ReferenceDist("normal", 2)
    a = sample_reference(dist, 10, RngStream(9, "a/b"))
    b = sample_reference(dist, 10, RngStream(9, "a/b"))
    assert np.array_equal(a, b)


def test_truncated_normal_support_and_mean():
    v = sample_truncated_normal(-5, 5, 10_000, RngStream(2, "t"))
    assert np.all(np.abs(v) <= 5)
    assert abs(v.mean()) < 0.05
    w = sample_truncated_normal(0, 5, 10_000, RngStream(2, "t"))
    assert np.all(w >= 0)


def test_truncated_normal_narrow_window():
    v = sample_truncated_normal(1.0, 1.1, 500, RngStream(3, "narrow"))
    assert np.all((v >= 1.0) & (v <= 1.1))


def test_uniform_coordinate_matches_uniform_cdf():
    z = sample_reference(ReferenceDist("uniform", 2), 100_000, RngStream(5, "u"))
    col = np.sort(z[:, 0])
    grid = np.arange(1, col.size + 1) / col.size
    ks = max(np.max(np.abs(grid - col)), np.max(np.abs(grid - 1 / col.size - col)))
    assert ks < 0.01


def test_distinct_labels_are_uncorrelated():
    a = RngStream(1, "first").gen.standard_normal(10_000)
    b = RngStream(1, "second").gen.standard_normal(10_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05
    assert kolmogorov_distance(a, b) < 0.03


def test_child_labels_compose():
    root = RngStream(4, "replicate")
    assert root.child(3, "boot").label == "replicate/3/boot"
    assert root.seed_for("init") == derive_seed(4, "replicate/init")


@given(st.sampled_from(["uniform:3", "normal:1", "normal:25", "truncnormal:2:-1.5:2.0"]))
def test_spec_strings_round_trip(text):
    assert str(ReferenceDist.parse(text)) == text


@pytest.mark.parametrize("bad", ["cauchy:2", "normal", "normal:0", "truncnormal:2:1:0", "uniform:x"])
def test_bad_spec_strings(bad):
    with pytest.raises(ValueError):
        ReferenceDist.parse(bad)


def test_seed_must_fit_64_bits():
    with pytest.raises(ValueError):
        RngStream(2**64, "x")
