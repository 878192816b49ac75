import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dlmf.ckde import (
    CKDEModel,
    UndefinedPoint,
    ckde_fit,
    ckde_mean,
    default_grid,
    density_mass,
    kernel_cond_cdf,
    kolmogorov_distance,
    loo_scores,
)
from dlmf.data import Dataset
from dlmf.generators import (
    AdversarialDivergence,
    AdversarialSpec,
    _objective,
    discriminator_objective,
    train_dg,
)
from dlmf.nn import TrainSpec, forward_batch, zero_network
from dlmf.reference import ReferenceDist, RngStream
from dlmf.simgen import generate_model_data
from dlmf.transform import predict_samples, transform_from_text, transform_to_text


def brute_force_loo(ds, h, h0):
    """Plain leave-one-out conditional log-likelihood on z-scored predictors."""
    m = CKDEModel.from_dataset(ds, h, h0)
    total = 0.0
    for i in range(ds.n):
        keep = np.arange(ds.n) != i
        w = np.exp(-((m.x[keep] - m.x[i]) ** 2).sum(axis=1) / (2 * h * h))
        k = np.exp(-0.5 * ((m.y[i] - m.y[keep]) / h0) ** 2) / (h0 * np.sqrt(2 * np.pi))
        with np.errstate(divide="ignore"):
            total += np.log((w @ k) / w.sum())
    return total


@pytest.fixture(scope="module")
def small():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(20, 2))
    return Dataset(x, x[:, 0] + 0.3 * rng.normal(size=20))


def test_cdf_tails(small):
    h0 = 0.4
    assert kernel_cond_cdf(small, [0, 0], small.y.max() + 10 * h0, 0.5, h0) >= 0.999
    assert kernel_cond_cdf(small, [0, 0], small.y.min() - 10 * h0, 0.5, h0) <= 0.001


def test_cdf_single_point_is_half_at_its_response():
    ds = Dataset([[1.0, 2.0]], [3.0])
    assert kernel_cond_cdf(ds, [1.0, 2.0], 3.0, 0.7, 0.2) == 0.5


def test_cdf_undefined_far_from_data(small):
    with pytest.raises(UndefinedPoint):
        kernel_cond_cdf(small, [1e4, 1e4], 0.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        kernel_cond_cdf(small, [0, 0], 0.0, 0.0, 0.1)


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-6, 6), st.floats(0, 4))
def test_cdf_monotone_and_bounded(x1, x2, y, gap):
    ds = generate_model_data("model1", 60, RngStream(0, "cdf")).subset(np.arange(60))
    lo = kernel_cond_cdf(ds, [x1, x2, 0, 0, 0], y, 0.8, 0.3)
    hi = kernel_cond_cdf(ds, [x1, x2, 0, 0, 0], y + gap, 0.8, 0.3)
    assert 0.0 <= lo <= hi <= 1.0


def test_loo_scores_match_brute_force(small):
    grid = [(0.3, 0.2), (1.0, 0.5), (2.0, 0.05)]
    m = CKDEModel.from_dataset(small, 1.0, 1.0)
    fast = loo_scores(m.x, m.y, grid, chunk=7)
    slow = [brute_force_loo(small, h, h0) for h, h0 in grid]
    np.testing.assert_allclose(fast, slow, rtol=1e-10)


def test_single_entry_grid_is_taken(small):
    m = ckde_fit(small, [(0.42, 0.17)])
    assert (m.h, m.h0) == (0.42, 0.17)


def test_selection_maximises_brute_force_score(small):
    grid = default_grid(5, 0.05, 2.0)
    m = ckde_fit(small, grid)
    scores = [brute_force_loo(small, h, h0) for h, h0 in grid]
    assert (m.h, m.h0) == grid[int(np.argmax(scores))]


def test_pure_noise_response_bandwidth_near_silverman():
    rng = np.random.default_rng(11)
    ds = Dataset(rng.normal(size=(500, 2)), rng.normal(size=500))
    m = ckde_fit(ds)
    silverman = 1.06 * 500 ** (-0.2)
    assert silverman / 2 <= m.h0 <= silverman * 2


def test_duplicated_rows_keep_the_selection(small):
    doubled = Dataset(np.vstack([small.x, small.x]), np.concatenate([small.y, small.y]))
    a, b = ckde_fit(small), ckde_fit(doubled)
    assert (a.h, a.h0) == (b.h, b.h0)


def test_ties_go_to_larger_bandwidths():
    # identical predictors make every weight equal, so the score ignores h
    ds = Dataset(np.ones((10, 1)), np.r_[np.zeros(5), np.ones(5)])
    m = ckde_fit(ds, [(0.5, 0.3), (1.0, 0.3), (0.7, 0.3)])
    assert m.h == 1.0


def test_degenerate_data_rejected():
    with pytest.raises(ValueError):
        ckde_fit(Dataset(np.ones((5, 2)), np.ones(5)))


def test_mean_of_constant_response():
    ds = Dataset(np.random.default_rng(0).normal(size=(30, 2)), np.full(30, 2.0))
    m = ckde_fit(ds, [(0.5, 0.3)])
    assert ckde_mean(m, [0.1, 0.2]) == pytest.approx(2.0, abs=1e-6)


def test_mean_of_mirror_pairs():
    x = np.repeat(np.random.default_rng(1).normal(size=(15, 2)), 2, axis=0)
    offsets = np.random.default_rng(2).uniform(0.5, 3, size=15)
    y = 5 + np.ravel(np.column_stack([offsets, -offsets]))
    m = ckde_fit(Dataset(x, y), [(0.8, 0.4)])
    assert ckde_mean(m, [0.0, 0.0]) == pytest.approx(5.0, abs=0.01)


def test_mean_single_row():
    m = ckde_fit(Dataset([[0.5]], [-1.5]), [(0.5, 0.2)])
    assert ckde_mean(m, [0.5]) == pytest.approx(-1.5, abs=1e-6)


def test_density_integrates_to_one():
    ds = generate_model_data("model1", 300, RngStream(2, "mass"))
    m = ckde_fit(ds)
    for x in generate_model_data("model1", 50, RngStream(2, "q")).x:
        assert density_mass(m, x) == pytest.approx(1.0, abs=0.01)


def test_kolmogorov_examples():
    assert kolmogorov_distance([1, 2, 3], [1, 2, 3]) == 0
    assert kolmogorov_distance([0], [1]) == 1
    assert kolmogorov_distance([1, 2], [1, 3]) == 0.5


def model1(n=200):
    return generate_model_data("model1", n, RngStream(0, "dg"))


def test_zero_objective_is_minus_one():
    disc = zero_network([6, 50, 25, 1])
    ds = model1(30)
    assert discriminator_objective(disc, np.zeros(30), ds.y, ds.x, "KL") == -1.0
    assert discriminator_objective(disc, np.zeros(30), ds.y, ds.x, "WA") == 0.0


def test_objective_derivatives_by_differences():
    rng = np.random.default_rng(0)
    fake, real = rng.normal(size=4), rng.normal(size=5)
    for loss in ("KL", "WA"):
        _, d_f, d_r = _objective(fake, real, loss)
        for k in range(5):
            e = np.zeros(5)
            e[k] = 1e-6
            num = (_objective(fake, real + e, loss)[0] - _objective(fake, real - e, loss)[0]) / 2e-6
            assert d_r[k] == pytest.approx(num, rel=1e-6)
        assert np.allclose(d_f, 0.25)


def test_zero_generator_without_training_outputs_zero():
    ds = model1(50)
    ref = ReferenceDist("normal", 3)
    spec = AdversarialSpec(TrainSpec(epochs=0, hidden=(4,)))
    t = train_dg(ds, ref, spec, RngStream(0, "g"), init=zero_network([8, 4, 1]))
    assert t.method == "DG-KL"
    assert np.all(predict_samples(t, ds.x[0], 20, RngStream(0, "s")) == 0)


@pytest.mark.parametrize("loss", ["KL", "WA"])
def test_clip_bounds_hold_every_epoch(loss):
    ds = model1(200)
    spec = AdversarialSpec(TrainSpec(epochs=60, hidden=(10,), lr=0.01), disc_hidden=(8, 4), loss=loss)
    worst = {"gen": 0.0, "disc": 0.0}

    def watch(epoch, gen, disc):
        worst["gen"] = max(worst["gen"], max(np.abs(p).max() for p in gen.params))
        worst["disc"] = max(worst["disc"], max(np.abs(p).max() for p in disc.params))

    t = train_dg(ds, ReferenceDist("normal", 2), spec, RngStream(1, "g"), callback=watch)
    assert worst["disc"] <= spec.disc_clip
    assert worst["gen"] <= spec.gen_clip
    assert np.isfinite(t.meta.final_train_loss)
    assert t.method == ("DG-KL" if loss == "KL" else "DG-WA")


def test_overflowing_objective_aborts():
    y = np.where(np.arange(20) % 2 == 0, 1e4, -1e4)
    ds = Dataset(np.random.default_rng(0).normal(size=(20, 2)), y)
    spec = AdversarialSpec(TrainSpec(epochs=5, hidden=(4,)), disc_hidden=(20, 20))
    with np.errstate(over="ignore"), pytest.raises(AdversarialDivergence):
        train_dg(ds, ReferenceDist("normal", 1), spec, RngStream(0, "g"))


def test_generator_serialises_with_its_tag():
    ds = model1(40)
    spec = AdversarialSpec(TrainSpec(epochs=3, hidden=(4,)), loss="WA")
    t = train_dg(ds, ReferenceDist("normal", 2), spec, RngStream(0, "g"))
    back = transform_from_text(transform_to_text(t))
    assert back.method == "DG-WA" and back.net == t.net
    x = np.hstack([ds.x[:3], np.zeros((3, 2))])
    assert np.array_equal(forward_batch(back.net, x), forward_batch(t.net, x))


def test_spec_validation():
    with pytest.raises(ValueError):
        AdversarialSpec(loss="JS")
    with pytest.raises(ValueError):
        AdversarialSpec(b4=0)
    assert AdversarialSpec(loss="wa").disc_clip == 1.0
