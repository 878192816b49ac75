import numpy as np
import pytest

from dlmf.reference import RngStream
from dlmf.simgen import (
    generate_model_data,
    model_response,
    sample_conditional,
    sample_predictors,
    true_conditional_mean,
)


def test_model1_at_the_origin():
    assert model_response("model1", np.zeros((1, 5)), [0.0])[0] == 1.0


def test_model2_noise_scale_at_the_origin():
    assert model_response("model2", np.zeros((1, 5)), [1.0])[0] == 1.5


def test_model3_branches_follow_the_coin():
    x = np.array([[2.0, 0, 0, 0, 0]] * 2)
    y = model_response("model3", x, [0.0, 0.0], u=[0.3, 0.7])
    assert y.tolist() == [-2.0, 2.0]
    with pytest.raises(ValueError):
        model_response("model3", x, [0.0, 0.0])


def test_generated_values_stay_in_the_truncation_box():
    ds = generate_model_data("model3", 2000, RngStream(0, "d"))
    assert np.all(np.abs(ds.x) <= 5)
    resid = np.minimum(np.abs(ds.y - ds.x[:, 0]), np.abs(ds.y + ds.x[:, 0]))
    assert np.all(resid <= 0.25 * 5)


def test_true_means():
    assert true_conditional_mean("model3", np.ones(5)) == 0.0
    assert true_conditional_mean("model1", np.zeros(5)) == 1.0
    assert true_conditional_mean("Model-2", [1, 0, 0, 2, 3]) == pytest.approx(1.0, abs=1e-15)


def test_model3_conditional_at_zero_is_narrow_normal():
    x = np.zeros(5)
    draws = sample_conditional("model3", x, 10_000, RngStream(1, "c"))
    assert abs(draws.mean()) < 0.01
    assert abs(draws.std() - 0.25) < 0.02


def test_model1_conditional_mean_at_zero():
    draws = sample_conditional("model1", np.zeros(5), 10_000, RngStream(1, "c"))
    assert abs(draws.mean() - 1.0) < 0.05


def test_conditional_draws_are_reproducible():
    x = np.linspace(-1, 1, 5)
    a = sample_conditional("model2", x, 1, RngStream(8, "c"))
    b = sample_conditional("model2", x, 1, RngStream(8, "c"))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("model", ["model1", "model2", "model3"])
def test_conditional_means_match_oracle(model):
    xs = sample_predictors(20, RngStream(3, "pts"))
    for j, x in enumerate(xs):
        draws = sample_conditional(model, x, 100_000, RngStream(3, f"{model}/{j}"))
        tol = 4 * draws.std() / np.sqrt(draws.size)
        assert abs(draws.mean() - true_conditional_mean(model, x)) <= tol


def test_unknown_model():
    with pytest.raises(ValueError):
        generate_model_data("model4", 5, RngStream(0, "x"))
