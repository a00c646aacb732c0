import numpy as np
import pytest

from coverage_lab.core import Dataset
from coverage_lab.errors import ConfigError, DataError
from coverage_lab.regressors import (
    default_knn_k,
    estimate_consistency,
    fit_regressor,
    predict_mean,
    predict_mean_many,
)


def test_constant_mean_is_sample_mean():
    model = fit_regressor("constant-mean", Dataset([[0.0], [1.0], [2.0]], [1.0, 2.0, 3.0]))
    assert predict_mean(model, [100.0]) == pytest.approx(2.0)
    assert predict_mean(model, [-5.0]) == pytest.approx(2.0)


def test_least_squares_interpolates_noiseless_line(rng):
    X = rng.uniform(-3, 3, (40, 1))
    model = fit_regressor("least-squares", Dataset(X, 2.0 * X[:, 0]))
    for x in (-1.0, 0.0, 2.5):
        assert predict_mean(model, [x]) == pytest.approx(2.0 * x, abs=1e-9)
    residuals = 2.0 * X[:, 0] - predict_mean_many(model, X)
    assert np.abs(residuals).max() <= 1e-9


def test_linear_model_is_dot_product():
    from coverage_lab.regressors import RegressionModel

    model = RegressionModel(kind="least-squares", dim=2, coef=np.array([1.0, -1.0]), intercept=0.0)
    assert predict_mean(model, [3.0, 2.0]) == pytest.approx(1.0)


def test_one_nn_lookup():
    model = fit_regressor("knn", Dataset([[0.0], [10.0]], [0.0, 5.0]), k=1)
    assert predict_mean(model, [1.0]) == pytest.approx(0.0)
    assert predict_mean(model, [9.0]) == pytest.approx(5.0)


def test_full_neighborhood_knn_is_sample_mean(rng):
    ds = Dataset(rng.normal(size=(7, 1)), rng.normal(size=7))
    model = fit_regressor("knn", ds, k=7)
    assert predict_mean(model, [0.3]) == pytest.approx(float(ds.responses.mean()))


def test_knn_tie_break_by_training_index():
    # two training points equidistant from the query: the earlier index wins
    model = fit_regressor("knn", Dataset([[1.0], [-1.0], [5.0]], [10.0, 20.0, 30.0]), k=1)
    assert predict_mean(model, [0.0]) == pytest.approx(10.0)


def test_default_k_rate():
    assert default_knn_k(1000) == int(np.ceil(1000 ** (2 / 3)))
    assert default_knn_k(1) == 1


def test_knn_k_out_of_range():
    with pytest.raises(ConfigError):
        fit_regressor("knn", Dataset([[0.0]], [0.0]), k=2)


def test_unknown_kind():
    with pytest.raises(ConfigError):
        fit_regressor("boost", Dataset([[0.0]], [0.0]))


def test_dimension_mismatch_is_input_error():
    model = fit_regressor("constant-mean", Dataset([[0.0, 1.0]], [0.0]))
    with pytest.raises(DataError):
        predict_mean(model, [1.0])


def test_singular_design_flagged_min_norm(rng):
    # duplicated column: rank-deficient design, lstsq minimum-norm solution
    x = rng.normal(size=(20, 1))
    X = np.hstack([x, x])
    model = fit_regressor("least-squares", Dataset(X, 3.0 * x[:, 0]))
    assert model.rank_deficient
    assert predict_mean(model, [1.0, 1.0]) == pytest.approx(3.0, abs=1e-8)


def test_refit_identical_predictions(rng):
    ds = Dataset(rng.normal(size=(30, 2)), rng.normal(size=30))
    probe = rng.normal(size=(10, 2))
    for kind in ("constant-mean", "least-squares", "knn"):
        a = fit_regressor(kind, ds)
        b = fit_regressor(kind, ds)
        assert np.array_equal(predict_mean_many(a, probe), predict_mean_many(b, probe))


class TestConsistencyEstimate:
    def test_exact_model_gives_zero(self):
        ds = Dataset([[0.0], [1.0]], [0.0, 2.0])
        model = fit_regressor("least-squares", ds)
        truth = lambda X: 2.0 * X[:, 0]
        sampler = lambda rng, m: rng.uniform(0, 1, (m, 1))
        est = estimate_consistency(model, truth, sampler, m=500, seed=0)
        assert est.value == pytest.approx(0.0, abs=1e-18)

    def test_constant_offset(self):
        model = fit_regressor("constant-mean", Dataset([[0.0]], [0.0]))
        truth = lambda X: np.ones(X.shape[0])
        sampler = lambda rng, m: rng.uniform(0, 1, (m, 1))
        est = estimate_consistency(model, truth, sampler, m=200, seed=1)
        assert est.value == pytest.approx(1.0)
        assert est.stderr == pytest.approx(0.0)

    def test_least_squares_rate(self):
        # repeat-fit simulation oracle: LS on n0=2000 draws of y = 2x + N(0,1)
        from coverage_lab.oracle import FeatureLaw, LocationFamily, MeanFunction, NoiseModel, sample_location_family

        fam = LocationFamily(
            MeanFunction("linear", coef=(2.0,)), NoiseModel("gaussian", 1.0), FeatureLaw("uniform-box", dim=1)
        )
        truth = fam.mean
        sampler = lambda rng, m: fam.features.sample(rng, m)
        for rep in range(3):
            train = sample_location_family(fam, 2000, seed=100 + rep)
            model = fit_regressor("least-squares", train)
            est = estimate_consistency(model, truth, sampler, m=4000, seed=rep)
            assert est.value < 0.01
