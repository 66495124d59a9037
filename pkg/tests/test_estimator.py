import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.utils.estimator_checks import check_estimator

from clreg import CLRRegressor, FeatureProduct
from clreg.data import DegenerateTargetError, SimSpec, generate_sim


def test_sklearn_conformance():
    check_estimator(CLRRegressor(compute_exact=False))
    check_estimator(FeatureProduct())


def test_params_round_trip():
    est = CLRRegressor(features="squares", tol=1e-2)
    assert est.get_params()["features"] == "squares"
    assert clone(est).get_params() == est.get_params()


def test_fit_predict_sim3():
    ds = generate_sim(SimSpec.preset("SIM3", n_datasets=1, quantum=0.1, seed=1))[0]
    X, y = ds.observations.T, ds.target
    est = CLRRegressor().fit(X, y)
    assert est.coef_.shape == (9,)
    assert est.n_nonzero() >= 1 and est.coef_[0] == pytest.approx(5.0, abs=1.0)
    assert est.predict(X).shape == (20,)
    assert est.exact_bits_ is not None
    assert est.select_features(X).shape == (20, len(est.model_.active_features))
    assert est.score(X, y) > 0.5


def test_delta_y_estimated():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((30, 2))
    y = np.round(3 * X[:, 0], 1)
    est = CLRRegressor().fit(X, y)
    assert est.delta_y_ == pytest.approx(0.1)
    assert est.offset_ == y.min()


def test_constant_target_rejected():
    with pytest.raises(DegenerateTargetError):
        CLRRegressor().fit(np.random.default_rng(0).standard_normal((10, 2)), np.ones(10))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        CLRRegressor().predict(np.ones((2, 2)))


def test_feature_product_transform():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    fp = FeatureProduct("squares").fit(X)
    assert fp.transform(X).tolist() == [[1, 2, 1, 4, 1], [3, 4, 9, 16, 1]]
    assert list(fp.get_feature_names_out(["a", "b"])) == ["a", "b", "a^2", "b^2", "bias"]
    pairs = FeatureProduct("pairs", include_bias=False).fit(np.ones((2, 3)))
    assert pairs.transform(np.ones((2, 3))).shape == (2, 6)


def test_in_pipeline():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((40, 2))
    y = np.round(X[:, 0] ** 2 * 3 + 0.05 * rng.standard_normal(40), 2)
    pipe = make_pipeline(FeatureProduct("squares", include_bias=False), CLRRegressor(include_bias=True))
    pipe.fit(X, y)
    coef = pipe[-1].coef_
    assert coef[2] == pytest.approx(3.0, abs=0.3)
