import numpy as np
import pytest
from sklearn.base import clone

from coxstream import CovariateSpec, CoxIntensityModel, SimConfig, simulate
from coxstream.fitter import FitConfig, fit
from coxstream.events import window


@pytest.fixture(scope="module")
def log():
    config = SimConfig(
        n_nodes=40, horizon=80.0, seed=11, baseline_pos=0.03,
        baseline_neg=0.03, neutral_rate=0.02, p_edge=0.08, p_reciprocal=0.4,
    )
    return simulate(config).log


def test_fit_sets_attributes(log):
    model = CoxIntensityModel(sentiment="positive").fit(log)
    assert model.coef_.shape == (6,)
    assert model.standard_errors_.shape == (6,)
    assert model.conf_int_.shape == (6, 2)
    assert model.converged_
    assert model.feature_names_ == CovariateSpec.focal().names
    assert np.isfinite(model.loglik_)


def test_matches_functional_fit(log):
    model = CoxIntensityModel(sentiment="negative").fit(log)
    hist, ana = window(log, float("-inf"), float("inf"))
    result = fit(hist, ana, CovariateSpec.focal(), "negative", FitConfig())
    np.testing.assert_array_equal(model.coef_, result.beta)
    assert model.loglik_ == result.loglik


def test_get_params_set_params_clone(log):
    model = CoxIntensityModel(sentiment="positive", max_iter=50)
    params = model.get_params()
    assert params["sentiment"] == "positive"
    assert params["max_iter"] == 50
    model.set_params(sentiment="negative")
    assert model.sentiment == "negative"
    dup = clone(model)
    assert dup.get_params() == model.get_params()
    # clone never copies fitted state
    model.fit(log)
    assert not hasattr(clone(model), "coef_")


def test_window_days_param(log):
    span_days = (log.times[-1] - log.times[0]) / 86400.0
    model = CoxIntensityModel(window_days=span_days / 2.0).fit(log)
    assert model.result_.n_terms > 0
    full = CoxIntensityModel().fit(log)
    assert model.result_.n_terms < full.result_.n_terms


def test_predict_partial_hazard_positive(log):
    model = CoxIntensityModel().fit(log)
    hz = model.predict_partial_hazard(log)
    assert hz.shape == (log.n_nodes,)
    assert np.all(hz > 0)


def test_score_equals_training_loglik(log):
    model = CoxIntensityModel(sentiment="positive").fit(log)
    assert model.score(log) == pytest.approx(model.loglik_, rel=1e-9)


def test_baseline_hazard_accessor(log):
    model = CoxIntensityModel().fit(log)
    bh = model.baseline_hazard_()
    assert np.all(np.diff(bh.cumulative) >= -1e-15)
    assert bh(log.times[-1] + 1.0) == bh.cumulative[-1]


def test_accepts_path_input(tmp_path, log):
    from coxstream import write_log

    path = tmp_path / "events.log"
    write_log(log, path)
    model = CoxIntensityModel().fit(str(path))
    assert model.converged_


def test_unfitted_access_raises(log):
    model = CoxIntensityModel()
    with pytest.raises(AttributeError):
        model.predict_partial_hazard(log)


def test_bad_params_raise(log):
    with pytest.raises(ValueError):
        CoxIntensityModel(sentiment="weird").fit(log)
    with pytest.raises(ValueError):
        CoxIntensityModel(covariates="f1_pos,bogus").fit(log)
    with pytest.raises(ValueError):
        CoxIntensityModel(risk_set="nope").fit(log)


def test_standardize_flag_round_trip(log):
    model = CoxIntensityModel(standardize=True).fit(log)
    assert model.result_.standardized
    assert model.result_.scale is not None
    hz = model.predict_partial_hazard(log)
    assert np.all(np.isfinite(hz))
