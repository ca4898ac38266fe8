import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.linear_model import Ridge

from causalfs.discovery import DiscoveryConfig
from causalfs.estimators import (
    AllFeaturesSelector,
    LaggedCorrelationSelector,
    PC1Selector,
    PCMCISelector,
    RandomSelector,
    SelectedFeatureRegressor,
)
from causalfs.regress import evaluate, fit_mlr, predict
from causalfs.selection import select_causal, select_lagged_correlation, select_random
from causalfs.series import build_lagged_samples
from causalfs.synth import confounder_scenario

from .conftest import make_ensemble


@pytest.fixture(scope="module")
def confounder():
    ens, _, _ = confounder_scenario(seed=3, n_members=20)
    return ens


def test_clone_and_params():
    sel = PCMCISelector("y", tau_min=2, tau_max=5, alpha_level=0.01)
    c = clone(sel)
    assert c.get_params() == sel.get_params()
    assert c.set_params(pc_alpha=0.1).pc_alpha == 0.1
    reg = SelectedFeatureRegressor(sel)
    assert reg.get_params()["selector__alpha_level"] == 0.01


def test_not_fitted():
    with pytest.raises(NotFittedError):
        PC1Selector("y").get_support()


def test_rejects_non_ensemble():
    with pytest.raises(TypeError):
        PC1Selector("y").fit(np.zeros((10, 3)))


def test_pc1_matches_functional(confounder):
    sel = PC1Selector("y").fit(confounder)
    assert sel.selection_ == select_causal(confounder, "y", DiscoveryConfig())
    mask = sel.get_support()
    assert mask.shape == (sel.n_features_in_,) and mask.sum() == len(sel.features_)
    idx = sel.get_support(indices=True)
    assert {sel.candidates_[i] for i in idx} == set(sel.features_)


def test_pcmci_matches_functional(confounder):
    sel = PCMCISelector("y", alpha_level=0.01).fit(confounder)
    ref = select_causal(confounder, "y", DiscoveryConfig(alpha_level=0.01, method="PCMCI"))
    assert sel.selection_ == ref


def test_baseline_selectors_match_functional(confounder):
    lc = LaggedCorrelationSelector("y", top_k=5).fit(confounder)
    assert lc.selection_ == select_lagged_correlation(confounder, "y", 5, 8, 24)
    rs = RandomSelector("y", k=4, random_state=7).fit(confounder)
    assert rs.selection_.features == select_random(confounder, "y", 4, 7, 8, 24).features
    al = AllFeaturesSelector("y").fit(confounder)
    assert al.get_support().all()


def test_transform_ensemble_and_matrix():
    ens = make_ensemble([50] * 4, seed=2)
    sel = LaggedCorrelationSelector("y", top_k=3, tau_min=1, tau_max=4)
    out = sel.fit_transform(ens)
    full = build_lagged_samples(ens, "y", 1, 4)
    via_matrix = sel.transform(full)
    np.testing.assert_array_equal(out.X, via_matrix.X)
    np.testing.assert_array_equal(out.y, full.y)
    assert list(out.columns) == sel.features_


def test_regressor_matches_functional(confounder):
    model = SelectedFeatureRegressor(PC1Selector("y")).fit(confounder)
    s = build_lagged_samples(confounder, "y", 8, 24, model.selector_.features_)
    ref = fit_mlr(s)
    np.testing.assert_allclose(model.predict(confounder), predict(ref, s), rtol=0, atol=1e-12)
    assert model.score(confounder) == pytest.approx(evaluate(ref, s).r2)


def test_regressor_accepts_sklearn_model(confounder):
    model = SelectedFeatureRegressor(LaggedCorrelationSelector("y", top_k=5), Ridge(alpha=1e-8))
    base = SelectedFeatureRegressor(LaggedCorrelationSelector("y", top_k=5)).fit(confounder)
    model.fit(confounder)
    assert model.score(confounder) == pytest.approx(base.score(confounder), abs=1e-6)
    # the unfitted template is untouched
    assert not hasattr(model.selector, "selection_")
