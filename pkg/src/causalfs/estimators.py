"""scikit-learn style wrappers around the selection and regression functions.

Selectors are fitted on an :class:`~causalfs.series.EnsembleTimeSeries`
(the unit the discovery algorithms pool over) and transform an ensemble
into a :class:`~causalfs.series.SampleMatrix` restricted to the selected
lagged features. They support ``get_params``/``set_params`` and ``clone``.

>>> from causalfs.synth import confounder_scenario
>>> ens, truth, _ = confounder_scenario(seed=0, n_members=10)
>>> model = SelectedFeatureRegressor(PC1Selector("y", tau_min=8, tau_max=24))
>>> model.fit(ens).score(ens) > 0.2
True
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, clone
from sklearn.utils.validation import check_is_fitted

from ._validation import check_ensemble
from .discovery import DiscoveryConfig
from .regress import MultipleLinearRegression
from .selection import (
    select_all,
    select_causal,
    select_lagged_correlation,
    select_random,
)
from .series import SampleMatrix, build_lagged_samples, candidate_features


class _EnsembleSelector(BaseEstimator):
    def fit(self, ens, y=None):
        check_ensemble(ens)
        self.candidates_ = candidate_features(ens, self.tau_min, self.tau_max)
        self.selection_ = self._select(ens)
        self.features_ = list(self.selection_.features)
        self.n_features_in_ = len(self.candidates_)
        return self

    def get_support(self, indices=False):
        """Mask (or indices) of selected features over ``candidates_``."""
        check_is_fitted(self, "selection_")
        chosen = set(self.features_)
        mask = np.array([f in chosen for f in self.candidates_], dtype=bool)
        return np.flatnonzero(mask) if indices else mask

    def transform(self, X):
        """Samples of the selected features, from an ensemble or a full sample matrix."""
        check_is_fitted(self, "selection_")
        if isinstance(X, SampleMatrix):
            return X.select(self.features_)
        check_ensemble(X)
        return build_lagged_samples(X, self.target, self.tau_min, self.tau_max, self.features_)

    def fit_transform(self, ens, y=None):
        return self.fit(ens, y).transform(ens)


class PC1Selector(_EnsembleSelector):
    """Keep the PC1 parents of ``target``, most significant first."""

    def __init__(self, target, tau_min=8, tau_max=24, pc_alpha=0.02, max_cond_dim=None, n_jobs=1):
        self.target = target
        self.tau_min = tau_min
        self.tau_max = tau_max
        self.pc_alpha = pc_alpha
        self.max_cond_dim = max_cond_dim
        self.n_jobs = n_jobs

    def _config(self):
        return DiscoveryConfig(
            self.tau_min, self.tau_max, self.pc_alpha, max_cond_dim=self.max_cond_dim, method="PC1"
        )

    def _select(self, ens):
        return select_causal(ens, self.target, self._config(), n_jobs=self.n_jobs)


class PCMCISelector(PC1Selector):
    """Keep links that pass the MCI test at ``alpha_level``."""

    def __init__(
        self,
        target,
        tau_min=8,
        tau_max=24,
        pc_alpha=0.02,
        alpha_level=0.02,
        max_cond_dim=None,
        n_jobs=1,
    ):
        super().__init__(target, tau_min, tau_max, pc_alpha, max_cond_dim, n_jobs)
        self.alpha_level = alpha_level

    def _config(self):
        return DiscoveryConfig(
            self.tau_min,
            self.tau_max,
            self.pc_alpha,
            self.alpha_level,
            max_cond_dim=self.max_cond_dim,
            method="PCMCI",
        )


class LaggedCorrelationSelector(_EnsembleSelector):
    def __init__(self, target, top_k=10, tau_min=8, tau_max=24):
        self.target = target
        self.top_k = top_k
        self.tau_min = tau_min
        self.tau_max = tau_max

    def _select(self, ens):
        return select_lagged_correlation(ens, self.target, self.top_k, self.tau_min, self.tau_max)


class RandomSelector(_EnsembleSelector):
    def __init__(self, target, k=10, tau_min=8, tau_max=24, random_state=0):
        self.target = target
        self.k = k
        self.tau_min = tau_min
        self.tau_max = tau_max
        self.random_state = random_state

    def _select(self, ens):
        return select_random(ens, self.target, self.k, self.random_state, self.tau_min, self.tau_max)


class AllFeaturesSelector(_EnsembleSelector):
    """Every candidate; the no-selection baseline."""

    def __init__(self, target, tau_min=8, tau_max=24):
        self.target = target
        self.tau_min = tau_min
        self.tau_max = tau_max

    def _select(self, ens):
        return select_all(ens, self.target, self.tau_min, self.tau_max)


class SelectedFeatureRegressor(RegressorMixin, BaseEstimator):
    """Select lagged features on an ensemble, then regress the target on them.

    ``predict`` and ``score`` take an ensemble too; ``score`` is R2 against
    the ensemble's own target values.
    """

    def __init__(self, selector, regressor=None):
        self.selector = selector
        self.regressor = regressor

    def fit(self, ens, y=None):
        self.selector_ = clone(self.selector).fit(ens)
        samples = self.selector_.transform(ens)
        reg = self.regressor if self.regressor is not None else MultipleLinearRegression()
        self.regressor_ = clone(reg).fit(samples.X, samples.y)
        return self

    def predict(self, ens):
        check_is_fitted(self, "regressor_")
        return self.regressor_.predict(self.selector_.transform(ens).X)

    def score(self, ens, y=None, sample_weight=None):
        check_is_fitted(self, "regressor_")
        samples = self.selector_.transform(ens)
        return self.regressor_.score(samples.X, samples.y, sample_weight=sample_weight)
