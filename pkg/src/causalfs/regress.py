"""Multiple linear regression on selected lagged features, plus metrics.

Features are standard-scaled with statistics from the training samples;
targets stay in their original units.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import ConfigError, ContractError, UnderdeterminedError
from .series import LaggedFeature, SampleMatrix, ScalerParams, apply_scaler, fit_scaler

SPLITS = ("train", "val", "test")


class RankDeficiencyWarning(UserWarning):
    """Design matrix is rank deficient; the minimum-norm solution was used."""


def _lstsq(Z, y):
    """Least squares for ``[1, Z] @ [b0, b] = y`` via SVD (minimum norm)."""
    D = np.hstack([np.ones((Z.shape[0], 1)), Z])
    coef, _, rank, _ = linalg.lstsq(D, y, lapack_driver="gelsd")
    if rank < D.shape[1]:
        warnings.warn(
            f"design matrix has rank {rank} < {D.shape[1]} columns; "
            "using the minimum-norm solution",
            RankDeficiencyWarning,
            stacklevel=3,
        )
    return float(coef[0]), coef[1:]


class MultipleLinearRegression(RegressorMixin, BaseEstimator):
    """Ordinary least squares on standard-scaled inputs.

    Parameters
    ----------
    scale : bool, default=True
        Standard-scale inputs with training mean and population std before
        fitting. Predictions are the same either way for full-rank designs;
        coefficients are reported in scaled units when ``scale=True``.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    intercept_ : float
    scaler_ : ScalerParams or None
    """

    def __init__(self, scale=True):
        self.scale = scale

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        n, p = X.shape
        if n <= p:
            raise UnderdeterminedError(
                f"{n} samples for {p} features; select fewer features than samples"
            )
        self.scaler_ = fit_scaler(X) if self.scale else None
        Z = apply_scaler(X, self.scaler_) if self.scale else X
        self.intercept_, self.coef_ = _lstsq(Z, y)
        self.n_features_in_ = p
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ContractError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        Z = apply_scaler(X, self.scaler_) if self.scaler_ is not None else X
        return Z @ self.coef_ + self.intercept_


@dataclass(frozen=True)
class LinearModel:
    """Fitted coefficients on scaled features: ``y_hat = z @ coefficients + intercept``."""

    coefficients: np.ndarray
    intercept: float
    scaler: ScalerParams
    features: tuple
    target: str = ""
    variable_names: tuple = ()

    def __post_init__(self):
        if len(self.features) != len(self.coefficients):
            raise ContractError("one coefficient per feature required")

    def raw_coefficients(self):
        """Slope and intercept in the original feature units."""
        d = self.scaler.degenerate
        std = np.where(d, 1.0, self.scaler.std)
        mean = np.where(d, 0.0, self.scaler.mean)
        beta = self.coefficients / std
        return beta, self.intercept - float(beta @ mean)

    def to_dict(self):
        return {
            "target": self.target,
            "features": [
                {"variable": self.variable_names[f.variable_index], "variable_index": f.variable_index, "lag": f.lag}
                for f in self.features
            ],
            "beta": [float(b) for b in self.coefficients],
            "intercept": float(self.intercept),
            "scaler": {
                "mean": [float(v) for v in self.scaler.mean],
                "std": [float(v) for v in self.scaler.std],
                "degenerate": [bool(v) for v in self.scaler.degenerate],
            },
            "variables": list(self.variable_names),
        }

    @classmethod
    def from_dict(cls, d):
        s = d["scaler"]
        return cls(
            coefficients=np.asarray(d["beta"], dtype=float),
            intercept=float(d["intercept"]),
            scaler=ScalerParams(
                np.asarray(s["mean"], dtype=float),
                np.asarray(s["std"], dtype=float),
                np.asarray(s["degenerate"], dtype=bool),
            ),
            features=tuple(LaggedFeature(f["variable_index"], f["lag"]) for f in d["features"]),
            target=d.get("target", ""),
            variable_names=tuple(d.get("variables", ())),
        )


@dataclass(frozen=True)
class MetricReport:
    r2: float
    mse: float
    mae: float
    n: int
    split: str = "train"

    def to_dict(self):
        return {"split": self.split, "r2": self.r2, "mse": self.mse, "mae": self.mae, "n": self.n}


def fit_mlr(samples):
    """Fit OLS on ``samples`` (already restricted to the selected features)."""
    est = MultipleLinearRegression().fit(samples.X, samples.y)
    return LinearModel(
        coefficients=est.coef_,
        intercept=est.intercept_,
        scaler=est.scaler_,
        features=tuple(samples.columns),
        target=samples.target,
        variable_names=tuple(samples.variable_names),
    )


def _aligned_matrix(model, samples):
    if isinstance(samples, SampleMatrix):
        have, want = set(samples.columns), set(model.features)
        if have != want:
            missing = sorted(want - have)
            extra = sorted(have - want)
            raise ContractError(f"feature mismatch: missing {missing}, extra {extra}")
        return samples.select(model.features).X
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(model.features):
        raise ContractError(f"expected {len(model.features)} feature columns, got shape {X.shape}")
    return X


def predict(model, samples):
    X = _aligned_matrix(model, samples)
    return apply_scaler(X, model.scaler) @ model.coefficients + model.intercept


def metrics(y_true, y_pred, split="train"):
    """R2 (centered on the mean of ``y_true``), MSE and MAE."""
    if split not in SPLITS:
        raise ConfigError(f"split must be one of {SPLITS}")
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    resid = y_true - y_pred
    ss_res = float(resid @ resid)
    dev = y_true - y_true.mean()
    ss_tot = float(dev @ dev)
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res == 0 else 0.0
    n = len(y_true)
    return MetricReport(r2=r2, mse=ss_res / n, mae=float(np.abs(resid).mean()), n=n, split=split)


def evaluate(model, samples, split="train"):
    return metrics(samples.y, predict(model, samples), split)


def write_predictions(path, model, samples):
    """CSV of ``member, t, y_true, y_pred`` for every sample row."""
    y_pred = predict(model, samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["member", "t", "y_true", "y_pred"])
        for m, t, yt, yp in zip(samples.source_member, samples.time, samples.y, y_pred):
            w.writerow([samples.member_ids[m], int(t), repr(float(yt)), repr(float(yp))])
    return y_pred
