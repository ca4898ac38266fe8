"""Feature selection strategies over the lagged candidate set.

All strategies draw from :func:`causalfs.series.candidate_features` for the
same ``(tau_min, tau_max)`` window, so their outputs are comparable:

* causal (PC1 or PCMCI parents), ordered by significance;
* lagged absolute Pearson correlation, ordered by ``|corr|``;
* uniform random, in draw order.
"""

from __future__ import annotations

import csv
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_grid, check_positive_int
from .exceptions import ConfigError
from .discovery import DiscoveryConfig, discover
from .regress import evaluate, fit_mlr
from .series import LaggedFeature, build_lagged_samples, candidate_features

METHODS = ("causal_pc1", "causal_pcmci", "lagged_corr", "random", "all")

DEFAULT_GRID = tuple(float(a) for a in np.logspace(-4, -1, 8))


class ClampWarning(UserWarning):
    """Requested more features than there are candidates."""


@dataclass(frozen=True)
class FeatureSelection:
    method: str
    features: tuple
    target: str
    variable_names: tuple
    params: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    scores: tuple = ()

    def __len__(self):
        return len(self.features)

    def feature_names(self):
        return [f"{self.variable_names[f.variable_index]}_lag{f.lag}" for f in self.features]

    def to_dict(self):
        return {
            "method": self.method,
            "target": self.target,
            "features": [
                {"variable": self.variable_names[f.variable_index], "variable_index": f.variable_index, "lag": f.lag}
                for f in self.features
            ],
            "scores": [float(s) for s in self.scores],
            "params": self.params,
            "provenance": self.provenance,
            "variables": list(self.variable_names),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            method=d["method"],
            features=tuple(LaggedFeature(f["variable_index"], f["lag"]) for f in d["features"]),
            target=d["target"],
            variable_names=tuple(d.get("variables", ())),
            params=d.get("params", {}),
            provenance=d.get("provenance", {}),
            scores=tuple(d.get("scores", ())),
        )


def _clamp(k, available, name):
    k = check_positive_int(k, name)
    if k > available:
        warnings.warn(f"{name}={k} exceeds {available} candidates; clamped", ClampWarning, stacklevel=3)
        return available
    return k


def select_causal(ens, target, config, n_jobs=1, run_id=""):
    """Parents of ``target`` found by PC1 or PCMCI on the pooled ensemble."""
    ps = discover(ens, [target], config, n_jobs=n_jobs)[target]
    method = "causal_pc1" if config.method == "PC1" else "causal_pcmci"
    return FeatureSelection(
        method=method,
        features=tuple(ps.features),
        target=target,
        variable_names=tuple(ens.names),
        params=config.to_dict(),
        provenance={"run_id": run_id, "seed": None},
        scores=tuple(l.p_value for l in ps.links),
    )


def lagged_correlations(samples):
    """``|corr|`` of every column with ``y``; constant columns score 0."""
    X = samples.X - samples.X.mean(axis=0)
    y = samples.y - samples.y.mean()
    denom = np.sqrt((X * X).sum(axis=0) * (y @ y))
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.abs(X.T @ y) / denom
    return np.nan_to_num(np.minimum(c, 1.0), nan=0.0)


def select_lagged_correlation(ens, target, top_k, tau_min, tau_max, run_id=""):
    """The ``top_k`` candidates with the largest ``|corr|`` with the target."""
    samples = build_lagged_samples(ens, target, tau_min, tau_max)
    k = _clamp(top_k, samples.n_features, "top_k")
    corr = lagged_correlations(samples)
    order = sorted(
        range(samples.n_features),
        key=lambda j: (-corr[j], samples.columns[j].variable_index, samples.columns[j].lag),
    )[:k]
    return FeatureSelection(
        method="lagged_corr",
        features=tuple(samples.columns[j] for j in order),
        target=target,
        variable_names=tuple(ens.names),
        params={"top_k": k, "tau_min": tau_min, "tau_max": tau_max},
        provenance={"run_id": run_id, "seed": None},
        scores=tuple(float(corr[j]) for j in order),
    )


def select_random(ens, target, k, seed, tau_min, tau_max, run_id=""):
    """``k`` candidates drawn uniformly without replacement."""
    ens.index(target)
    cands = candidate_features(ens, tau_min, tau_max)
    k = _clamp(k, len(cands), "k")
    idx = np.random.default_rng(seed).choice(len(cands), size=k, replace=False)
    return FeatureSelection(
        method="random",
        features=tuple(cands[i] for i in idx),
        target=target,
        variable_names=tuple(ens.names),
        params={"k": k, "tau_min": tau_min, "tau_max": tau_max},
        provenance={"run_id": run_id, "seed": seed},
    )


def select_all(ens, target, tau_min, tau_max, run_id=""):
    """No selection: every candidate."""
    ens.index(target)
    return FeatureSelection(
        method="all",
        features=tuple(candidate_features(ens, tau_min, tau_max)),
        target=target,
        variable_names=tuple(ens.names),
        params={"tau_min": tau_min, "tau_max": tau_max},
        provenance={"run_id": run_id, "seed": None},
    )


def fit_and_score(selection, ens_train, ens_eval=(), tau_max=None):
    """Fit MLR on the selected features of ``ens_train`` and score each split.

    ``ens_eval`` is a sequence of ``(split_name, ensemble)``. Rows are built
    with the selection's own lag window so all methods see the same samples.
    Returns ``(model, [MetricReport, ...])`` starting with the train report.
    """
    tau_min = selection.params.get("tau_min", 1)
    tau_max = tau_max or selection.params.get("tau_max") or max(f.lag for f in selection.features)
    feats = list(selection.features)
    train = build_lagged_samples(ens_train, selection.target, tau_min, tau_max, feats)
    model = fit_mlr(train)
    reports = [evaluate(model, train, "train")]
    for split, ens in ens_eval:
        s = build_lagged_samples(ens, selection.target, tau_min, tau_max, feats)
        reports.append(evaluate(model, s, split))
    return model, reports


@dataclass(frozen=True)
class SweepPoint:
    pc_alpha: float | None
    alpha_level: float | None
    n_features: int
    r2_train: float | None
    r2_val: float | None
    selection: FeatureSelection
    top_k: int | None = None

    def to_dict(self):
        return {
            "pc_alpha": self.pc_alpha,
            "alpha_level": self.alpha_level,
            "top_k": self.top_k,
            "n_features": self.n_features,
            "r2_train": self.r2_train,
            "r2_val": self.r2_val,
            "features": self.selection.feature_names(),
        }


@dataclass(frozen=True)
class SweepReport:
    target: str
    method: str
    points: tuple
    best_index: int | None

    @property
    def best(self):
        return None if self.best_index is None else self.points[self.best_index]

    def to_dict(self):
        return {
            "target": self.target,
            "method": self.method,
            "best_index": self.best_index,
            "points": [p.to_dict() for p in self.points],
        }

    def rows(self):
        """``(pc_alpha, alpha_level, top_k, n_features, r2_train, r2_val, is_best)`` per point."""
        return [
            (p.pc_alpha, p.alpha_level, p.top_k, p.n_features, p.r2_train, p.r2_val, i == self.best_index)
            for i, p in enumerate(self.points)
        ]

    def near_best(self, rel_tol=0.01):
        """Selections whose validation R2 is within ``rel_tol`` (relative) of the best."""
        if self.best is None:
            return []
        best = self.best.r2_val
        cut = best - rel_tol * abs(best)
        return [p.selection for p in self.points if p.r2_val is not None and p.r2_val >= cut]


def _map(fn, items, n_jobs):
    if n_jobs is None or n_jobs == 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


def _score_point(sel, ens_train, ens_val, tau_max):
    if not len(sel):
        return None, None
    _, reps = fit_and_score(sel, ens_train, [("val", ens_val)], tau_max=tau_max)
    return reps[0].r2, reps[1].r2


def _best_index(points):
    scored = [i for i, p in enumerate(points) if p.r2_val is not None]
    if not scored:
        return None
    return min(scored, key=lambda i: (-points[i].r2_val, points[i].n_features, i))


def sweep_pc_alpha(
    ens_train,
    ens_val,
    target,
    grid=DEFAULT_GRID,
    config=None,
    alpha_level_grid=None,
    max_points=None,
    n_jobs=1,
):
    """Select causally on ``ens_train`` for each grid value, fit MLR, score on val.

    For PCMCI an ``alpha_level_grid`` gives the cross product of both
    thresholds, truncated to ``max_points``. Points that select nothing get
    ``None`` metrics. The best point maximizes validation R2; ties go to the
    point with fewer features, then the earlier grid point. Grid points run
    on ``n_jobs`` threads and are collected in grid order.
    """
    config = config or DiscoveryConfig()
    grid = check_grid(grid)
    if alpha_level_grid is not None and config.method == "PCMCI":
        pairs = [(a, b) for a in grid for b in check_grid(alpha_level_grid, "alpha_level_grid")]
    else:
        pairs = [(a, config.alpha_level) for a in grid]
    if max_points is not None:
        pairs = pairs[: check_positive_int(max_points, "max_points")]

    def run(pair):
        pc_alpha, alpha_level = pair
        cfg = replace(config, pc_alpha=pc_alpha, alpha_level=alpha_level)
        if config.method == "PC1":
            # PC1 never reads alpha_level; do not report one
            alpha_level = None
        sel = select_causal(ens_train, target, cfg)
        r2_train, r2_val = _score_point(sel, ens_train, ens_val, cfg.tau_max)
        return SweepPoint(pc_alpha, alpha_level, len(sel), r2_train, r2_val, sel)

    points = _map(run, pairs, n_jobs)
    return SweepReport(target, config.method, tuple(points), _best_index(points))


def sweep_top_k(ens_train, ens_val, target, ks, tau_min, tau_max, n_jobs=1):
    """The lagged-correlation counterpart of :func:`sweep_pc_alpha`, over ``top_k``."""
    ks = [check_positive_int(k, "top_k") for k in ks]
    if not ks:
        raise ConfigError("ks must be non-empty")
    samples = build_lagged_samples(ens_train, target, tau_min, tau_max)
    ks = sorted(set(min(k, samples.n_features) for k in ks))

    def run(k):
        sel = select_lagged_correlation(ens_train, target, k, tau_min, tau_max)
        r2_train, r2_val = _score_point(sel, ens_train, ens_val, tau_max)
        return SweepPoint(None, None, len(sel), r2_train, r2_val, sel, top_k=k)

    points = _map(run, ks, n_jobs)
    return SweepReport(target, "lagged_corr", tuple(points), _best_index(points))


@dataclass(frozen=True)
class FrequencyReport:
    by_feature: tuple
    by_variable: tuple
    by_lag: tuple
    n_selections: int

    def to_dict(self):
        return {
            "n_selections": self.n_selections,
            "by_feature": [{"feature": f, "count": c} for f, c in self.by_feature],
            "by_variable": [{"variable": v, "count": c} for v, c in self.by_variable],
            "by_lag": [{"lag": l, "count": c} for l, c in self.by_lag],
        }

    def write_csv(self, directory, prefix="frequency"):
        paths = []
        for name, header, rows in (
            ("variable", ("variable", "count"), self.by_variable),
            ("lag", ("lag", "count"), self.by_lag),
            ("feature", ("feature", "count"), self.by_feature),
        ):
            path = f"{directory}/{prefix}_{name}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows(rows)
            paths.append(path)
        return paths


def _sorted_counts(counter):
    return tuple(sorted(counter.items(), key=lambda kv: (-kv[1], kv[0])))


def selection_frequency(selections):
    """How often each feature, variable and lag appears across ``selections``."""
    selections = list(selections)
    if not selections:
        raise ValueError("selection_frequency needs at least one selection")
    feats, variables, lags = Counter(), Counter(), Counter()
    for sel in selections:
        for f in sel.features:
            name = sel.variable_names[f.variable_index]
            feats[f"{name}_lag{f.lag}"] += 1
            variables[name] += 1
            lags[f.lag] += 1
    return FrequencyReport(
        by_feature=_sorted_counts(feats),
        by_variable=_sorted_counts(variables),
        by_lag=_sorted_counts(lags),
        n_selections=len(selections),
    )

