"""Lagged causal parent discovery on pooled multidata samples.

Two algorithms are provided:

* PC1 (:func:`pc1_parents`): start from every lagged candidate and remove
  those independent of the target, first unconditionally, then given the
  ``k`` strongest surviving drivers for ``k = 1, 2, ...``. Only one
  conditioning set is tried per candidate and ``k``, unlike full PC.
* PCMCI (:func:`mci_step`): after PC1 has produced parents for the target
  and for every source variable, re-test all candidates conditioning on
  both the target's parents and the lag-shifted parents of the source.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import check_alpha, check_tau_range
from .citest import ci_test_many
from .exceptions import ConfigError, DiscoveryError
from .series import LaggedFeature, build_lagged_samples, candidate_features

logger = logging.getLogger(__name__)

METHODS = ("PC1", "PCMCI")


@dataclass(frozen=True)
class DiscoveryConfig:
    tau_min: int = 8
    tau_max: int = 24
    pc_alpha: float = 0.02
    alpha_level: float = 0.02
    max_cond_dim: int | None = None
    method: str = "PC1"

    def __post_init__(self):
        check_tau_range(self.tau_min, self.tau_max)
        check_alpha(self.pc_alpha, "pc_alpha")
        check_alpha(self.alpha_level, "alpha_level")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.max_cond_dim is not None and self.max_cond_dim < 0:
            raise ConfigError("max_cond_dim must be non-negative")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class Link:
    feature: LaggedFeature
    r: float
    p_value: float


@dataclass(frozen=True)
class ParentSet:
    """Discovered lagged parents of one target, most significant first."""

    target: str
    links: tuple
    config: DiscoveryConfig
    sample_count: int
    test_count: int = 0
    variable_names: tuple = ()

    @property
    def features(self):
        return [link.feature for link in self.links]

    def __len__(self):
        return len(self.links)

    def to_dict(self):
        return {
            "target": self.target,
            "config": self.config.to_dict(),
            "links": [
                {
                    "variable": self.variable_names[l.feature.variable_index],
                    "variable_index": l.feature.variable_index,
                    "lag": l.feature.lag,
                    "r": float(l.r),
                    "p": float(l.p_value),
                }
                for l in self.links
            ],
            "n": int(self.sample_count),
            "test_count": int(self.test_count),
            "variables": list(self.variable_names),
        }

    @classmethod
    def from_dict(cls, d):
        names = tuple(d.get("variables", ()))
        links = []
        for l in d["links"]:
            idx = l.get("variable_index")
            if idx is None:
                idx = names.index(l["variable"])
            links.append(Link(LaggedFeature(int(idx), int(l["lag"])), l["r"], l["p"]))
        return cls(
            target=d["target"],
            links=tuple(links),
            config=DiscoveryConfig.from_dict(d["config"]),
            sample_count=d["n"],
            test_count=d.get("test_count", 0),
            variable_names=names,
        )


def _strength_key(f, val_min, pval_max):
    return (-val_min[f], pval_max[f], f.variable_index, f.lag)


def _significance_order(links):
    return tuple(
        sorted(
            links,
            key=lambda l: (l.p_value, -abs(l.r), l.feature.variable_index, l.feature.lag),
        )
    )


def pc1_parents(data, config):
    """Run PC1 for ``data.target`` on a pooled :class:`SampleMatrix`.

    Candidates are the columns of ``data`` whose lag lies in
    ``[config.tau_min, config.tau_max]``. At iteration ``k`` each candidate
    is tested given the ``k`` strongest drivers of the previous iteration
    (itself excluded) and dropped when ``p > pc_alpha``. Strength is the
    smallest ``|r|`` a link has shown so far, then the largest p-value, then
    ``(variable_index, lag)``. Iteration ends once ``k`` reaches the number
    of surviving drivers. Surviving links report their minimum ``|r|``
    (signed as in the test that attained it) and maximum p-value.
    """
    lookup = data.column_index()
    parents = [f for f in data.columns if config.tau_min <= f.lag <= config.tau_max and f.lag >= 1]
    X, y = data.X, data.y
    n = data.n_samples
    val_min = {f: np.inf for f in parents}
    signed = {f: 0.0 for f in parents}
    pval_max = {f: -np.inf for f in parents}
    tests = 0
    k = 0
    while parents and len(parents) - 1 >= k:
        if config.max_cond_dim is not None and k > config.max_cond_dim:
            break
        if n - k - 2 < 1:
            raise DiscoveryError(
                f"target {data.target!r}: conditioning dimension k={k} needs more than "
                f"{k + 2} samples, have n={n}"
            )
        cond = parents[:k]
        rest = parents[k:]
        results = {}
        if rest:
            Z = X[:, [lookup[f] for f in cond]]
            r, p, _ = ci_test_many(X[:, [lookup[f] for f in rest]], y, Z, strict=False)
            results.update(zip(rest, zip(r, p)))
        extra = parents[k] if len(parents) > k else None
        for f in cond:
            zf = [g for g in cond if g != f] + [extra]
            Z = X[:, [lookup[g] for g in zf]]
            r, p, _ = ci_test_many(X[:, [lookup[f]]], y, Z, strict=False)
            results[f] = (r[0], p[0])
        tests += len(results)
        keep = []
        for f in parents:
            r, p = results[f]
            if abs(r) < val_min[f]:
                val_min[f] = abs(r)
                signed[f] = float(r)
            pval_max[f] = max(pval_max[f], float(p))
            if p <= config.pc_alpha:
                keep.append(f)
        parents = sorted(keep, key=lambda f: _strength_key(f, val_min, pval_max))
        k += 1
    links = [Link(f, signed[f], pval_max[f]) for f in parents]
    return ParentSet(
        target=data.target,
        links=_significance_order(links),
        config=config,
        sample_count=n,
        test_count=tests,
        variable_names=tuple(data.variable_names),
    )


def build_mci_samples(ens, target, config):
    """Samples for the MCI step: every predictor at lags ``tau_min..2*tau_max``.

    Lag-shifted source parents can reach ``2 * tau_max``, so rows start at
    that lag and each member contributes ``T_m - 2 * tau_max`` rows.
    """
    cols = candidate_features(ens, config.tau_min, 2 * config.tau_max)
    return build_lagged_samples(ens, target, config.tau_min, 2 * config.tau_max, cols)


def mci_step(samples, parent_sets, config):
    """Momentary conditional independence tests.

    ``samples`` maps each target to a :class:`SampleMatrix` holding at least
    the columns produced by :func:`build_mci_samples`; ``parent_sets`` maps
    every variable name (targets and candidate sources) to its PC1 parents.
    A candidate ``(i, tau)`` is kept when its test given the target's other
    parents and the parents of variable ``i`` shifted by ``tau`` has
    ``p <= alpha_level``.
    """
    out = {}
    for target, data in samples.items():
        if target not in parent_sets:
            raise ConfigError(f"no parent set for target {target!r}")
        lookup = data.column_index()
        names = data.variable_names
        pa_y = parent_sets[target].features
        candidates = [
            f for f in data.columns if config.tau_min <= f.lag <= config.tau_max
        ]
        links = []
        n = data.n_samples
        for f in candidates:
            src = names[f.variable_index]
            if src not in parent_sets:
                raise ConfigError(f"no parent set for source variable {src!r}")
            conds = [g for g in pa_y if g != f]
            conds += [g.shifted(f.lag) for g in parent_sets[src].features]
            conds = sorted(set(conds) - {f})
            missing = [g for g in conds if g not in lookup]
            if missing:
                raise ConfigError(
                    f"MCI samples for {target!r} lack conditioning columns {missing[:3]}; "
                    "build them with build_mci_samples"
                )
            if n - len(conds) - 2 < 1:
                raise DiscoveryError(
                    f"target {target!r}: MCI conditioning dimension {len(conds)} needs "
                    f"more than {len(conds) + 2} samples, have n={n}"
                )
            Z = data.X[:, [lookup[g] for g in conds]]
            r, p, _ = ci_test_many(data.X[:, [lookup[f]]], data.y, Z, strict=False)
            if p[0] <= config.alpha_level:
                links.append(Link(f, float(r[0]), float(p[0])))
        out[target] = ParentSet(
            target=target,
            links=_significance_order(links),
            config=config,
            sample_count=n,
            test_count=len(candidates),
            variable_names=tuple(names),
        )
    return out


def _map(fn, items, n_jobs):
    items = list(items)
    if n_jobs is None or n_jobs == 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


def discover(ens, targets, config, n_jobs=1):
    """Parent sets for each target in ``targets`` (PC1 or PCMCI per ``config.method``).

    Results do not depend on ``n_jobs``: work items are independent and
    collected in input order.
    """
    targets = list(targets)
    for t in targets:
        ens.index(t)
    t0 = time.perf_counter()

    def pc1_for(name):
        data = build_lagged_samples(ens, name, config.tau_min, config.tau_max)
        return pc1_parents(data, config)

    if config.method == "PC1":
        result = dict(zip(targets, _map(pc1_for, targets, n_jobs)))
    else:
        sources = [ens.variables[i].name for i in ens.predictor_indices]
        needed = list(dict.fromkeys(targets + sources))
        pc1 = dict(zip(needed, _map(pc1_for, needed, n_jobs)))

        def mci_for(name):
            return mci_step({name: build_mci_samples(ens, name, config)}, pc1, config)[name]

        result = dict(zip(targets, _map(mci_for, targets, n_jobs)))
    logger.info(
        "discovery finished",
        extra={
            "event": "discover",
            "method": config.method,
            "targets": targets,
            "tests": sum(p.test_count for p in result.values()),
            "wall_time": time.perf_counter() - t0,
        },
    )
    return result
