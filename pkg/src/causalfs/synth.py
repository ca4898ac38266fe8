"""Synthetic ensembles of linear-Gaussian lagged systems with known parents.

Every member of an ensemble is simulated from the same causal graph, with
its own noise stream and optionally jittered edge coefficients.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .discovery import ParentSet
from .exceptions import ConfigError, GenerationError
from .series import EnsembleTimeSeries, LaggedFeature, VariableMeta


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    lag: int
    coefficient: float

    def __post_init__(self):
        if self.lag < 1:
            raise ConfigError(f"edge lags must be >= 1, got {self.lag}")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a lagged linear structural system and its ensemble.

    ``autocorr[i]`` adds an AR(1) term to variable ``i``; ``member_jitter``
    is the standard deviation of Gaussian noise added to every edge
    coefficient, drawn independently per member.
    """

    n_vars: int
    edges: tuple = ()
    noise_std: tuple = None
    autocorr: tuple = None
    n_members: int = 10
    length: int = 100
    seed: int = 0
    member_jitter: float = 0.0
    names: tuple = None
    roles: tuple = None

    def __post_init__(self):
        edges = tuple(e if isinstance(e, Edge) else Edge(**e) if isinstance(e, dict) else Edge(*e) for e in self.edges)
        for e in edges:
            if not (0 <= e.source < self.n_vars and 0 <= e.target < self.n_vars):
                raise ConfigError(f"edge {e} refers to an unknown variable")
        object.__setattr__(self, "edges", edges)
        noise = self.noise_std if self.noise_std is not None else (1.0,) * self.n_vars
        auto = self.autocorr if self.autocorr is not None else (0.0,) * self.n_vars
        names = self.names if self.names is not None else tuple(f"x{i}" for i in range(self.n_vars))
        roles = self.roles if self.roles is not None else ("both",) * self.n_vars
        for label, seq in (("noise_std", noise), ("autocorr", auto), ("names", names), ("roles", roles)):
            if len(seq) != self.n_vars:
                raise ConfigError(f"{label} must have n_vars={self.n_vars} entries")
        if any(abs(a) >= 1 for a in auto):
            raise ConfigError("autocorr coefficients must lie in (-1, 1)")
        if self.member_jitter < 0:
            raise ConfigError("member_jitter must be non-negative")
        object.__setattr__(self, "noise_std", tuple(float(s) for s in noise))
        object.__setattr__(self, "autocorr", tuple(float(a) for a in auto))
        object.__setattr__(self, "names", tuple(names))
        object.__setattr__(self, "roles", tuple(roles))

    @property
    def max_lag(self):
        lags = [e.lag for e in self.edges]
        if any(self.autocorr):
            lags.append(1)
        return max(lags, default=1)

    def to_dict(self):
        d = asdict(self)
        d["edges"] = [asdict(e) for e in self.edges]
        for k in ("noise_std", "autocorr", "names", "roles"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def lag_matrices(spec, coefficients=None):
    """``(L, N, N)`` array with ``A[l-1, target, source]`` the lag-``l`` coefficient."""
    coefs = [e.coefficient for e in spec.edges] if coefficients is None else coefficients
    A = np.zeros((spec.max_lag, spec.n_vars, spec.n_vars))
    for e, c in zip(spec.edges, coefs):
        A[e.lag - 1, e.target, e.source] += c
    A[0] += np.diag(spec.autocorr)
    return A


def spectral_radius(A):
    L, N, _ = A.shape
    comp = np.zeros((L * N, L * N))
    comp[:N, :] = np.hstack(list(A))
    comp[N:, :-N] = np.eye((L - 1) * N)
    return float(np.max(np.abs(np.linalg.eigvals(comp)))) if comp.size else 0.0


def ground_truth(spec):
    """Map of variable name to its set of lagged parents."""
    truth = {name: set() for name in spec.names}
    for e in spec.edges:
        truth[spec.names[e.target]].add(LaggedFeature(e.source, e.lag))
    for i, a in enumerate(spec.autocorr):
        if a != 0:
            truth[spec.names[i]].add(LaggedFeature(i, 1))
    return truth


def _simulate(A, noise_std, length, burn, rng):
    L, N, _ = A.shape
    total = burn + length
    eps = rng.standard_normal((total, N)) * noise_std
    x = np.zeros((total + L, N))
    # lag-major flattening: row block l holds x[t-1-l]
    flat = np.hstack(list(A))
    for t in range(total):
        x[t + L] = flat @ x[t : t + L][::-1].reshape(-1) + eps[t]
    return x[L + burn :]


def generate(spec):
    """Simulate ``spec.n_members`` members; returns ``(ensemble, ground_truth)``.

    Member ``m`` draws from its own ``SeedSequence`` child of ``spec.seed``,
    so results do not depend on evaluation order. A burn-in of
    ``10 * max_lag`` steps is discarded.
    """
    if spec.length <= 10 * spec.max_lag:
        raise GenerationError(
            f"length {spec.length} must exceed 10 x max lag = {10 * spec.max_lag}"
        )
    base = lag_matrices(spec)
    rho = spectral_radius(base)
    if rho >= 1:
        raise GenerationError(f"unstable system: spectral radius {rho:.4f} >= 1")
    burn = 10 * spec.max_lag
    noise = np.asarray(spec.noise_std)
    members = []
    for m, child in enumerate(np.random.SeedSequence(spec.seed).spawn(spec.n_members)):
        rng = np.random.default_rng(child)
        A = base
        if spec.member_jitter > 0 and spec.edges:
            coefs = np.array([e.coefficient for e in spec.edges])
            coefs = coefs + spec.member_jitter * rng.standard_normal(len(coefs))
            A = lag_matrices(spec, coefs)
            rho_m = spectral_radius(A)
            if rho_m >= 1:
                raise GenerationError(
                    f"member {m}: jittered system unstable, spectral radius {rho_m:.4f}"
                )
        members.append(_simulate(A, noise, spec.length, burn, rng))
    variables = [VariableMeta(n, r) for n, r in zip(spec.names, spec.roles)]
    width = len(str(spec.n_members - 1))
    ids = [f"m{i:0{width}d}" for i in range(spec.n_members)]
    return EnsembleTimeSeries(members, variables, ids), ground_truth(spec)


def random_lagged_dag(
    n_vars=10,
    n_parents=3,
    n_roots=None,
    lag_range=(1, 3),
    coef_range=(0.4, 0.6),
    seed=0,
    **kwargs,
):
    """Spec for a random lagged DAG where every non-root variable has exactly
    ``n_parents`` parents among the variables before it in a random order.

    Coefficients have random sign and magnitude in ``coef_range``. Without
    autocorrelation the companion matrix is nilpotent, so the system is
    always stable. Returns ``(spec, targets)``.
    """
    rng = np.random.default_rng(seed)
    n_roots = n_parents if n_roots is None else n_roots
    if n_roots < n_parents:
        raise ConfigError("need at least n_parents root variables")
    order = rng.permutation(n_vars)
    edges = []
    for pos in range(n_roots, n_vars):
        tgt = int(order[pos])
        for src in rng.choice(order[:pos], size=n_parents, replace=False):
            lag = int(rng.integers(lag_range[0], lag_range[1] + 1))
            c = float(rng.uniform(*coef_range) * rng.choice([-1.0, 1.0]))
            edges.append(Edge(int(src), tgt, lag, c))
    targets = [f"x{int(i)}" for i in sorted(order[n_roots:])]
    return SyntheticSpec(n_vars=n_vars, edges=tuple(edges), seed=seed, **kwargs), targets


CONFOUNDER_NAMES = ("d", "w", "u", "v")


def confounder_spec(
    seed=0, n_members=50, length=250, n_noise=3, weak_coefs=(), member_jitter=0.0
):
    """Spec of the confounder benchmark.

    ``d`` (white noise) drives ``w`` at lag 8 and ``y`` at lag 16, so
    ``w_{t-8}`` correlates with ``y_t`` only through ``d_{t-16}``. ``u``
    and ``v`` are weaker autocorrelated parents of ``y`` at lags 10 and 20.
    Each entry of ``weak_coefs`` adds one more AR(1) parent ``p<i>`` at lag
    ``12 + 2 i`` with that coefficient, and ``n_noise`` AR(1) variables
    ``z<i>`` are unrelated to everything.
    """
    weak = tuple(f"p{i}" for i in range(len(weak_coefs)))
    names = CONFOUNDER_NAMES + weak + tuple(f"z{i}" for i in range(n_noise)) + ("y",)
    idx = {n: i for i, n in enumerate(names)}
    edges = [
        Edge(idx["d"], idx["w"], 8, 0.8),
        Edge(idx["d"], idx["y"], 16, 0.6),
        Edge(idx["u"], idx["y"], 10, 0.3),
        Edge(idx["v"], idx["y"], 20, 0.2),
    ]
    edges += [Edge(idx[p], idx["y"], 12 + 2 * i, c) for i, (p, c) in enumerate(zip(weak, weak_coefs))]
    autocorr = (0.0, 0.0) + (0.5,) * (len(names) - 3) + (0.0,)
    roles = ("predictor",) * (len(names) - 1) + ("target",)
    return SyntheticSpec(
        n_vars=len(names),
        edges=tuple(edges),
        autocorr=autocorr,
        n_members=n_members,
        length=length,
        seed=seed,
        member_jitter=member_jitter,
        names=names,
        roles=roles,
    )


def confounder_scenario(seed=0, **kwargs):
    """Returns ``(ensemble, truth, spurious)`` for target ``y``.

    ``truth`` is ``{(d, 16), (u, 10), (v, 20)}``; ``spurious`` is
    ``{(w, 8)}``, which correlates with ``y`` but is independent of it given
    ``d_{t-16}``.
    """
    spec = confounder_spec(seed=seed, **kwargs)
    ens, truth = generate(spec)
    spurious = {LaggedFeature(spec.names.index("w"), 8)}
    return ens, truth["y"], spurious


@dataclass(frozen=True)
class RecoveryScore:
    precision: float
    recall: float
    f1: float
    true_positive: int
    false_positive: int
    false_negative: int
    precision_defined: bool = True
    recall_defined: bool = True


def score_recovery(found, truth, lag_tolerance=0):
    """Precision/recall of ``found`` parents against ``truth`` at (variable, lag) level.

    With ``lag_tolerance > 0`` a found feature matches a true one of the same
    variable within that many steps; each true feature is matched at most
    once (closest lag first). An empty ``found`` gets precision 1 and
    ``precision_defined=False``; an empty ``truth`` likewise for recall.
    """
    feats = found.features if isinstance(found, ParentSet) else list(found)
    feats = sorted(set(feats))
    remaining = set(truth)
    tp = 0
    for f in feats:
        cands = [
            t
            for t in remaining
            if t.variable_index == f.variable_index and abs(t.lag - f.lag) <= lag_tolerance
        ]
        if cands:
            remaining.discard(min(cands, key=lambda t: (abs(t.lag - f.lag), t.lag)))
            tp += 1
    fp = len(feats) - tp
    fn = len(truth) - tp
    p_def, r_def = bool(feats), bool(truth)
    precision = tp / len(feats) if p_def else 1.0
    recall = tp / len(truth) if r_def else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return RecoveryScore(precision, recall, f1, tp, fp, fn, p_def, r_def)


# Named scenarios for the bench and sweep commands. "confounded" has as many
# "all features" columns (17 x 26 = 442) as training rows (2 x 226 = 452), so
# unselected MLR overfits, while six weak parents make the validation score
# peak at an intermediate feature count along a pc_alpha sweep.
SCENARIOS = {
    "confounder": {
        "params": {"n_members": 50},
        "split": (0.6, 0.2, 0.2),
        "tau": (8, 24),
    },
    "confounded": {
        "params": {"n_members": 12, "n_noise": 16, "weak_coefs": (0.18,) * 6},
        "split": (1 / 6, 5 / 12, 5 / 12),
        "tau": (8, 24),
    },
}


def scenario(name, seed=0, **overrides):
    """``(ensemble, truth, spurious, split_fractions, (tau_min, tau_max))`` for a named scenario.

    ``overrides`` replace entries of the preset's :func:`confounder_spec` arguments.
    """
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    s = SCENARIOS[name]
    params = {**s["params"], **overrides}
    if "weak_coefs" in params:
        params["weak_coefs"] = tuple(params["weak_coefs"])
    try:
        ens, truth, spurious = confounder_scenario(seed=seed, **params)
    except TypeError as exc:
        raise ConfigError(f"scenario {name!r}: {exc}") from None
    return ens, truth, spurious, s["split"], s["tau"]
