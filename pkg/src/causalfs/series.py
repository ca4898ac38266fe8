"""Ensemble time series: data model, ingestion, alignment, splitting, lagged
sample construction and standard scaling.

An ensemble holds ``M`` member time series over the same ``N`` variables.
Lagged samples are drawn from every member with a sliding window and pooled
row-wise into one :class:`SampleMatrix`, which is what the independence
tests and the regressors consume.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_fractions, check_tau_range
from .exceptions import (
    AlignmentError,
    ConfigError,
    IngestionError,
    SchemaError,
    ShapeError,
    SplitError,
)

ROLES = ("predictor", "target", "both")


class DegenerateColumnWarning(UserWarning):
    """A zero-variance column was passed through unscaled."""


@dataclass(frozen=True)
class VariableMeta:
    name: str
    role: str = "predictor"
    units: str = ""

    def __post_init__(self):
        if self.role not in ROLES:
            raise SchemaError(f"variable {self.name!r}: unknown role {self.role!r}")

    @property
    def is_predictor(self):
        return self.role in ("predictor", "both")

    @property
    def is_target(self):
        return self.role in ("target", "both")


@dataclass(frozen=True, order=True)
class LaggedFeature:
    """A ``(variable, lag)`` pair: variable ``variable_index`` read ``lag`` steps
    before the target time."""

    variable_index: int
    lag: int

    def __post_init__(self):
        if self.lag < 0:
            raise ConfigError(f"lag must be non-negative, got {self.lag}")

    def shifted(self, tau):
        return LaggedFeature(self.variable_index, self.lag + tau)


def _freeze(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EnsembleTimeSeries:
    """``M`` aligned-or-not member series, each ``T_m x N``.

    Members are kept in deterministic (lexicographic member id) order.
    ``times`` holds the original integer step of each member row so that
    alignment and export can refer back to the source files.
    """

    members: tuple
    variables: tuple
    member_ids: tuple = None
    times: tuple = None
    step_duration: float = 1.0
    aligned: bool = False
    alignment_offsets: tuple = None

    def __post_init__(self):
        members = tuple(_freeze(m) for m in self.members)
        if not members:
            raise ShapeError("ensemble has no members")
        variables = tuple(
            v if isinstance(v, VariableMeta) else VariableMeta(v) for v in self.variables
        )
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate variable names: {names}")
        for i, m in enumerate(members):
            if m.ndim != 2 or m.shape[1] != len(variables):
                raise ShapeError(
                    f"member {i} has shape {m.shape}, expected (T, {len(variables)})"
                )
        ids = self.member_ids
        if ids is None:
            width = len(str(len(members) - 1))
            ids = tuple(f"m{i:0{width}d}" for i in range(len(members)))
        ids = tuple(str(i) for i in ids)
        if len(ids) != len(members) or len(set(ids)) != len(ids):
            raise ShapeError("member_ids must be unique and one per member")
        times = self.times
        if times is None:
            times = tuple(np.arange(len(m)) for m in members)
        times = tuple(np.asarray(t, dtype=np.int64) for t in times)
        for t in times:
            t.setflags(write=False)
        if any(len(t) != len(m) for t, m in zip(times, members)):
            raise ShapeError("times must have one entry per member row")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "member_ids", ids)
        object.__setattr__(self, "times", times)
        if self.alignment_offsets is not None:
            object.__setattr__(
                self, "alignment_offsets", tuple(int(o) for o in self.alignment_offsets)
            )

    @property
    def n_members(self):
        return len(self.members)

    @property
    def n_vars(self):
        return len(self.variables)

    @property
    def names(self):
        return [v.name for v in self.variables]

    @property
    def lengths(self):
        return [len(m) for m in self.members]

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown variable {name!r}") from None

    @property
    def predictor_indices(self):
        return [i for i, v in enumerate(self.variables) if v.is_predictor]

    @property
    def target_names(self):
        return [v.name for v in self.variables if v.is_target]

    def subset(self, member_indices):
        idx = list(member_indices)
        offsets = None
        if self.alignment_offsets is not None:
            offsets = [self.alignment_offsets[i] for i in idx]
        return replace(
            self,
            members=[self.members[i] for i in idx],
            member_ids=[self.member_ids[i] for i in idx],
            times=[self.times[i] for i in idx],
            alignment_offsets=offsets,
        )

    def feature_name(self, feature):
        return f"{self.variables[feature.variable_index].name}_lag{feature.lag}"


@dataclass(frozen=True)
class SampleMatrix:
    """Pooled lagged samples for one target.

    Row ``r`` comes from member ``source_member[r]`` at step ``time[r]``;
    column ``j`` holds variable ``columns[j].variable_index`` read
    ``columns[j].lag`` steps earlier. ``y`` is the target at lag 0.
    """

    X: np.ndarray
    y: np.ndarray
    columns: tuple
    source_member: np.ndarray
    target: str = ""
    variable_names: tuple = ()
    time: np.ndarray = None
    member_ids: tuple = ()

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    def column_index(self):
        return {f: j for j, f in enumerate(self.columns)}

    def select(self, features):
        """Restrict to ``features`` (in the given order)."""
        lookup = self.column_index()
        missing = [f for f in features if f not in lookup]
        if missing:
            raise ConfigError(f"features not present in sample matrix: {missing}")
        idx = [lookup[f] for f in features]
        return replace(self, X=self.X[:, idx], columns=tuple(features))

    def feature_names(self):
        return [f"{self.variable_names[f.variable_index]}_lag{f.lag}" for f in self.columns]


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray = None

    def __post_init__(self):
        if self.degenerate is None:
            object.__setattr__(self, "degenerate", np.asarray(self.std) == 0)


# ---------------------------------------------------------------------------
# Ingestion


@dataclass
class IngestionSchema:
    """How to read an ensemble from disk.

    ``format`` is ``"long"`` (single CSV with a member column), ``"directory"``
    (one CSV per member, file stem = member id) or ``"auto"``.
    ``predictors=None`` makes every non-target column a predictor; a target
    also listed in ``predictors`` gets role ``both``.
    """

    format: str = "auto"
    member_column: str = "member"
    time_column: str = "t"
    targets: Sequence[str] = ()
    predictors: Sequence[str] | None = None
    step_duration: float = 1.0
    units: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown ingestion schema keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {
            "format": self.format,
            "member_column": self.member_column,
            "time_column": self.time_column,
            "targets": list(self.targets),
            "predictors": None if self.predictors is None else list(self.predictors),
            "step_duration": self.step_duration,
            "units": dict(self.units),
        }


def _variable_meta(columns, schema):
    targets = list(schema.targets)
    for t in targets:
        if t not in columns:
            raise SchemaError(f"target column {t!r} not found; columns are {columns}")
    if schema.predictors is None:
        predictors = [c for c in columns if c not in targets]
    else:
        predictors = list(schema.predictors)
        for p in predictors:
            if p not in columns:
                raise SchemaError(f"predictor column {p!r} not found")
    metas = []
    for c in columns:
        is_t, is_p = c in targets, c in predictors
        if not (is_t or is_p):
            continue
        role = "both" if (is_t and is_p) else ("target" if is_t else "predictor")
        metas.append(VariableMeta(c, role, schema.units.get(c, "")))
    return metas


def _check_finite(frame, member, columns, line_numbers, path):
    values = frame[columns]
    for c in columns:
        col = pd.to_numeric(values[c], errors="coerce").to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(col))
        if bad.size:
            r = int(line_numbers[bad[0]])
            raise IngestionError(
                f"{path}: non-finite value in member {member!r}, line {r}, column {c!r}",
                file=str(path),
                member=member,
                row=r,
                column=c,
            )


def _read_csv(path):
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise IngestionError(f"cannot parse {path}: {exc}", file=str(path)) from exc


def _load_long(path, schema):
    frame = _read_csv(path)
    for col in (schema.member_column, schema.time_column):
        if col not in frame.columns:
            raise SchemaError(f"{path}: required column {col!r} missing")
    # header is line 1
    frame["__line__"] = np.arange(len(frame)) + 2
    data_cols = [c for c in frame.columns if c not in (schema.member_column, schema.time_column, "__line__")]
    metas = _variable_meta(data_cols, schema)
    names = [m.name for m in metas]
    try:
        frame["__t__"] = frame[schema.time_column].astype(np.int64)
    except ValueError as exc:
        raise IngestionError(f"{path}: time column {schema.time_column!r} must be integer", file=str(path)) from exc
    members, times, ids = [], [], []
    for mid in sorted(frame[schema.member_column].unique()):
        sub = frame[frame[schema.member_column] == mid].sort_values("__t__", kind="stable")
        _check_finite(sub, mid, names, sub["__line__"].to_numpy(), path)
        members.append(sub[names].astype(float).to_numpy())
        times.append(sub["__t__"].to_numpy())
        ids.append(mid)
    return EnsembleTimeSeries(members, metas, ids, times, step_duration=schema.step_duration)


def _load_directory(path, schema):
    files = sorted(p for p in Path(path).iterdir() if p.suffix.lower() == ".csv")
    if not files:
        raise SchemaError(f"no CSV files in directory {path}")
    members, times, ids = [], [], []
    metas = header = None
    for f in files:
        frame = _read_csv(f)
        cols = [c for c in frame.columns if c != schema.time_column]
        if header is None:
            header = cols
            metas = _variable_meta(cols, schema)
        elif cols != header:
            raise ShapeError(f"{f.name}: columns {cols} differ from {header} in {files[0].name}")
        names = [m.name for m in metas]
        _check_finite(frame, f.stem, names, np.arange(len(frame)) + 2, f)
        if schema.time_column in frame.columns:
            try:
                t = frame[schema.time_column].astype(np.int64).to_numpy()
            except ValueError as exc:
                raise IngestionError(
                    f"{f}: time column {schema.time_column!r} must be integer", file=str(f)
                ) from exc
        else:
            t = np.arange(len(frame))
        members.append(frame[names].astype(float).to_numpy())
        times.append(t)
        ids.append(f.stem)
    return EnsembleTimeSeries(members, metas, ids, times, step_duration=schema.step_duration)


def load_ensemble(source, schema=None):
    """Read an ensemble from a long-format CSV or a directory of member CSVs.

    Members come back ordered lexicographically by member id. Any non-finite
    or non-numeric cell raises :class:`IngestionError` naming the member,
    file line and column.
    """
    if schema is None:
        schema = IngestionSchema()
    elif isinstance(schema, dict):
        schema = IngestionSchema.from_dict(schema)
    source = Path(source)
    if not source.exists():
        raise SchemaError(f"source {source} does not exist")
    fmt = schema.format
    if fmt == "auto":
        fmt = "directory" if source.is_dir() else "long"
    if fmt == "long":
        return _load_long(source, schema)
    if fmt == "directory":
        return _load_directory(source, schema)
    raise SchemaError(f"unknown format {schema.format!r}")


def member_csv(ens, i):
    """CSV text of member ``i`` with a leading ``t`` column; floats round-trip exactly."""
    frame = pd.DataFrame(ens.members[i], columns=ens.names)
    frame.insert(0, "t", ens.times[i])
    return frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")


def save_directory(ens, path):
    """Write ``ens`` in directory format (one CSV per member, with a ``t`` column)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for i, mid in enumerate(ens.member_ids):
        (path / f"{mid}.csv").write_text(member_csv(ens, i))
    return path


# ---------------------------------------------------------------------------
# Alignment and splitting


def align_by_reference_extremum(ens, ref_var, mode="min", tau_max=None):
    """Shift members so the extremum of ``ref_var`` sits at a common index.

    Each member's first ``argmin`` (or ``argmax``) is moved to the earliest
    extremum position in the ensemble; members are then cut to the window
    every shifted member covers. Offsets are ``<= 0`` and independent of
    member order.
    """
    if mode not in ("min", "max"):
        raise ConfigError(f"mode must be 'min' or 'max', got {mode!r}")
    j = ens.index(ref_var)
    pick = np.argmin if mode == "min" else np.argmax
    ext = np.array([int(pick(m[:, j])) for m in ens.members])
    offsets = ext.min() - ext
    lo = int(offsets.max())
    ends = offsets + np.array(ens.lengths)
    hi = int(ends.min())
    min_len = 1 if tau_max is None else tau_max + 2
    if hi - lo < min_len:
        limiting = int(np.argmin(ends))
        raise AlignmentError(
            f"aligned window has {hi - lo} steps, need {min_len}; "
            f"limited by member {ens.member_ids[limiting]!r}"
        )
    members, times = [], []
    for m, t, off in zip(ens.members, ens.times, offsets):
        a, b = lo - off, hi - off
        members.append(m[a:b])
        times.append(t[a:b])
    return replace(
        ens, members=members, times=times, aligned=True, alignment_offsets=offsets.tolist()
    )


def _split_counts(m, fractions):
    raw = np.asarray(fractions, dtype=float) * m
    counts = np.floor(raw).astype(int)
    rest = m - counts.sum()
    # largest remainder, earlier split wins ties
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:rest]:
        counts[i] += 1
    return counts


def split_by_member(ens, fractions=(0.6, 0.2, 0.2), seed=0):
    """Partition members into train/val/test ensembles.

    The assignment depends only on the set of member ids and ``seed``:
    ids are sorted before being shuffled, so input order is irrelevant.
    """
    fractions = check_fractions(fractions)
    m = ens.n_members
    if m < 3:
        raise SplitError(f"need at least 3 members to split, got {m}")
    counts = _split_counts(m, fractions)
    if (counts == 0).any():
        raise SplitError(f"split sizes {counts.tolist()} for {m} members contain an empty split")
    by_id = sorted(range(m), key=lambda i: ens.member_ids[i])
    perm = np.random.default_rng(seed).permutation(m)
    shuffled = [by_id[i] for i in perm]
    out, start = [], 0
    for c in counts:
        chosen = sorted(shuffled[start : start + c], key=lambda i: ens.member_ids[i])
        out.append(ens.subset(chosen))
        start += c
    return tuple(out)


# ---------------------------------------------------------------------------
# Lagged samples


def candidate_features(ens, tau_min, tau_max):
    """All ``(variable, lag)`` candidates over predictor variables, ordered by
    ``(variable_index, lag)``."""
    tau_min, tau_max = check_tau_range(tau_min, tau_max)
    preds = ens.predictor_indices
    if not preds:
        raise SchemaError("ensemble has no predictor-role variables")
    return [LaggedFeature(i, tau) for i in preds for tau in range(tau_min, tau_max + 1)]


def build_lagged_samples(ens, target, tau_min, tau_max, predictors=None):
    """Pool sliding-window samples of ``target`` and its lagged predictors.

    Every member contributes ``max(0, T_m - L)`` rows, where ``L`` is the
    largest lag among ``tau_max`` and the requested columns. Rows are in
    member order, then time order.
    """
    tau_min, tau_max = check_tau_range(tau_min, tau_max)
    ti = ens.index(target)
    if predictors is None:
        columns = candidate_features(ens, tau_min, tau_max)
    else:
        columns = [f if isinstance(f, LaggedFeature) else LaggedFeature(*f) for f in predictors]
        for f in columns:
            if not 0 <= f.variable_index < ens.n_vars:
                raise ConfigError(f"feature {f} refers to unknown variable")
    max_lag = max([tau_max] + [f.lag for f in columns])
    vi = np.array([f.variable_index for f in columns], dtype=int)
    lags = np.array([f.lag for f in columns], dtype=int)
    Xs, ys, src, tt = [], [], [], []
    for m_idx, (m, t) in enumerate(zip(ens.members, ens.times)):
        n = len(m) - max_lag
        if n <= 0:
            continue
        rows = np.arange(max_lag, len(m))
        Xs.append(m[rows[:, None] - lags[None, :], vi[None, :]])
        ys.append(m[rows, ti])
        src.append(np.full(n, m_idx))
        tt.append(t[rows])
    if not Xs:
        raise ConfigError(
            f"no member is longer than the maximum lag {max_lag}; lengths are {ens.lengths}"
        )
    return SampleMatrix(
        X=np.vstack(Xs),
        y=np.concatenate(ys),
        columns=tuple(columns),
        source_member=np.concatenate(src),
        target=target,
        variable_names=tuple(ens.names),
        time=np.concatenate(tt),
        member_ids=tuple(ens.member_ids),
    )


# ---------------------------------------------------------------------------
# Scaling


def _as_matrix(X):
    return X.X if isinstance(X, SampleMatrix) else np.asarray(X, dtype=float)


def fit_scaler(X):
    """Column mean and population standard deviation of ``X``.

    Zero-variance columns are flagged in ``degenerate`` and will be passed
    through unchanged by :func:`apply_scaler`.
    """
    A = _as_matrix(X)
    if A.ndim != 2 or A.shape[0] < 2:
        raise ConfigError("fit_scaler needs a 2-D matrix with at least 2 rows")
    mean = A.mean(axis=0)
    std = A.std(axis=0)
    degenerate = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} zero-variance column(s) left unscaled: "
            f"{np.flatnonzero(degenerate).tolist()}",
            DegenerateColumnWarning,
            stacklevel=2,
        )
    return ScalerParams(mean=mean, std=std, degenerate=degenerate)


def apply_scaler(X, params):
    A = _as_matrix(X)
    mean = np.where(params.degenerate, 0.0, params.mean)
    std = np.where(params.degenerate, 1.0, params.std)
    Z = (A - mean) / std
    if isinstance(X, SampleMatrix):
        return replace(X, X=Z)
    return Z


def invert_scaler(Z, params):
    A = _as_matrix(Z)
    mean = np.where(params.degenerate, 0.0, params.mean)
    std = np.where(params.degenerate, 1.0, params.std)
    out = A * std + mean
    if isinstance(Z, SampleMatrix):
        return replace(Z, X=out)
    return out


class FeatureScaler(TransformerMixin, BaseEstimator):
    """Standard scaler with population std that leaves constant columns untouched.

    Unlike :class:`sklearn.preprocessing.StandardScaler`, degenerate columns
    are neither centered nor scaled.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        params = fit_scaler(X)
        self.mean_ = params.mean
        self.scale_ = params.std
        self.degenerate_ = params.degenerate
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def params_(self):
        check_is_fitted(self, "mean_")
        return ScalerParams(self.mean_, self.scale_, self.degenerate_)

    def transform(self, X):
        check_is_fitted(self, "mean_")
        return apply_scaler(check_array(X, dtype=float), self.params_)

    def inverse_transform(self, X):
        check_is_fitted(self, "mean_")
        return invert_scaler(check_array(X, dtype=float), self.params_)


def concat_members(ensembles: Iterable[EnsembleTimeSeries]):
    """Stack the members of several ensembles over the same variables."""
    ensembles = list(ensembles)
    first = ensembles[0]
    for e in ensembles[1:]:
        if e.names != first.names:
            raise ShapeError("cannot concatenate ensembles with different variables")
    return replace(
        first,
        members=[m for e in ensembles for m in e.members],
        member_ids=[i for e in ensembles for i in e.member_ids],
        times=[t for e in ensembles for t in e.times],
        alignment_offsets=None,
        aligned=False,
    )
