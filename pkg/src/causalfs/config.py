"""Run configuration for the command-line pipeline.

A :class:`RunConfig` is plain JSON. :meth:`RunConfig.resolve` fills every
default that depends on the data source (split fractions and lag window
of a named scenario, for example), so the ``config.json`` written to a run
directory reproduces the run on its own.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ._validation import check_alpha, check_fractions, check_grid, check_positive_int, check_tau_range
from .discovery import DiscoveryConfig
from .exceptions import ConfigError
from .selection import DEFAULT_GRID, METHODS
from .series import IngestionSchema
from .synth import SCENARIOS

ALIGN_MODES = ("min", "max")
DEFAULT_SPLIT = (0.6, 0.2, 0.2)

_SELECTION_DEFAULTS = {
    "tau_min": None,
    "tau_max": None,
    "pc_alpha": 0.02,
    "alpha_level": 0.02,
    "max_cond_dim": None,
    "top_k": 10,
    "k": 10,
}


def _default_data():
    return {"source": None, "schema": None, "scenario": "confounded", "params": {}, "spec": None}


@dataclass
class RunConfig:
    """Everything that determines a run's outputs.

    ``data`` names either a file ``source`` (with an ingestion ``schema``),
    a synthetic ``scenario`` (with preset ``params`` overrides) or a full
    synthetic ``spec``. ``seed`` seeds the synthetic generator, the split
    (unless ``split.seed`` is given) and random selection.
    """

    data: dict = field(default_factory=_default_data)
    alignment: dict | None = None
    split: dict = field(default_factory=lambda: {"fractions": None, "seed": None})
    targets: list | None = None
    selection: dict = field(
        default_factory=lambda: {"method": "causal_pc1", "params": dict(_SELECTION_DEFAULTS)}
    )
    regression: dict = field(default_factory=lambda: {"model": "mlr"})
    sweep: dict = field(
        default_factory=lambda: {
            "grid": None,
            "alpha_level_grid": None,
            "max_points": None,
            "top_k_grid": None,
            "best_rel_tol": None,
        }
    )
    bench: dict = field(default_factory=lambda: {"seeds": 1})
    output_dir: str = "run"
    seed: int = 0

    @classmethod
    def from_dict(cls, d):
        d = copy.deepcopy(dict(d))
        if "config" in d and "command" in d:
            # a run manifest: replay the config it recorded
            d = d["config"]
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls()
        for key, value in d.items():
            default = getattr(cfg, key)
            if isinstance(default, dict) and isinstance(value, dict):
                merged = dict(default)
                merged.update(value)
                if key == "selection" and "params" in value:
                    merged["params"] = {**_SELECTION_DEFAULTS, **value["params"]}
                value = merged
            setattr(cfg, key, value)
        return cfg

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None

    def to_dict(self, with_output=True):
        d = asdict(self)
        if not with_output:
            del d["output_dir"]
        return d

    def to_json(self):
        """Canonical text of everything that determines the outputs.

        The output directory is left out: where a run is written does not
        change what it writes.
        """
        return json.dumps(self.to_dict(with_output=False), indent=2) + "\n"

    def hash(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @property
    def output_path(self):
        return Path(self.output_dir)

    def resolve(self):
        """Fill data-dependent defaults and validate; returns a new config."""
        cfg = copy.deepcopy(self)
        data = {**_default_data(), **cfg.data}
        if data["source"] is not None:
            data["scenario"] = None
            data["schema"] = IngestionSchema.from_dict(data["schema"]).to_dict()
        elif data["spec"] is not None:
            data["scenario"] = None
        elif data["scenario"] not in SCENARIOS:
            raise ConfigError(
                f"data.scenario must be one of {sorted(SCENARIOS)}, got {data['scenario']!r}"
            )
        cfg.data = data
        preset = SCENARIOS.get(data["scenario"]) if data["scenario"] else None

        if not isinstance(cfg.seed, int) or cfg.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {cfg.seed!r}")
        split = {"fractions": None, "seed": None, **cfg.split}
        if split["fractions"] is None:
            split["fractions"] = list(preset["split"]) if preset else list(DEFAULT_SPLIT)
        split["fractions"] = [float(f) for f in check_fractions(split["fractions"])]
        if split["seed"] is None:
            split["seed"] = cfg.seed
        cfg.split = split

        if cfg.alignment is not None:
            a = {"ref_var": None, "mode": "min", **cfg.alignment}
            if not a["ref_var"]:
                raise ConfigError("alignment.ref_var is required when alignment is set")
            if a["mode"] not in ALIGN_MODES:
                raise ConfigError(f"alignment.mode must be one of {ALIGN_MODES}")
            cfg.alignment = a

        if cfg.targets is None and preset:
            cfg.targets = ["y"]
        if cfg.targets is not None:
            if isinstance(cfg.targets, str):
                cfg.targets = [cfg.targets]
            cfg.targets = [str(t) for t in cfg.targets]

        sel = cfg.selection
        if sel.get("method") not in METHODS:
            raise ConfigError(f"selection.method must be one of {METHODS}, got {sel.get('method')!r}")
        params = {**_SELECTION_DEFAULTS, **sel.get("params", {})}
        unknown = set(params) - set(_SELECTION_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown selection params: {sorted(unknown)}")
        tau = preset["tau"] if preset else (DiscoveryConfig.tau_min, DiscoveryConfig.tau_max)
        if params["tau_min"] is None:
            params["tau_min"] = tau[0]
        if params["tau_max"] is None:
            params["tau_max"] = tau[1]
        check_tau_range(params["tau_min"], params["tau_max"])
        check_alpha(params["pc_alpha"], "pc_alpha")
        check_alpha(params["alpha_level"], "alpha_level")
        check_positive_int(params["top_k"], "top_k")
        check_positive_int(params["k"], "k")
        cfg.selection = {"method": sel["method"], "params": params}

        if cfg.regression.get("model", "mlr") != "mlr":
            raise ConfigError("regression.model must be 'mlr'")
        cfg.regression = {"model": "mlr"}

        sw = {
            "grid": None,
            "alpha_level_grid": None,
            "max_points": None,
            "top_k_grid": None,
            "best_rel_tol": None,
            **cfg.sweep,
        }
        sw["grid"] = check_grid(DEFAULT_GRID if sw["grid"] is None else sw["grid"])
        if sw["alpha_level_grid"] is not None:
            sw["alpha_level_grid"] = check_grid(sw["alpha_level_grid"], "alpha_level_grid")
        if sw["max_points"] is not None:
            check_positive_int(sw["max_points"], "max_points")
        if sw["top_k_grid"] is None:
            sw["top_k_grid"] = [10, 20, 50, 100, 200, 500, 1000]
        sw["top_k_grid"] = [check_positive_int(k, "top_k_grid") for k in sw["top_k_grid"]]
        if sw["best_rel_tol"] is None:
            # lagged correlation gets a looser best-model threshold so its
            # near-best set holds a comparable number of features
            sw["best_rel_tol"] = 0.10 if cfg.selection["method"] == "lagged_corr" else 0.01
        if not 0 <= float(sw["best_rel_tol"]) < 1:
            raise ConfigError("sweep.best_rel_tol must lie in [0, 1)")
        cfg.sweep = sw

        seeds = cfg.bench.get("seeds", 1)
        if isinstance(seeds, int):
            check_positive_int(seeds, "bench.seeds")
            seeds = list(range(seeds))
        seeds = [int(s) for s in seeds]
        if not seeds or any(s < 0 for s in seeds):
            raise ConfigError("bench.seeds must be a positive count or a list of non-negative seeds")
        cfg.bench = {"seeds": seeds}
        return cfg

    @property
    def causal_method(self):
        """The causal selection method to benchmark: PCMCI if selected, else PC1."""
        return "causal_pcmci" if self.selection["method"] == "causal_pcmci" else "causal_pc1"

    def discovery_config(self):
        p = self.selection["params"]
        method = "PCMCI" if self.selection["method"] == "causal_pcmci" else "PC1"
        return DiscoveryConfig(
            p["tau_min"], p["tau_max"], p["pc_alpha"], p["alpha_level"], p["max_cond_dim"], method
        )
