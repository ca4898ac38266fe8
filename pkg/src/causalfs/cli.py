"""Command-line pipeline: ingest, align, split, select, fit, evaluate, report.

Every command reads a :class:`~causalfs.config.RunConfig` (``--config``
JSON, overridden by flags) and writes one run directory holding
``config.json`` (the resolved config), ``manifest.json`` and the command's
artifacts. Artifacts depend only on the config, never on ``--n-jobs``.

Exit codes: 0 on success, 1 on a runtime error, 2 on bad input or
configuration. Errors are reported as one JSON object on stderr; log events
are JSON lines on stderr; the human summary goes to stdout.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import platform
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np
import pandas as pd
import scipy
import sklearn

from . import __version__
from .config import RunConfig
from .discovery import discover
from .exceptions import CausalFSError, ConfigError, InputError, UnderdeterminedError
from .regress import LinearModel, evaluate, predict
from .selection import (
    FeatureSelection,
    fit_and_score,
    select_all,
    select_causal,
    select_lagged_correlation,
    select_random,
    selection_frequency,
    sweep_pc_alpha,
    sweep_top_k,
)
from .series import (
    align_by_reference_extremum,
    build_lagged_samples,
    candidate_features,
    load_ensemble,
    member_csv,
    split_by_member,
)
from .synth import SyntheticSpec, generate, scenario

logger = logging.getLogger("causalfs")

COMMANDS = ("ingest-check", "discover", "select", "fit", "evaluate", "sweep", "bench", "synth")
SPLIT_NAMES = ("train", "val", "test")

_LOG_FIELDS = set(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message", "asctime"}


class JsonFormatter(logging.Formatter):
    """One JSON object per record, with any ``extra`` fields inlined."""

    def format(self, record):
        out = {"level": record.levelname, "logger": record.name, "message": record.getMessage()}
        for key, value in vars(record).items():
            if key not in _LOG_FIELDS:
                out[key] = value
        return json.dumps(out, default=str)


def _setup_logging(quiet):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonFormatter())
    for name in ("causalfs", "py.warnings"):
        lg = logging.getLogger(name)
        lg.handlers[:] = [handler]
        lg.setLevel(logging.WARNING if quiet else logging.INFO)
        lg.propagate = False
    logging.captureWarnings(True)


# ---------------------------------------------------------------------------
# Serialization helpers


def _json(obj):
    return json.dumps(obj, indent=2) + "\n"


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _num(x):
    return None if x is None else float(x)


def _truth_dict(truth, names):
    return {
        t: [{"variable": names[f.variable_index], "lag": f.lag} for f in sorted(feats)]
        for t, feats in truth.items()
    }


# ---------------------------------------------------------------------------
# Data preparation shared by the commands


def load_data(cfg, seed=None):
    """``(ensemble, truth or None)`` for the config's data block."""
    seed = cfg.seed if seed is None else seed
    data = cfg.data
    if data["source"] is not None:
        return load_ensemble(data["source"], data["schema"]), None
    if data["spec"] is not None:
        spec = SyntheticSpec.from_dict({"seed": seed, **data["spec"]})
        return generate(spec)
    ens, truth, _, _, _ = scenario(data["scenario"], seed=seed, **data["params"])
    return ens, {"y": truth}


def prepare(cfg, seed=None):
    """Load, align and split; returns ``(full, {split: ensemble}, truth)``."""
    ens, truth = load_data(cfg, seed)
    if cfg.alignment is not None:
        ens = align_by_reference_extremum(
            ens,
            cfg.alignment["ref_var"],
            cfg.alignment["mode"],
            tau_max=cfg.selection["params"]["tau_max"],
        )
    split_seed = cfg.split["seed"] if seed is None else seed
    splits = dict(zip(SPLIT_NAMES, split_by_member(ens, cfg.split["fractions"], split_seed)))
    return ens, splits, truth


def resolve_targets(cfg, ens):
    targets = cfg.targets if cfg.targets is not None else list(ens.target_names)
    if not targets:
        raise ConfigError("no targets: set 'targets' or give variables the target role")
    for t in targets:
        ens.index(t)
    return targets


def make_selection(cfg, ens, target, method=None, k=None, seed=None, n_jobs=1, run_id=""):
    method = method or cfg.selection["method"]
    p = cfg.selection["params"]
    seed = cfg.seed if seed is None else seed
    if method in ("causal_pc1", "causal_pcmci"):
        dcfg = replace(cfg.discovery_config(), method="PCMCI" if method == "causal_pcmci" else "PC1")
        return select_causal(ens, target, dcfg, n_jobs=n_jobs, run_id=run_id)
    if method == "lagged_corr":
        return select_lagged_correlation(
            ens, target, k or p["top_k"], p["tau_min"], p["tau_max"], run_id=run_id
        )
    if method == "random":
        return select_random(ens, target, k or p["k"], seed, p["tau_min"], p["tau_max"], run_id=run_id)
    return select_all(ens, target, p["tau_min"], p["tau_max"], run_id=run_id)


def _map(fn, items, n_jobs):
    items = list(items)
    if n_jobs == 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Commands. Each returns (artifacts, summary_lines); artifacts maps a
# relative path to file text and is written once, after the stage ends.


def cmd_synth(cfg, n_jobs):
    ens, truth = load_data(cfg)
    art = {f"data/{mid}.csv": member_csv(ens, i) for i, mid in enumerate(ens.member_ids)}
    art["truth.json"] = _json(_truth_dict(truth, ens.names))
    art["variables.json"] = _json([{"name": v.name, "role": v.role} for v in ens.variables])
    lines = [
        f"generated {ens.n_members} members x {ens.lengths[0]} steps over {ens.n_vars} variables",
        f"data written to {cfg.output_path / 'data'}",
    ]
    return art, lines


def cmd_ingest_check(cfg, n_jobs):
    ens, splits, _ = prepare(cfg)
    p = cfg.selection["params"]
    report = {
        "members": list(ens.member_ids),
        "lengths": ens.lengths,
        "variables": [{"name": v.name, "role": v.role, "units": v.units} for v in ens.variables],
        "targets": resolve_targets(cfg, ens),
        "aligned": ens.aligned,
        "alignment_offsets": None if ens.alignment_offsets is None else list(ens.alignment_offsets),
        "n_candidates": len(candidate_features(ens, p["tau_min"], p["tau_max"])),
        "split": {name: list(s.member_ids) for name, s in splits.items()},
    }
    lines = [
        f"{ens.n_members} members, {ens.n_vars} variables, lengths {min(ens.lengths)}..{max(ens.lengths)}",
        f"targets: {', '.join(report['targets'])}",
        f"{report['n_candidates']} lagged candidates for lags {p['tau_min']}..{p['tau_max']}",
        "split: " + ", ".join(f"{k}={len(v)}" for k, v in report["split"].items()),
    ]
    return {"ingest_report.json": _json(report)}, lines


def cmd_discover(cfg, n_jobs):
    ens, splits, truth = prepare(cfg)
    targets = resolve_targets(cfg, ens)
    dcfg = cfg.discovery_config()
    parents = discover(splits["train"], targets, dcfg, n_jobs=n_jobs)
    art, lines = {}, []
    for t in targets:
        ps = parents[t]
        art[f"parents_{t}.json"] = _json(ps.to_dict())
        names = [f"{ens.names[l.feature.variable_index]}@{l.feature.lag}" for l in ps.links]
        lines.append(f"{t}: {len(ps)} parents ({dcfg.method}) {' '.join(names)}")
    return art, lines


def cmd_select(cfg, n_jobs):
    ens, splits, _ = prepare(cfg)
    art, lines = {}, []
    for t in resolve_targets(cfg, ens):
        sel = make_selection(cfg, splits["train"], t, n_jobs=n_jobs, run_id=cfg.hash()[:12])
        art[f"selection_{t}.json"] = _json(sel.to_dict())
        lines.append(f"{t}: {len(sel)} features ({sel.method}) {' '.join(sel.feature_names())}")
    return art, lines


def _load_selection(path, target):
    with open(path) as fh:
        sel = FeatureSelection.from_dict(json.load(fh))
    if sel.target != target:
        raise ConfigError(f"selection file {path} is for target {sel.target!r}, not {target!r}")
    return sel


def cmd_fit(cfg, n_jobs, selection_path=None):
    ens, splits, _ = prepare(cfg)
    p = cfg.selection["params"]
    art, lines = {}, []
    for t in resolve_targets(cfg, ens):
        if selection_path:
            sel = _load_selection(selection_path, t)
        else:
            sel = make_selection(cfg, splits["train"], t, n_jobs=n_jobs, run_id=cfg.hash()[:12])
        if not len(sel):
            raise UnderdeterminedError(f"selection for {t!r} is empty; nothing to fit")
        model, reps = fit_and_score(sel, splits["train"], tau_max=p["tau_max"])
        art[f"selection_{t}.json"] = _json(sel.to_dict())
        art[f"model_{t}.json"] = _json(model.to_dict())
        art[f"metrics_{t}.json"] = _json([r.to_dict() for r in reps])
        lines.append(f"{t}: {len(sel)} features, train R2={reps[0].r2:.4f} (n={reps[0].n})")
    return art, lines


def cmd_evaluate(cfg, n_jobs, model_path=None):
    ens, splits, _ = prepare(cfg)
    p = cfg.selection["params"]
    targets = resolve_targets(cfg, ens)
    models = {}
    if model_path:
        with open(model_path) as fh:
            model = LinearModel.from_dict(json.load(fh))
        if model.target not in targets:
            raise ConfigError(f"model target {model.target!r} is not among {targets}")
        models[model.target] = (model, "loaded")
    else:
        for t in targets:
            sel = make_selection(cfg, splits["train"], t, n_jobs=n_jobs, run_id=cfg.hash()[:12])
            if not len(sel):
                raise UnderdeterminedError(f"selection for {t!r} is empty; nothing to fit")
            model, _ = fit_and_score(sel, splits["train"], tau_max=p["tau_max"])
            models[t] = (model, sel.method)
    art, rows, lines = {}, [], []
    for t, (model, method) in models.items():
        tau_max = max(p["tau_max"], max(f.lag for f in model.features))
        for split, sub in splits.items():
            samples = build_lagged_samples(sub, t, p["tau_min"], tau_max, list(model.features))
            rep = evaluate(model, samples, split)
            rows.append((t, method, split, rep.r2, rep.mse, rep.mae, rep.n, len(model.features)))
            y_pred = predict(model, samples)
            art[f"predictions_{t}_{split}.csv"] = _csv(
                ("member", "t", "y_true", "y_pred"),
                (
                    (samples.member_ids[m], int(tt), float(a), float(b))
                    for m, tt, a, b in zip(samples.source_member, samples.time, samples.y, y_pred)
                ),
            )
            lines.append(f"{t} {split}: R2={rep.r2:.4f} MSE={rep.mse:.4f} MAE={rep.mae:.4f} n={rep.n}")
    art["metrics.csv"] = _csv(("target", "method", "split", "r2", "mse", "mae", "n", "n_features"), rows)
    return art, lines


def cmd_sweep(cfg, n_jobs):
    ens, splits, _ = prepare(cfg)
    sw, p = cfg.sweep, cfg.selection["params"]
    art, lines = {}, []
    for t in resolve_targets(cfg, ens):
        if cfg.selection["method"] == "lagged_corr":
            rep = sweep_top_k(
                splits["train"], splits["val"], t, sw["top_k_grid"], p["tau_min"], p["tau_max"], n_jobs
            )
        else:
            dcfg = cfg.discovery_config()
            rep = sweep_pc_alpha(
                splits["train"],
                splits["val"],
                t,
                grid=sw["grid"],
                config=dcfg,
                alpha_level_grid=sw["alpha_level_grid"],
                max_points=sw["max_points"],
                n_jobs=n_jobs,
            )
        art[f"sweep_{t}.json"] = _json(rep.to_dict())
        art[f"sweep_{t}.csv"] = _csv(
            ("pc_alpha", "alpha_level", "top_k", "n_features", "r2_train", "r2_val", "is_best"),
            rep.rows(),
        )
        near = rep.near_best(sw["best_rel_tol"])
        if near:
            freq = selection_frequency(near)
            for kind, rows in (("variable", freq.by_variable), ("lag", freq.by_lag), ("feature", freq.by_feature)):
                art[f"frequency_{t}_{kind}.csv"] = _csv((kind, "count"), rows)
        best = rep.best
        if best is None:
            lines.append(f"{t}: no grid point selected any feature")
        else:
            knob = f"top_k={best.top_k}" if best.top_k is not None else f"pc_alpha={best.pc_alpha:.3g}"
            lines.append(
                f"{t}: best {knob} with {best.n_features} features, "
                f"val R2={best.r2_val:.4f} (train {best.r2_train:.4f}); "
                f"{len(near)} models within {sw['best_rel_tol']:.0%} of best"
            )
    return art, lines


BENCH_METHODS = ("causal", "lagged_corr", "random", "all")


def _bench_seed(cfg, seed):
    ens, splits, _ = prepare(cfg, seed=seed)
    p = cfg.selection["params"]
    rows, sels = [], {}
    evals = [("val", splits["val"]), ("test", splits["test"])]
    for t in resolve_targets(cfg, ens):
        causal = make_selection(cfg, splits["train"], t, method=cfg.causal_method)
        k = len(causal)
        per = {"causal": causal}
        if k:
            per["lagged_corr"] = make_selection(cfg, splits["train"], t, method="lagged_corr", k=k)
            per["random"] = make_selection(cfg, splits["train"], t, method="random", k=k, seed=seed)
        per["all"] = make_selection(cfg, splits["train"], t, method="all")
        for method in BENCH_METHODS:
            sel = per.get(method)
            reps = None
            if sel is not None and len(sel):
                try:
                    _, reps = fit_and_score(sel, splits["train"], evals, tau_max=p["tau_max"])
                except UnderdeterminedError:
                    reps = None
            n_feat = len(sel) if sel is not None else 0
            for i, split in enumerate(SPLIT_NAMES):
                r = reps[i] if reps else None
                rows.append(
                    (
                        seed,
                        t,
                        method,
                        split,
                        _num(r and r.r2),
                        _num(r and r.mse),
                        _num(r and r.mae),
                        n_feat,
                    )
                )
            if sel is not None and method != "all":
                sels.setdefault(method, []).append(sel)
    return rows, sels


def _bench_summary(rows):
    by = {(r[0], r[1], r[2], r[3]): r for r in rows}
    seeds = sorted({(r[0], r[1]) for r in rows})
    wins = over = compared = 0
    for seed, t in seeds:
        c_val = by[(seed, t, "causal", "val")][4]
        r_val = by[(seed, t, "random", "val")][4]
        a_tr, a_val = by[(seed, t, "all", "train")][4], by[(seed, t, "all", "val")][4]
        if c_val is not None and r_val is not None:
            compared += 1
            wins += c_val >= r_val
        if c_val is not None and a_tr is not None and a_val is not None:
            over += a_tr > 0.95 and a_val < c_val
    return {
        "runs": len(seeds),
        "causal_ge_random_val": wins,
        "compared": compared,
        "all_overfits": over,
    }


def cmd_bench(cfg, n_jobs):
    results = _map(lambda s: _bench_seed(cfg, s), cfg.bench["seeds"], n_jobs)
    rows = [r for rs, _ in results for r in rs]
    art = {
        "bench.csv": _csv(("seed", "target", "method", "split", "r2", "mse", "mae", "n_features"), rows)
    }
    sels = {}
    for _, s in results:
        for method, lst in s.items():
            sels.setdefault(method, []).extend(lst)
    for method, lst in sels.items():
        freq = selection_frequency(lst)
        for kind, frows in (("variable", freq.by_variable), ("lag", freq.by_lag), ("feature", freq.by_feature)):
            art[f"frequency_{method}_{kind}.csv"] = _csv((kind, "count"), frows)
    summary = _bench_summary(rows)
    art["bench_summary.json"] = _json(summary)
    frame = pd.DataFrame(rows, columns=("seed", "target", "method", "split", "r2", "mse", "mae", "n_features"))
    table = (
        frame.groupby(["method", "split"], sort=False)[["r2", "mse", "mae", "n_features"]]
        .mean()
        .unstack("split")
    )
    lines = [f"{len(cfg.bench['seeds'])} seeds, mean over seeds:", table.to_string(float_format="%.3f")]
    lines.append(
        f"causal >= random on val in {summary['causal_ge_random_val']}/{summary['compared']} runs; "
        f"unselected MLR overfits in {summary['all_overfits']}/{summary['runs']}"
    )
    return art, lines


# ---------------------------------------------------------------------------
# Argument handling


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _strings(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="causalfs",
        description="Multidata causal feature selection for lagged regression.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="RunConfig JSON (or a run's manifest.json to replay it)")
        sp.add_argument("-o", "--output-dir")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--n-jobs", type=int, default=1, help="worker threads; -1 for all CPUs")
        sp.add_argument("--quiet", action="store_true", help="log warnings only")
        g = sp.add_argument_group("data")
        g.add_argument("--source", help="long-format CSV or directory of member CSVs")
        g.add_argument("--schema", help="ingestion schema JSON")
        g.add_argument("--targets", type=_strings, help="comma-separated target names")
        g.add_argument("--scenario", help="named synthetic scenario")
        g.add_argument("--spec", help="SyntheticSpec JSON")
        g.add_argument("--n-members", type=int, help="override the scenario's member count")
        g.add_argument("--length", type=int, help="override the scenario's series length")
        g.add_argument("--align-ref", help="align members on this variable's extremum")
        g.add_argument("--align-mode", choices=("min", "max"))
        g.add_argument("--split", type=_floats, help="train,val,test fractions")
        g.add_argument("--split-seed", type=int)
        g = sp.add_argument_group("selection")
        g.add_argument("--method", help="causal_pc1, causal_pcmci, lagged_corr, random or all")
        g.add_argument("--tau-min", type=int)
        g.add_argument("--tau-max", type=int)
        g.add_argument("--pc-alpha", type=float)
        g.add_argument("--alpha-level", type=float)
        g.add_argument("--max-cond-dim", type=int)
        g.add_argument("--top-k", type=int)
        g.add_argument("--k", type=int, help="feature count for random selection")
        if name == "sweep":
            sp.add_argument("--grid", type=_floats, help="comma-separated pc_alpha values")
            sp.add_argument("--alpha-level-grid", type=_floats)
            sp.add_argument("--max-points", type=int)
            sp.add_argument("--top-k-grid", type=_ints)
            sp.add_argument("--best-rel-tol", type=float)
        if name == "bench":
            sp.add_argument("--seeds", type=int, help="run seeds 0..N-1")
        if name == "fit":
            sp.add_argument("--selection", help="FeatureSelection JSON to fit instead of selecting")
        if name == "evaluate":
            sp.add_argument("--model", help="LinearModel JSON to evaluate instead of fitting")
    return parser


def config_from_args(args):
    cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    if args.seed is not None:
        cfg.seed = args.seed
    data = dict(cfg.data)
    if args.source is not None:
        data.update(source=args.source, scenario=None, spec=None)
    if args.schema is not None:
        try:
            with open(args.schema) as fh:
                data["schema"] = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read schema {args.schema}: {exc}") from None
    if args.spec is not None:
        try:
            with open(args.spec) as fh:
                data.update(spec=json.load(fh), source=None, scenario=None)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read spec {args.spec}: {exc}") from None
    if args.scenario is not None:
        data.update(scenario=args.scenario, source=None, spec=None)
    params = dict(data.get("params") or {})
    if args.n_members is not None:
        params["n_members"] = args.n_members
    if args.length is not None:
        params["length"] = args.length
    data["params"] = params
    cfg.data = data
    if args.targets is not None:
        cfg.targets = args.targets
    if args.align_ref is not None or args.align_mode is not None:
        a = dict(cfg.alignment or {})
        if args.align_ref is not None:
            a["ref_var"] = args.align_ref
        if args.align_mode is not None:
            a["mode"] = args.align_mode
        cfg.alignment = a
    split = dict(cfg.split)
    if args.split is not None:
        split["fractions"] = args.split
    if args.split_seed is not None:
        split["seed"] = args.split_seed
    cfg.split = split
    sel = {"method": cfg.selection["method"], "params": dict(cfg.selection["params"])}
    if args.method is not None:
        sel["method"] = args.method
    for key in ("tau_min", "tau_max", "pc_alpha", "alpha_level", "max_cond_dim", "top_k", "k"):
        value = getattr(args, key)
        if value is not None:
            sel["params"][key] = value
    cfg.selection = sel
    sw = dict(cfg.sweep)
    for key in ("grid", "alpha_level_grid", "max_points", "top_k_grid", "best_rel_tol"):
        value = getattr(args, key, None)
        if value is not None:
            sw[key] = value
    cfg.sweep = sw
    if getattr(args, "seeds", None) is not None:
        cfg.bench = {"seeds": args.seeds}
    return cfg


def _manifest(command, cfg, config_text, artifacts, wall_time, n_jobs):
    return {
        "command": command,
        "package_version": __version__,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
            "scikit-learn": sklearn.__version__,
        },
        "config_hash": hashlib.sha256(config_text.encode()).hexdigest(),
        "config": cfg.to_dict(with_output=False),
        "artifacts": {
            name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(artifacts.items())
        },
        # execution details; everything above is reproducible byte for byte
        "runtime": {"wall_time": wall_time, "n_jobs": n_jobs},
    }


def _write(out, artifacts):
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(artifacts.items()):
        path = out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def run(command, cfg, n_jobs=1, **options):
    """Run ``command`` with a :class:`RunConfig`; returns the summary lines."""
    t0 = time.perf_counter()
    cfg = cfg.resolve()
    if n_jobs is None or n_jobs < 1:
        n_jobs = os.cpu_count() or 1
    handler = {
        "ingest-check": cmd_ingest_check,
        "discover": cmd_discover,
        "select": cmd_select,
        "fit": cmd_fit,
        "evaluate": cmd_evaluate,
        "sweep": cmd_sweep,
        "bench": cmd_bench,
        "synth": cmd_synth,
    }[command]
    logger.info("command started", extra={"event": "start", "command": command})
    artifacts, lines = handler(cfg, n_jobs, **options)
    config_text = cfg.to_json()
    artifacts["config.json"] = config_text
    wall = time.perf_counter() - t0
    manifest = _manifest(command, cfg, config_text, artifacts, wall, n_jobs)
    artifacts["manifest.json"] = _json(manifest)
    _write(cfg.output_path, artifacts)
    logger.info(
        "command finished",
        extra={"event": "finish", "command": command, "wall_time": wall, "artifacts": len(artifacts)},
    )
    return lines


def _error_payload(exc, code):
    if isinstance(exc, CausalFSError):
        out = exc.to_dict()
    else:
        out = {"error": type(exc).__name__, "module": "cli", "message": str(exc), "hint": ""}
    out["exit_code"] = code
    return out


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.quiet)
    options = {}
    if args.command == "fit" and args.selection:
        options["selection_path"] = args.selection
    if args.command == "evaluate" and args.model:
        options["model_path"] = args.model
    try:
        cfg = config_from_args(args)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            lines = run(args.command, cfg, n_jobs=args.n_jobs, **options)
    except InputError as exc:
        print(json.dumps(_error_payload(exc, 2)), file=sys.stderr)
        return 2
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(json.dumps(_error_payload(exc, 2)), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - every failure must surface as JSON
        print(json.dumps(_error_payload(exc, 1)), file=sys.stderr)
        return 1
    for line in lines:
        print(line)
    print(f"outputs in {cfg.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
