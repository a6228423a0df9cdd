"""Command-line entry point: ``train``, ``detect``, ``scenarios`` and ``export-plots``.

Every option can also come from a JSON ``--config`` file whose keys mirror
the long flag names (dashes or underscores); flags given on the command
line win. Each run writes ``run_config.json`` with the resolved settings.

Exit codes: 0 success, 1 internal error, 2 bad input. Failures print
``{"error": <code>, "message": <text>}`` on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .data import SplitSpec, load_csv, load_schema, split
from .errors import InputError, MissingRunDirectory, RashomonError
from .kernels import BACKEND
from .learners import GridSpec, default_grid, grid_search, load_models, save_models
from .measures import MeasureKind, MeasureSpec
from .plots import heatmap, profile_chart
from .profiles import bundle_from_dict, bundle_to_dict, profile_bundle, read_exchange
from .rashomon import RashomonConfig, build_rashomon_set, performance_table, rashomon_detect, reference_model
from .scenarios import SCENARIO_IDS, ScenarioSpec, evaluate_scenarios, write_long_csv, write_summary_json
from .synthetic import HLH_TARGET, hlh_csv_path

logger = logging.getLogger("rashomon_detect")

# Defaults per subcommand; None means "not set".
DEFAULTS: dict[str, dict[str, Any]] = {
    "train": {
        "data": None, "target": None, "schema": None, "positive_label": None, "grid": None,
        "folds": 5, "repeats": 1, "test_fraction": None, "seed": 0, "jobs": 1, "out": "run_train",
    },
    "detect": {
        "data": None, "target": None, "schema": None, "positive_label": None, "models": None,
        "profiles": None, "epsilon": 0.04, "k": None, "measure": "pdi", "grid_size": 101,
        "grid_strategy": "uniform", "variant": "full", "metric": "cv_auc_mean", "reference": "best_by_metric",
        "window": 7, "degree": 2, "tau": None, "raw_categorical": False, "background_rows": None,
        "center": False, "seed": 0, "out": "run_detect",
    },
    "scenarios": {
        "scenarios": list(SCENARIO_IDS), "n_pairs": 100, "sigma": 0.005, "grid_size": 101, "seed": 0,
        "window": 7, "degree": 2, "tau": None, "out": "run_scenarios",
    },
    "export-plots": {"run": None, "out": None},
}


class CliError(InputError):
    """Bad command-line usage that argparse cannot catch on its own."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rashomon-detect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def data_flags(p):
        p.add_argument("--data", default=S, help="CSV file (header row required)")
        p.add_argument("--target", default=S, help="binary target column")
        p.add_argument("--schema", default=S, help='JSON mapping column -> "numeric"|"categorical"')
        p.add_argument("--positive-label", default=S, help="raw target label coded as 1")

    def common(p):
        p.add_argument("--config", default=S, help="JSON file with option values (flags override it)")
        p.add_argument("--seed", type=int, default=S)
        p.add_argument("--out", default=S, help="output directory")

    p = sub.add_parser("train", help="grid search with cross-validation; writes a model store")
    data_flags(p)
    common(p)
    p.add_argument("--grid", default=S, help="JSON grid spec (default: built-in RF/GBM grid)")
    p.add_argument("--folds", type=int, default=S)
    p.add_argument("--repeats", type=int, default=S)
    p.add_argument("--test-fraction", type=float, default=S, help="hold out a stratified test split")
    p.add_argument("--jobs", type=int, default=S, help="worker processes")

    p = sub.add_parser("detect", help="Rashomon set, profile disparities and the k most different models")
    data_flags(p)
    common(p)
    p.add_argument("--models", default=S, help="model store written by train")
    p.add_argument("--profiles", default=S, help="profile-exchange JSON (instead of computing profiles)")
    p.add_argument("--epsilon", type=float, default=S)
    p.add_argument("--k", type=int, default=S, help="number of models to select (default: sqrt rule)")
    p.add_argument("--measure", choices=["pdi", "l2", "l2der"], default=S)
    p.add_argument("--grid-size", type=int, default=S)
    p.add_argument("--grid-strategy", choices=["uniform", "quantile"], default=S)
    p.add_argument("--variant", choices=["full", "greedy"], default=S)
    p.add_argument("--metric", choices=["cv_auc_mean", "test_auc"], default=S)
    p.add_argument("--reference", default=S, help='"best_by_metric" or a model id')
    p.add_argument("--window", type=int, default=S)
    p.add_argument("--degree", type=int, default=S)
    p.add_argument("--tau", type=float, default=S, help="sign dead zone (default: relative to profile range)")
    p.add_argument("--raw-categorical", action="store_const", const=True, default=S,
                   help="do not divide categorical distances by sqrt(#categories)")
    p.add_argument("--background-rows", type=int, default=S)
    p.add_argument("--center", action="store_const", const=True, default=S)

    p = sub.add_parser("scenarios", help="measure distributions on the eight synthetic profile-pair scenarios")
    common(p)
    p.add_argument("--scenarios", type=int, nargs="+", default=S)
    p.add_argument("--n-pairs", type=int, default=S)
    p.add_argument("--sigma", type=float, default=S)
    p.add_argument("--grid-size", type=int, default=S)
    p.add_argument("--window", type=int, default=S)
    p.add_argument("--degree", type=int, default=S)
    p.add_argument("--tau", type=float, default=S)

    p = sub.add_parser("export-plots", help="SVG profile charts and heatmaps from a detect output directory")
    p.add_argument("--config", default=S)
    p.add_argument("--run", default=S, help="detect output directory")
    p.add_argument("--out", default=S, help="SVG directory (default: <run>/plots)")
    return parser


def resolve(command: str, flags: dict[str, Any]) -> dict[str, Any]:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS[command])
    path = flags.pop("config", None)
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise CliError("config file must hold a JSON object")
        for key, value in doc.items():
            name = key.replace("-", "_")
            if name not in cfg:
                raise CliError(f"unknown config key {key!r} for {command}")
            cfg[name] = value
    for key, value in flags.items():
        if key in cfg:
            cfg[key] = value
    return cfg


def _write_json(path: Path, doc: Any) -> None:
    path.write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n", encoding="utf-8")


def _num(x: Optional[float]) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _manifest(out: Path, command: str, cfg: dict, **extra) -> None:
    _write_json(out / "run_config.json", {"command": command, "version": __version__, "config": cfg, **extra})


def _load_data(cfg: dict):
    if cfg["data"] is None:
        if cfg["target"] not in (None, HLH_TARGET):
            raise CliError("--target needs --data")
        return load_csv(hlh_csv_path(), HLH_TARGET, name="hlh_synthetic")
    if cfg["target"] is None:
        raise CliError("--target is required with --data")
    schema = load_schema(cfg["schema"]) if cfg["schema"] else None
    return load_csv(cfg["data"], cfg["target"], schema, cfg["positive_label"])


def cmd_train(cfg: dict) -> Path:
    out = Path(cfg["out"])
    data = _load_data(cfg)
    test = None
    if cfg["test_fraction"] is not None:
        data, test = split(data, SplitSpec(cfg["test_fraction"], cfg["seed"]))
    if cfg["grid"] is None:
        grid = default_grid(cfg["seed"])
    else:
        try:
            doc = json.loads(Path(cfg["grid"]).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read grid {cfg['grid']}: {exc}") from None
        doc = dict(doc, seed=cfg["seed"])
        grid = GridSpec.from_dict(doc)
    records = grid_search(grid, data, cfg["folds"], n_repeats=cfg["repeats"], test_data=test, n_jobs=cfg["jobs"])

    out.mkdir(parents=True, exist_ok=True)
    (out / "models.json").write_bytes(save_models(records))
    n_scores = cfg["folds"] * cfg["repeats"]
    header = ["id", "family", "hyperparameters", "cv_auc_mean", "cv_auc_sd"]
    header += [f"fold_{i + 1}" for i in range(n_scores)] + ["test_auc", "error"]
    rows = []
    for r in records:
        folds = list(r.cv_auc_per_fold) + [None] * (n_scores - len(r.cv_auc_per_fold))
        sd = float(np.std(r.cv_auc_per_fold, ddof=1)) if not r.failed and len(r.cv_auc_per_fold) > 1 else None
        rows.append([r.id, r.family.value if r.family else "", json.dumps(r.hyperparameters, sort_keys=True),
                     _num(r.cv_auc_mean), _num(sd), *(_num(v) for v in folds), _num(r.test_auc), r.error or ""])
    _csv(out / "metrics.csv", header, rows)
    failed = [r.id for r in records if r.failed]
    _manifest(out, "train", cfg, dataset={"name": data.name, "n": data.n, "p": data.p},
              grid=grid.to_dict(), failed_cells=failed)
    logger.info("trained %d cells (%d failed) -> %s", len(records), len(failed), out)
    return out


def _detect_inputs(cfg: dict, rconf: RashomonConfig):
    """Performance table and profile bundle restricted to the Rashomon set."""
    if cfg["models"] is None and cfg["profiles"] is None:
        raise CliError("detect needs --models or --profiles")
    records = None
    if cfg["models"] is not None:
        try:
            records = load_models(Path(cfg["models"]).read_bytes())
        except OSError as exc:
            raise CliError(f"cannot read model store: {exc}") from None
    if cfg["profiles"] is not None:
        bundle, scores = read_exchange(cfg["profiles"])
        table = performance_table(records if records is not None else scores, rconf.metric)
        return table, bundle
    table = performance_table(records, rconf.metric)
    members = build_rashomon_set(table, reference_model(table, rconf), rconf.epsilon)
    by_id = {r.id: r.model for r in records if not r.failed}
    data = _load_data(cfg)
    bundle = profile_bundle([by_id[m] for m in members], data, rconf.grid_size, cfg["grid_strategy"],
                            background_rows=cfg["background_rows"], seed=cfg["seed"], center=cfg["center"],
                            scores={m: table[m] for m in members})
    return table, bundle


def cmd_detect(cfg: dict) -> Path:
    out = Path(cfg["out"])
    spec = MeasureSpec(MeasureKind.parse(cfg["measure"]), cfg["window"], cfg["degree"], cfg["tau"],
                       not cfg["raw_categorical"])
    rconf = RashomonConfig(cfg["epsilon"], cfg["k"], spec, cfg["grid_size"], cfg["reference"], cfg["variant"],
                           cfg["metric"])
    table, bundle = _detect_inputs(cfg, rconf)
    result = rashomon_detect(table, bundle, rconf)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)

    out.mkdir(parents=True, exist_ok=True)
    members = result.rashomon_ids
    short = spec.kind.short
    _write_json(out / "detect_result.json", result.to_dict())
    M = result.matrix
    _csv(out / "matrix.csv", ["model", *members], ([a, *(_num(v) for v in M.values[i])] for i, a in enumerate(members)))
    variables = list(M.per_variable)
    _csv(out / "per_variable.csv", ["model_a", "model_b", "variable", short],
         ([a, b, v, _num(M.per_variable[v][i, j])]
          for i, a in enumerate(members) for j, b in enumerate(members) if i < j for v in variables))
    heat_dir = out / "heatmaps"
    heat_dir.mkdir(exist_ok=True)
    for s in result.selected:
        si = M.index(s)
        _csv(heat_dir / f"{s}.csv", ["model", *variables, "mean"],
             ([b, *(_num(M.per_variable[v][si, j]) for v in variables), _num(M.values[si, j])]
              for j, b in enumerate(members) if b != s))
    rank = {m: i + 1 for i, m in enumerate(result.selected)}
    rows = []
    for mid in members:
        for bv in bundle.variables:
            vals = bundle.values(mid, bv.name)
            xs = bv.grid.points if bv.is_numeric else bv.categories
            for x, v in zip(xs, vals):
                rows.append([mid, bv.name, _num(x) if bv.is_numeric else x, _num(v),
                             int(mid in rank), rank.get(mid, "")])
    _csv(out / "profiles.csv", ["model", "variable", "z", "value", "selected", "selection_rank"], rows)
    _write_json(out / "profiles.json", bundle_to_dict(bundle.subset(members), {m: table[m] for m in members}))
    _csv(out / "summary.csv", ["model_a", "model_b", short], ([a, b, _num(v)] for a, b, v in result.summary_pairs()))
    _manifest(out, "detect", cfg, resolved=rconf.to_dict(), k=result.k, warnings=list(result.warnings),
              zero_filled=[list(p) for p in result.zero_filled])
    logger.info("selected %s from %d members -> %s", ", ".join(result.selected), len(members), out)
    return out


def cmd_scenarios(cfg: dict) -> Path:
    out = Path(cfg["out"])
    specs = [ScenarioSpec(int(s), cfg["n_pairs"], cfg["sigma"], cfg["seed"], cfg["grid_size"])
             for s in cfg["scenarios"]]
    measures = [MeasureSpec(kind, cfg["window"], cfg["degree"], cfg["tau"]) for kind in MeasureKind]
    results = evaluate_scenarios(specs, measures)
    out.mkdir(parents=True, exist_ok=True)
    write_long_csv(results, out / "scenarios.csv")
    write_summary_json(results, specs, out / "scenarios_summary.json")
    _manifest(out, "scenarios", cfg)
    return out


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def cmd_export_plots(cfg: dict) -> Path:
    if cfg["run"] is None:
        raise CliError("export-plots needs --run")
    run = Path(cfg["run"])
    result_path, prof_path = run / "detect_result.json", run / "profiles.json"
    if not run.is_dir() or not result_path.is_file() or not prof_path.is_file():
        raise MissingRunDirectory(f"{run} is not a detect output directory")
    result = json.loads(result_path.read_text(encoding="utf-8"))
    bundle = bundle_from_dict(json.loads(prof_path.read_text(encoding="utf-8")))
    out = Path(cfg["out"]) if cfg["out"] is not None else run / "plots"
    out.mkdir(parents=True, exist_ok=True)
    # a lone reference is not a selection worth highlighting
    selected = result["selected"] if len(result["selected"]) > 1 else []
    written = []
    for bv in bundle.variables:
        if bv.is_numeric:
            curves = {m: (bv.grid.points, bundle.values(m, bv.name)) for m in bundle.model_ids}
            svg = profile_chart(bv.name, curves, selected)
        else:
            xs = np.arange(len(bv.categories), dtype=float)
            curves = {m: (xs, bundle.values(m, bv.name)) for m in bundle.model_ids}
            svg = profile_chart(bv.name, curves, selected, categories=bv.categories)
        name = f"profile_{_safe_name(bv.name)}.svg"
        (out / name).write_text(svg, encoding="utf-8")
        written.append(name)
    ids = result["matrix"]["model_ids"]
    per_var = result["per_variable"]
    variables = list(per_var)
    for s in selected:
        si = ids.index(s)
        others = [b for b in ids if b != s]
        vals = np.array([[per_var[v][si][ids.index(b)] for v in variables] for b in others]).reshape(
            len(others), len(variables))
        svg = heatmap(f"{result['measure']} against {s}", others, variables, vals)
        name = f"heatmap_{_safe_name(s)}.svg"
        (out / name).write_text(svg, encoding="utf-8")
        written.append(name)
    return out


COMMANDS = {"train": cmd_train, "detect": cmd_detect, "scenarios": cmd_scenarios, "export-plots": cmd_export_plots}


def _fail(code: str, message: str, status: int) -> int:
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    # warnings that matter are printed by the commands themselves
    logging.basicConfig(level=logging.INFO if args.pop("verbose") else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(command, args)
        COMMANDS[command](cfg)
    except InputError as exc:
        return _fail(exc.code, str(exc), 2)
    except RashomonError as exc:
        return _fail(exc.code, str(exc), 1)
    except FileNotFoundError as exc:
        return _fail("FileNotFound", str(exc), 2)
    except ValueError as exc:  # option values rejected by constructors
        return _fail("InvalidArgument", str(exc), 2)
    except Exception as exc:  # noqa: BLE001 - last-resort contract for scripts
        return _fail("InternalError", f"{type(exc).__name__}: {exc}", 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
