"""Command-line interface.

Subcommands: run (simulate configured modes), calibrate-delays (fit the
delay model from real sweep timings), bench (scaling and backend
benchmarks with assertions), mask-study (masking grid vs the local
baseline). Exit codes: 0 success, 1 configuration error, 2 data error,
3 benchmark assertion failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__, backend, benchmarks
from .core import PROBLEM_CLASSIFICATION, PROBLEMS, Hyperparams, TaskData
from .data import (
    SyntheticSpec,
    generate_synthetic_classification,
    generate_synthetic_regression,
    load_ucihar,
    split_train_test,
    truncate_per_task,
)
from .errors import BenchmarkError, ConfigError, DataError, InvalidInputError
from .federation import (
    MODE_GLOBAL,
    MODE_LOCAL,
    MODE_MTL,
    MODES,
    DEFAULT_DELAY_MODEL,
    DelayModel,
    SimConfig,
    calibrate_t_wait,
    run_global_baseline,
    run_local_baseline,
    run_simulation,
)
from .masking import MaskSpec
from .seeding import DOMAIN_DATA, DOMAIN_SPLIT, spawn_rng
from .traceio import write_manifest, write_summary_json, write_trace_csv

_SCHEMA = {
    "problem": None,
    "seed": None,
    "output_dir": None,
    "modes": None,
    "dataset": {
        "kind": None,
        "num_tasks": None,
        "n_per_task": None,
        "dim": None,
        "task_component_scale": None,
        "feature_mean_range": None,
        "feature_std_range": None,
        "separation": None,
        "snr_db": None,
        "features_path": None,
        "labels_path": None,
        "subjects_path": None,
        "positive_class_id": None,
        "truncate_per_task": None,
    },
    "split": {"train_fraction": None, "stratify": None},
    "hyperparams": {"c1": None, "c2": None, "epsilon": None},
    "federation": {
        "delay_model": {
            "c_nd": None, "c_n": None, "c_d": None, "c_0": None,
            "sigma_ratio": None, "calibration_file": None,
        },
        "hw_factors": None,
        "t_wait": {"value": None, "target_fraction": None, "all": None},
        "sum_time": None,
        "max_epochs": None,
        "stop_tolerance": None,
    },
    "mask": {
        "family": None, "keep_prob": None, "shape_a": None, "shape_b": None,
        "unaffected_ratio": None,
    },
    "mask_study": {
        "bernoulli_grid": None, "beta_ratio_grid": None, "light_n": None,
    },
}


def load_config(path: str | Path) -> dict:
    """Parse a YAML config; report parse errors with their location."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ConfigError(f"cannot parse {path}{where}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict, schema: dict = _SCHEMA, path: str = "") -> None:
    """Reject unknown keys anywhere in the config tree."""
    for key, value in cfg.items():
        here = f"{path}.{key}" if path else str(key)
        if key not in schema:
            raise ConfigError(f"unknown config key {here!r}")
        sub = schema[key]
        if isinstance(sub, dict) and isinstance(value, dict):
            validate_config(value, sub, here)


def _require(cfg: dict, key: str, context: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{context} is missing required key {key!r}")
    return cfg[key]


def _pair(value, name: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{name} must be a two-element list")
    return float(value[0]), float(value[1])


def build_dataset(cfg: dict, seed: int) -> tuple[list[TaskData], list[TaskData], list[TaskData]]:
    """Build (full, train, test) task lists from the config."""
    problem = _require(cfg, "problem")
    if problem not in PROBLEMS:
        raise ConfigError(f"problem must be one of {PROBLEMS}, got {problem!r}")
    ds = _require(cfg, "dataset")
    kind = _require(ds, "kind", "dataset")
    if kind == "synthetic":
        spec_kwargs = dict(
            problem=problem,
            num_tasks=int(_require(ds, "num_tasks", "dataset")),
            n_per_task=int(_require(ds, "n_per_task", "dataset")),
            dim=int(_require(ds, "dim", "dataset")),
        )
        if "task_component_scale" in ds:
            spec_kwargs["task_component_scale"] = float(ds["task_component_scale"])
        if "feature_mean_range" in ds:
            spec_kwargs["feature_mean_range"] = _pair(ds["feature_mean_range"], "feature_mean_range")
        if "feature_std_range" in ds:
            spec_kwargs["feature_std_range"] = _pair(ds["feature_std_range"], "feature_std_range")
        if "separation" in ds:
            spec_kwargs["separation"] = float(ds["separation"])
        if "snr_db" in ds:
            spec_kwargs["snr_db"] = float(ds["snr_db"])
        try:
            spec = SyntheticSpec(**spec_kwargs)
        except InvalidInputError as exc:
            raise ConfigError(f"bad dataset spec: {exc}") from exc
        rng = spawn_rng(seed, DOMAIN_DATA)
        if problem == PROBLEM_CLASSIFICATION:
            tasks, _ = generate_synthetic_classification(spec, rng)
        else:
            tasks, _ = generate_synthetic_regression(spec, rng)
    elif kind == "ucihar":
        tasks = load_ucihar(
            str(_require(ds, "features_path", "dataset")),
            str(_require(ds, "labels_path", "dataset")),
            str(_require(ds, "subjects_path", "dataset")),
            int(_require(ds, "positive_class_id", "dataset")),
        )
    else:
        raise ConfigError(f"dataset.kind must be synthetic or ucihar, got {kind!r}")
    if ds.get("truncate_per_task") is not None:
        tasks = truncate_per_task(tasks, int(ds["truncate_per_task"]), spawn_rng(seed, DOMAIN_SPLIT, 0))

    split_cfg = cfg.get("split", {})
    fraction = float(split_cfg.get("train_fraction", 0.7))
    stratify = bool(split_cfg.get("stratify", problem == PROBLEM_CLASSIFICATION))
    train, test = [], []
    for task in tasks:
        tr, te = split_train_test(
            task, fraction, spawn_rng(seed, DOMAIN_SPLIT, 1, task.task_id), stratify
        )
        train.append(tr)
        test.append(te)
    return tasks, train, test


def build_hyperparams(cfg: dict) -> Hyperparams:
    hp = cfg.get("hyperparams", {})
    try:
        return Hyperparams(
            c1=float(hp.get("c1", 1.0)),
            c2=float(hp.get("c2", 1.0)),
            epsilon=float(hp.get("epsilon", 0.1)),
        )
    except InvalidInputError as exc:
        raise ConfigError(f"bad hyperparams: {exc}") from exc


def build_mask_spec(cfg: dict) -> MaskSpec:
    mk = cfg.get("mask", {})
    try:
        return MaskSpec(
            family=str(mk.get("family", "none")),
            keep_prob=float(mk.get("keep_prob", 1.0)),
            shape_a=float(mk.get("shape_a", 2.0)),
            shape_b=float(mk.get("shape_b", 0.5)),
            unaffected_ratio=float(mk.get("unaffected_ratio", 0.0)),
        )
    except InvalidInputError as exc:
        raise ConfigError(f"bad mask spec: {exc}") from exc


def _build_delay_model(fed: dict) -> DelayModel:
    dm = fed.get("delay_model", {})
    base = {
        "c_nd": DEFAULT_DELAY_MODEL.c_nd,
        "c_n": DEFAULT_DELAY_MODEL.c_n,
        "c_d": DEFAULT_DELAY_MODEL.c_d,
        "c_0": DEFAULT_DELAY_MODEL.c_0,
        "sigma_ratio": DEFAULT_DELAY_MODEL.sigma_ratio,
    }
    if dm.get("calibration_file"):
        path = Path(dm["calibration_file"])
        try:
            loaded = yaml.safe_load(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read calibration file {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse calibration file {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"calibration file {path} must be a mapping")
        for key in base:
            if key in loaded:
                base[key] = float(loaded[key])
    for key in base:
        if key in dm:
            base[key] = float(dm[key])
    try:
        return DelayModel(**base)
    except InvalidInputError as exc:
        raise ConfigError(f"bad delay model: {exc}") from exc


def _build_hw_factors(fed: dict, train: list[TaskData]) -> dict[int, float] | None:
    hw = fed.get("hw_factors")
    if hw is None:
        return None
    ids = [t.task_id for t in train]
    if isinstance(hw, (int, float)):
        return {tid: float(hw) for tid in ids}
    if isinstance(hw, dict):
        if set(hw) != {"low", "high"}:
            raise ConfigError("hw_factors mapping must have exactly the keys low and high")
        spread = np.linspace(float(hw["low"]), float(hw["high"]), len(ids))
        return {tid: float(f) for tid, f in zip(ids, spread)}
    if isinstance(hw, list):
        if len(hw) != len(ids):
            raise ConfigError(
                f"hw_factors list has {len(hw)} entries for {len(ids)} tasks"
            )
        return {tid: float(f) for tid, f in zip(ids, hw)}
    raise ConfigError("hw_factors must be a number, a list, or {low, high}")


def build_sim_config(cfg: dict, train: list[TaskData], seed: int) -> SimConfig:
    problem = _require(cfg, "problem")
    fed = cfg.get("federation", {})
    delay_model = _build_delay_model(fed)
    hw_factors = _build_hw_factors(fed, train)
    tw = fed.get("t_wait", {"all": True})
    if not isinstance(tw, dict) or sum(k in tw for k in ("value", "target_fraction", "all")) != 1:
        raise ConfigError("t_wait needs exactly one of: value, target_fraction, all")
    if tw.get("all"):
        t_wait = math.inf
    elif "value" in tw:
        t_wait = float(tw["value"])
    else:
        t_wait = calibrate_t_wait(
            delay_model, train, hw_factors, float(tw["target_fraction"]), seed
        )
    try:
        return SimConfig(
            problem=problem,
            params=build_hyperparams(cfg),
            delay_model=delay_model,
            hw_factors=hw_factors,
            t_wait=t_wait,
            sum_time=float(fed.get("sum_time", 0.0)),
            max_epochs=int(fed.get("max_epochs", 100)),
            stop_tolerance=float(fed.get("stop_tolerance", 0.0)),
            mask=build_mask_spec(cfg),
            master_seed=seed,
        )
    except InvalidInputError as exc:
        raise ConfigError(f"bad federation settings: {exc}") from exc


_RUNNERS = {
    MODE_MTL: run_simulation,
    MODE_LOCAL: run_local_baseline,
    MODE_GLOBAL: run_global_baseline,
}


def _resolve_out_dir(args, cfg: dict) -> Path:
    out = args.output or cfg.get("output_dir")
    if not out:
        raise ConfigError("no output directory: set output_dir in the config or pass --output")
    return Path(out)


def _apply_backend(args) -> None:
    if getattr(args, "backend", None):
        try:
            backend.set_backend(args.backend)
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from exc


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    _apply_backend(args)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    modes = cfg.get("modes", [MODE_MTL])
    if not isinstance(modes, list) or not modes:
        raise ConfigError("modes must be a non-empty list")
    for mode in modes:
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r} (use one of {MODES})")
    _, train, test = build_dataset(cfg, seed)
    sim = build_sim_config(cfg, train, seed)
    out_dir = _resolve_out_dir(args, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    for mode in modes:
        trace = _RUNNERS[mode](train, sim, test)
        write_trace_csv(trace, out_dir / f"trace_{mode}.csv")
        write_summary_json(trace, out_dir / f"summary_{mode}.json")
        mean = trace.final_record.metric_mean()
        shown = "n/a" if mean is None else f"{mean:.4f}"
        print(
            f"[{mode}] epochs={len(trace.records)} "
            f"final {trace.metric_name} mean={shown} "
            f"time={trace.final_record.time:.4g}"
        )
    write_manifest(
        out_dir / "manifest.json",
        config_text=Path(args.config).read_text(),
        seed=seed,
        backend=backend.backend_name(),
        version=__version__,
    )
    print(f"wrote {out_dir}")
    return 0


def cmd_calibrate_delays(args) -> int:
    _apply_backend(args)
    ns = benchmarks.DEFAULT_NS if not args.quick else (200, 400, 800)
    ds = benchmarks.DEFAULT_DS if not args.quick else (8, 16, 32)
    model, fit = benchmarks.calibrate_delay_model(
        args.problem, ns, ds, reps=args.reps, seed=args.seed
    )
    payload = {
        "problem": args.problem,
        "backend": backend.backend_name(),
        "c_nd": model.c_nd,
        "c_n": model.c_n,
        "c_d": model.c_d,
        "c_0": model.c_0,
        "sigma_ratio": model.sigma_ratio,
        "fit_r_squared": fit.r_squared,
    }
    text = yaml.safe_dump(payload, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output}")
    print(text.rstrip())
    print(f"fit R^2 = {fit.r_squared:.4f}")
    return 0


def cmd_bench(args) -> int:
    _apply_backend(args)
    ns = benchmarks.DEFAULT_NS if not args.quick else (200, 400, 800)
    ds = benchmarks.DEFAULT_DS if not args.quick else (8, 16, 32)
    results: dict = {"backend": backend.backend_name()}
    for problem in PROBLEMS:
        samples = benchmarks.measure_grid(problem, ns, ds, reps=args.reps, seed=args.seed)
        fit = benchmarks.fit_cost_model(samples)
        results[problem] = {
            "fit": {
                "c_nd": fit.c_nd, "c_n": fit.c_n, "c_d": fit.c_d, "c_0": fit.c_0,
                "r_squared": fit.r_squared,
            },
            "samples": [{"n": s.n, "d": s.d, "seconds": s.seconds} for s in samples],
        }
        print(f"[{problem}] cost fit R^2 = {fit.r_squared:.4f}")
    ratio = benchmarks.epoch_time_ratio(ns, ds, reps=args.reps, seed=args.seed)
    results["regression_over_classification"] = ratio
    print(f"regression/classification epoch time ratio = {ratio:.3f}")
    compare = benchmarks.compare_backends(PROBLEM_CLASSIFICATION, reps=args.reps, seed=args.seed)
    results["backend_seconds"] = compare
    for name, seconds in compare.items():
        print(f"[backend {name}] classification epoch at n=800, d=32: {seconds * 1e3:.3f} ms")
    if args.output:
        Path(args.output).write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.output}")
    failures = []
    for problem in PROBLEMS:
        r2 = results[problem]["fit"]["r_squared"]
        if r2 < benchmarks.MIN_FIT_R2:
            failures.append(f"{problem} cost fit R^2 {r2:.4f} < {benchmarks.MIN_FIT_R2}")
    lo, hi = benchmarks.RATIO_BOUNDS
    if not lo <= ratio <= hi:
        failures.append(f"epoch time ratio {ratio:.3f} outside [{lo}, {hi}]")
    if failures:
        raise BenchmarkError("; ".join(failures))
    return 0


def cmd_mask_study(args) -> int:
    cfg = load_config(args.config)
    _apply_backend(args)
    if _require(cfg, "problem") != PROBLEM_CLASSIFICATION:
        raise ConfigError("mask-study requires problem: classification")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    study = cfg.get("mask_study", {})
    bernoulli_grid = [float(p) for p in study.get("bernoulli_grid", (1.0, 0.75, 0.5, 0.25))]
    beta_grid = [float(r) for r in study.get("beta_ratio_grid", (1.0, 0.75, 0.5, 0.25))]
    light_n = int(study.get("light_n", 100))
    base_mask = build_mask_spec(cfg)

    full_tasks, train, test = build_dataset(cfg, seed)
    light_tasks = truncate_per_task(full_tasks, light_n, spawn_rng(seed, DOMAIN_SPLIT, 2))
    split_cfg = cfg.get("split", {})
    fraction = float(split_cfg.get("train_fraction", 0.7))
    light_train, light_test = [], []
    for task in light_tasks:
        tr, te = split_train_test(
            task, fraction, spawn_rng(seed, DOMAIN_SPLIT, 3, task.task_id), True
        )
        light_train.append(tr)
        light_test.append(te)

    out_dir = _resolve_out_dir(args, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)

    def variants():
        yield "unmasked", MaskSpec(family="none")
        for p in bernoulli_grid:
            yield f"bernoulli_p{int(round(p * 100)):03d}", replace(
                base_mask, family="bernoulli", keep_prob=p, unaffected_ratio=0.0
            )
        for r in beta_grid:
            yield f"beta_r{int(round(r * 100)):03d}", replace(
                base_mask, family="beta", unaffected_ratio=r
            )

    summary: dict = {"seed": seed, "light_n": light_n, "full": {}, "light": {}}
    for scope, tr_tasks, te_tasks in (("full", train, test), ("light", light_train, light_test)):
        sim = build_sim_config(cfg, tr_tasks, seed)
        local = run_local_baseline(tr_tasks, sim, te_tasks)
        write_trace_csv(local, out_dir / f"trace_local_{scope}.csv")
        summary[scope]["local"] = local.final_record.metric_mean()
        for name, mask in variants():
            trace = run_simulation(tr_tasks, replace(sim, mask=mask), te_tasks)
            write_trace_csv(trace, out_dir / f"trace_mtl_{name}_{scope}.csv")
            summary[scope][name] = trace.final_record.metric_mean()
            print(f"[{scope}/{name}] final balanced accuracy mean = {summary[scope][name]:.4f}")
        print(f"[{scope}/local] final balanced accuracy mean = {summary[scope]['local']:.4f}")
    (out_dir / "study_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedsvm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fedsvm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate the configured training modes")
    run.add_argument("config", help="YAML experiment config")
    run.add_argument("--output", help="output directory (overrides output_dir)")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--backend", choices=("auto", "compiled", "python"))
    run.set_defaults(handler=cmd_run)

    cal = sub.add_parser("calibrate-delays", help="fit the delay model from real timings")
    cal.add_argument("--problem", choices=PROBLEMS, default=PROBLEM_CLASSIFICATION)
    cal.add_argument("--output", help="write the fitted model as YAML")
    cal.add_argument("--reps", type=int, default=5)
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--quick", action="store_true", help="smaller grid")
    cal.add_argument("--backend", choices=("auto", "compiled", "python"))
    cal.set_defaults(handler=cmd_calibrate_delays)

    bench = sub.add_parser("bench", help="scaling fit, cost ratio, and backend comparison")
    bench.add_argument("--output", help="write results as JSON")
    bench.add_argument("--reps", type=int, default=5)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--quick", action="store_true", help="smaller grid")
    bench.add_argument("--backend", choices=("auto", "compiled", "python"))
    bench.set_defaults(handler=cmd_bench)

    study = sub.add_parser("mask-study", help="masking grid vs the local baseline")
    study.add_argument("config", help="YAML experiment config")
    study.add_argument("--output", help="output directory (overrides output_dir)")
    study.add_argument("--seed", type=int, help="override the config seed")
    study.add_argument("--backend", choices=("auto", "compiled", "python"))
    study.set_defaults(handler=cmd_mask_study)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, InvalidInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except BenchmarkError as exc:
        print(f"benchmark failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
